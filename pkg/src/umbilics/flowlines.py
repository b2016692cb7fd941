"""Lines of curvature: principal-direction quadratic and adaptive tracing.

A curvature line satisfies the homogeneous quadratic

    (fE - eF) u'^2 + (gE - eG) u'v' + (gF - fG) v'^2 = 0

whose two root directions are the principal directions.  The quadratic is
solved projectively in the angle (u', v') = (cos t, sin t), which has no
blow-up when either component vanishes.  Tracing integrates the unit-speed
direction field with an embedded Fehlberg 4(5) pair, keeping line-field
orientation by maximizing the dot product with the previous direction, and
logs a discretization residual per accepted step: the quadratic evaluated on
the cubic-Hermite midpoint derivative of the step, i.e. a measure of how
well the numerical curve satisfies the defining equation between nodes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import forms as fm
from . import surface as sf
from . import umbilic as um
from .errors import AllCoefficientsZero, InvalidChartPoint, StartsAtUmbilic

LENGTH_REACHED = "length_reached"
NEAR_UMBILIC = "near_umbilic"
CHART_BOUNDARY = "chart_boundary"
STEP_UNDERFLOW = "step_underflow"

# Threshold below which all three quadratic coefficients count as zero,
# relative to the natural product scale of the form coefficients.
COEF_ZERO_REL = 1e-12


@dataclass(frozen=True)
class DirectionPair:
    A: float                  # fE - eF
    B: float                  # gE - eG
    C: float                  # gF - fG
    dirs: tuple               # one or two (du, dv), unit in the first form


@dataclass(frozen=True)
class TraceConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    min_step: float = 1e-12
    max_step: float = 1e-2
    umb_stop: float = 1e-6     # umbilic-residual stop radius
    res_bound: float = 1e-5    # advertised per-step residual bound
    excursion_frac: float = 0.02
    initial_sign: int = 1      # +-1: sense of the initial direction

    @property
    def res_target(self) -> float:
        """Step-rejection threshold for the per-step residual.

        Tied to rel_tol so tightening the integrator tolerance tightens the
        realized residuals too; 250 x 1e-8 sits at a quarter of res_bound.
        """
        return 250.0 * self.rel_tol


@dataclass(frozen=True)
class CurveTrace:
    chart: sf.ChartId
    points: tuple              # ChartPoint tuples as (u, v)
    arclengths: tuple
    residuals: tuple           # per accepted step (len(points) - 1 entries)
    stop_reason: str

    def within_residual_bound(self, cfg: TraceConfig = None) -> bool:
        cfg = cfg or TraceConfig()
        if not self.residuals:
            return True
        bad = sum(1 for r in self.residuals if r >= cfg.res_bound)
        return bad <= cfg.excursion_frac * len(self.residuals)


def _quadratic_coefficients(ff):
    A = ff.f * ff.E - ff.e * ff.F
    B = ff.g * ff.E - ff.e * ff.G
    C = ff.g * ff.F - ff.f * ff.G
    return A, B, C


def _root_angles(A, B, C):
    """Both root directions of A c^2 + B c s + C s^2 = 0 as angles mod pi.

    Written via the double angle: the form equals
    (A + C)/2 + (A - C)/2 cos 2t + B/2 sin 2t.
    """
    half_sum = 0.5 * (A + C)
    rx = 0.5 * (A - C)
    ry = 0.5 * B
    amp = math.hypot(rx, ry)
    if amp < 1e-300:
        # All coefficients (numerically) zero: any orthogonal pair serves.
        return 0.0, math.pi / 2.0
    phi = math.atan2(ry, rx)
    ratio = max(-1.0, min(1.0, -half_sum / amp))
    d = math.acos(ratio)
    return ((phi + d) / 2.0) % math.pi, ((phi - d) / 2.0) % math.pi


def principal_quadratic(spec, cp) -> DirectionPair:
    """Quadratic coefficients and its root directions at a chart point.

    Raises AllCoefficientsZero at umbilic points, where the quadratic
    degenerates and every direction is principal.
    """
    ff = fm.forms_closed(spec, cp)
    A, B, C = _quadratic_coefficients(ff)
    scale = (abs(ff.E) + abs(ff.F) + abs(ff.G)) * (abs(ff.e) + abs(ff.f) + abs(ff.g))
    if max(abs(A), abs(B), abs(C)) < COEF_ZERO_REL * scale + 1e-300:
        raise AllCoefficientsZero(
            f"principal quadratic vanishes at ({cp.u}, {cp.v}) on {cp.chart.label}"
        )
    t1, t2 = _root_angles(A, B, C)
    dirs = []
    for t in (t1, t2):
        w = fm._first_form_normalize(ff, (math.cos(t), math.sin(t)))
        dirs.append(w)
    if abs((t1 - t2) % math.pi) < 1e-12:
        dirs = dirs[:1]
    return DirectionPair(A, B, C, tuple(dirs))


def _field_direction(spec, chart, u, v, prev):
    """Principal direction at (u, v) continuing prev (unit in first form)."""
    ff = fm.FundamentalForms(*(float(x) for x in fm.closed_forms_arrays(spec, chart, u, v)))
    A, B, C = _quadratic_coefficients(ff)
    t1, t2 = _root_angles(A, B, C)
    best = None
    best_dot = -math.inf
    for t in (t1, t2):
        w = np.array([math.cos(t), math.sin(t)])
        norm = math.sqrt(
            max(ff.E * w[0] ** 2 + 2 * ff.F * w[0] * w[1] + ff.G * w[1] ** 2, 1e-300)
        )
        w = w / norm
        d = float(w @ prev)
        for cand, dd in ((w, d), (-w, -d)):
            if dd > best_dot:
                best_dot = dd
                best = cand
    return best


# Fehlberg 4(5) embedded pair.
_RKF_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_RKF_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_RKF_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_RKF_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)


def trace_line(spec, start: sf.ChartPoint, branch: int, arclen_max, cfg: TraceConfig = None):
    """Integrate one line of curvature from a non-umbilic start point.

    ``branch`` selects between the two principal directions at the start
    (ordered by angle); ``cfg.initial_sign`` flips the traversal sense.
    Stops at the requested arclength, near an umbilic, at the chart
    validity margin, or on step underflow.
    """
    cfg = cfg or TraceConfig()
    chart = start.chart
    r0 = float(sf.radicand(spec, chart, start.u, start.v))
    if not r0 >= sf.DELTA_VALID:
        raise InvalidChartPoint(f"start ({start.u}, {start.v}) outside {chart.label}")
    # Starting on (or within refinement accuracy of) an umbilic is ill-posed.
    if um.umbilic_residual(spec, start) <= 10.0 * um.FindConfig().tol_find:
        raise StartsAtUmbilic(
            f"({start.u}, {start.v}) on {chart.label} is an umbilic point"
        )

    pair = principal_quadratic(spec, start)
    if branch not in (0, 1):
        raise ValueError("branch must be 0 or 1")
    angles = sorted(math.atan2(d[1], d[0]) % math.pi for d in pair.dirs)
    t0 = angles[min(branch, len(angles) - 1)]
    ff0 = fm.forms_closed(spec, start)
    d = fm._first_form_normalize(ff0, (math.cos(t0), math.sin(t0)))
    prev = np.array(d) * float(cfg.initial_sign)

    x = np.array([start.u, start.v])
    s = 0.0
    h = min(cfg.max_step, max(arclen_max / 16.0, 4.0 * cfg.min_step))
    pts = [(float(x[0]), float(x[1]))]
    arcs = [0.0]
    residuals = []
    stop = LENGTH_REACHED

    def field(y, ref):
        if not sf.chart_valid(spec, chart, y[0], y[1], margin=sf.DELTA_COVER):
            return None
        return _field_direction(spec, chart, y[0], y[1], ref)

    while s < arclen_max - cfg.min_step:
        if um.umbilic_residual_arrays(spec, chart, x[0], x[1]) < cfg.umb_stop:
            stop = NEAR_UMBILIC
            break
        h = min(h, arclen_max - s)
        if h < cfg.min_step:
            stop = STEP_UNDERFLOW
            break
        f0 = field(x, prev)
        if f0 is None:
            stop = CHART_BOUNDARY
            break

        ks = [f0]
        failed = False
        for i in range(1, 6):
            y = x + h * sum(a * k for a, k in zip(_RKF_A[i], ks))
            fi = field(y, f0)
            if fi is None:
                failed = True
                break
            ks.append(fi)
        if failed:
            h *= 0.5
            if h < cfg.min_step:
                stop = CHART_BOUNDARY
                break
            continue

        x5 = x + h * sum(b * k for b, k in zip(_RKF_B5, ks))
        x4 = x + h * sum(b * k for b, k in zip(_RKF_B4, ks))
        err = float(np.linalg.norm(x5 - x4))
        tol = cfg.abs_tol + cfg.rel_tol * float(np.linalg.norm(x5))
        if err > tol:
            h = max(cfg.min_step, 0.9 * h * (tol / err) ** 0.2)
            continue

        f1 = field(x5, f0)
        if f1 is None:
            stop = CHART_BOUNDARY
            break
        res = _step_residual(spec, chart, x, x5, f0, f1, h)
        if res > cfg.res_target:
            if h > 4.0 * cfg.min_step:
                # The (u, v) error estimate missed fast direction-field
                # variation; retry the step at half size.
                h *= 0.5
                continue
            # Direction field effectively discontinuous here (a degenerate
            # curvature band): refuse to emit garbage steps.
            stop = STEP_UNDERFLOW
            break
        residuals.append(res)
        x = x5
        prev = f1
        s += h
        pts.append((float(x[0]), float(x[1])))
        arcs.append(s)
        if err > 0.0:
            h = min(cfg.max_step, 0.9 * h * (tol / err) ** 0.2)
        else:
            h = cfg.max_step

    return CurveTrace(chart, tuple(pts), tuple(arcs), tuple(residuals), stop)


def _step_residual(spec, chart, x0, x1, f0, f1, h):
    """Defining-quadratic residual of the step's Hermite midpoint derivative.

    Scale-free: normalized by the coefficient magnitudes and the squared
    derivative, so a perfectly integrated step scores ~ solver error.
    """
    mid = 0.5 * (x0 + x1) + (h / 8.0) * (f0 - f1)
    dmid = 1.5 * (x1 - x0) / h - 0.25 * (f0 + f1)
    if not sf.chart_valid(spec, chart, mid[0], mid[1], margin=sf.DELTA_VALID):
        mid = 0.5 * (x0 + x1)
    E, F, G, e, f, g = fm.closed_forms_arrays(spec, chart, mid[0], mid[1])
    A = float(f * E - e * F)
    B = float(g * E - e * G)
    C = float(g * F - f * G)
    du, dv = float(dmid[0]), float(dmid[1])
    q = A * du * du + B * du * dv + C * dv * dv
    scale = (abs(A) + abs(B) + abs(C)) * (du * du + dv * dv) + 1e-300
    return abs(q) / scale


def residual_log(trace: CurveTrace):
    """(arclength, log10 residual) pairs for plotting."""
    if not trace.points:
        raise ValueError("empty trace")
    out = []
    for s, r in zip(trace.arclengths[1:], trace.residuals):
        out.append((s, math.log10(max(r, 1e-300))))
    return out


def trace_to_csv(spec, trace: CurveTrace, path):
    """Write a trace as CSV: arclength, u, v, x, y, z, residual."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arclength", "u", "v", "x", "y", "z", "residual"])
        for i, ((u, v), s) in enumerate(zip(trace.points, trace.arclengths)):
            p = sf.chart_points(spec, trace.chart, u, v)
            res = trace.residuals[i - 1] if i > 0 else 0.0
            writer.writerow(
                [f"{val:.17g}" for val in (s, u, v, p[0], p[1], p[2], res)]
            )
