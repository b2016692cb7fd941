"""Umbilic point detection, closed-form locations, and epsilon thresholds.

Umbilics are the zeros of the off-diagonal/anisotropy part of the Weingarten
matrix.  The finder grid-scans every chart of the atlas, refines residual
minima with a damped Newton iteration on the two-equation system
(G f - F g, G e - E g), and deduplicates across charts.  Flat umbilics (the
axis points of the power family are planar points) make that system vanish
to high order, so the refiner accelerates the resulting geometric step decay
by extrapolation and finishes with exact symmetry-line snapping.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import forms as fm
from . import surface as sf
from .errors import NotApplicable

log = logging.getLogger(__name__)

ISOLATED = "isolated"
NON_ISOLATED = "non_isolated"


@dataclass(frozen=True)
class UmbilicRecord:
    ambient: tuple            # (x, y, z)
    chart: sf.ChartId         # chart the point was refined in
    uv: tuple                 # chart coordinates there
    residual: float
    kind: str = ISOLATED
    index: float = None       # half-integer winding index, filled in later

    def to_json(self) -> dict:
        d = {
            "xyz": list(self.ambient),
            "chart": self.chart.label,
            "uv": list(self.uv),
            "residual": self.residual,
            "kind": self.kind,
        }
        if self.index is not None:
            d["index"] = self.index
        return d


@dataclass(frozen=True)
class ThresholdReport:
    regime: str               # "a_greater_b" or "a_less_b"
    epsilon_critical: float
    predicted_count_below: int
    predicted_count_above: int

    def to_json(self) -> dict:
        return {
            "regime": self.regime,
            "epsilon_critical": self.epsilon_critical,
            "count_below": self.predicted_count_below,
            "count_above": self.predicted_count_above,
        }


@dataclass(frozen=True)
class FindConfig:
    grid_n: int = 64
    tol_find: float = 1e-10
    r_dedup: float = None       # default: 1e-6 * surface diameter
    max_newton: int = 100
    seed_margin: float = 1e-6   # radicand margin for grid seeds


def umbilic_residual_arrays(spec, chart, u, v):
    """Vectorized scaled umbilic residual at valid chart points."""
    E, F, G, e, f, g = fm.closed_forms_arrays(spec, chart, u, v)
    det = E * G - F * F
    s = np.sqrt((G * f - F * g) ** 2 + (E * f - e * F) ** 2 + (G * e - E * g) ** 2)
    return s / (det * (1.0 + np.abs(e) + np.abs(f) + np.abs(g)))


def umbilic_residual(spec, cp) -> float:
    """Scale-invariant umbilic residual; zero exactly at umbilic points.

    Norm of (Gf - Fg, Ef - eF, Ge - Eg) over (EG - F^2)(1 + |e| + |f| + |g|).
    """
    fm._check_valid(spec, cp)
    return float(umbilic_residual_arrays(spec, cp.chart, cp.u, cp.v))


def residual_from_forms(ff) -> float:
    """Same residual computed from an existing coefficient set."""
    det = ff.det_first
    s = math.sqrt(
        (ff.G * ff.f - ff.F * ff.g) ** 2
        + (ff.E * ff.f - ff.e * ff.F) ** 2
        + (ff.G * ff.e - ff.E * ff.g) ** 2
    )
    return s / (det * (1.0 + abs(ff.e) + abs(ff.f) + abs(ff.g)))


# ---------------------------------------------------------------------------
# Newton refinement


def _system(spec, chart, u, v):
    """Two-equation umbilic system (Gf - Fg, Ge - Eg), unscaled."""
    E, F, G, e, f, g = fm.closed_forms_arrays(spec, chart, u, v)
    return np.array([float(G * f - F * g), float(G * e - E * g)])


def _valid_margin(spec, chart, u, v, margin):
    return bool(sf.radicand(spec, chart, u, v) >= margin)


def _newton_refine(spec, chart, u0, v0, cfg: FindConfig):
    """Damped Newton with geometric-step extrapolation.

    Flat umbilics make Newton converge only linearly (ratio (m-1)/m for a
    root of multiplicity m); when three consecutive undamped steps decay
    geometrically the remaining tail is summed in one jump.  Returns the
    best point reached; acceptance is the caller's residual check.
    """
    x = np.array([u0, v0], float)
    margin = sf.DELTA_VALID * 10.0
    fx = _system(spec, chart, x[0], x[1])
    steps = []
    for _ in range(cfg.max_newton):
        nf = np.linalg.norm(fx)
        h = 1e-7 * (1.0 + abs(x[0]) + abs(x[1]))
        jac = np.empty((2, 2))
        ok_j = True
        for j in range(2):
            xp = x.copy()
            xp[j] += h
            xm = x.copy()
            xm[j] -= h
            if not (
                _valid_margin(spec, chart, xp[0], xp[1], margin)
                and _valid_margin(spec, chart, xm[0], xm[1], margin)
            ):
                ok_j = False
                break
            jac[:, j] = (_system(spec, chart, xp[0], xp[1]) - _system(spec, chart, xm[0], xm[1])) / (2.0 * h)
        if not ok_j:
            break
        try:
            step = np.linalg.solve(jac, -fx)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        accepted = False
        for _ in range(7):
            xt = x + lam * step
            if _valid_margin(spec, chart, xt[0], xt[1], margin):
                ft = _system(spec, chart, xt[0], xt[1])
                if np.linalg.norm(ft) < nf or np.linalg.norm(lam * step) < 1e-15:
                    x, fx = xt, ft
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            break
        if lam == 1.0:
            steps.append(step)
            if len(steps) >= 3:
                d1, d2, d3 = steps[-3], steps[-2], steps[-1]
                n1, n2, n3 = (np.linalg.norm(d) for d in (d1, d2, d3))
                if n1 > 0 and n2 > 0:
                    r1, r2 = n2 / n1, n3 / n2
                    cos = float(d2 @ d3) / max(n2 * n3, 1e-300)
                    if 0.2 < r2 < 0.98 and abs(r1 - r2) < 0.1 and cos > 0.99:
                        xe = x + d3 * (r2 / (1.0 - r2))
                        if _valid_margin(spec, chart, xe[0], xe[1], margin):
                            fe = _system(spec, chart, xe[0], xe[1])
                            if np.linalg.norm(fe) <= np.linalg.norm(fx):
                                x, fx = xe, fe
                                steps.clear()
        else:
            steps.clear()
        if np.linalg.norm(lam * step) < 1e-14 * (1.0 + np.linalg.norm(x)):
            break
    return float(x[0]), float(x[1])


def _snap_symmetry(spec, chart, u, v, res):
    """Try exact symmetry-line representatives; keep whichever residual wins.

    The families are mirror-symmetric in each chart coordinate and, when the
    in-plane coefficients coincide, under u <-> v; converged points that are
    numerically on a symmetry locus are replaced by the exact one.
    """
    scale = sum(sf.chart_bounds(spec, chart)) / 2.0
    candidates = []
    if abs(u) < 1e-5 * scale:
        candidates.append((0.0, v))
    if abs(v) < 1e-5 * scale:
        candidates.append((u, 0.0))
    if abs(u) < 1e-5 * scale and abs(v) < 1e-5 * scale:
        candidates.append((0.0, 0.0))
    if abs(u - v) < 1e-5 * scale:
        m = 0.5 * (u + v)
        candidates.append((m, m))
    if abs(u + v) < 1e-5 * scale:
        m = 0.5 * (u - v)
        candidates.append((m, -m))
    best = (u, v, res)
    for cu, cv in candidates:
        if not _valid_margin(spec, chart, cu, cv, sf.DELTA_VALID):
            continue
        r = float(umbilic_residual_arrays(spec, chart, cu, cv))
        if r <= best[2]:
            best = (cu, cv, r)
    return best


def _ring_below(spec, chart, u, v, rad, tol):
    angles = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
    below = 0
    for t in angles:
        pu, pv = u + rad * math.cos(t), v + rad * math.sin(t)
        if not _valid_margin(spec, chart, pu, pv, sf.DELTA_VALID):
            continue
        if float(umbilic_residual_arrays(spec, chart, pu, pv)) < tol:
            below += 1
    return below >= 6


def _probe_non_isolated(spec, chart, u, v, cfg: FindConfig):
    """Non-isolated when probe rings stay below tolerance at two scales.

    The small ring alone misfires on planar umbilics (high-power axis
    points), whose residual vanishes to order 2k - 2 and is below any
    realistic tolerance within a tiny radius; an umbilic continuum is flat
    at every radius, so a macroscopic ring separates the two cases.
    """
    small = 100.0 * math.sqrt(cfg.tol_find)
    macro = 0.05 * min(sf.chart_bounds(spec, chart))
    return _ring_below(spec, chart, u, v, small, cfg.tol_find) and _ring_below(
        spec, chart, u, v, max(macro, 2.0 * small), cfg.tol_find
    )


def _grid_seeds(spec, chart, cfg: FindConfig):
    """Residual local minima on the chart grid (cell centers)."""
    n = cfg.grid_n
    umax, vmax = sf.chart_bounds(spec, chart)
    us = (np.arange(n) + 0.5) / n * 2.0 * umax - umax
    vs = (np.arange(n) + 0.5) / n * 2.0 * vmax - vmax
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    valid = sf.chart_valid(spec, chart, uu, vv, margin=cfg.seed_margin)
    res = np.full((n, n), np.inf)
    if np.any(valid):
        res[valid] = umbilic_residual_arrays(spec, chart, uu[valid], vv[valid])
    padded = np.pad(res, 1, constant_values=np.inf)
    neigh = np.stack(
        [
            padded[1 + di : 1 + di + n, 1 + dj : 1 + dj + n]
            for di in (-1, 0, 1)
            for dj in (-1, 0, 1)
            if not (di == 0 and dj == 0)
        ]
    )
    is_min = valid & (res <= neigh.min(axis=0))
    idx = np.argwhere(is_min)
    # A continuum (sphere-like spec) turns nearly every cell into a minimum;
    # a deterministic stride keeps the seed count bounded.
    if len(idx) > n:
        idx = idx[:: max(1, len(idx) // n)]
    return [(float(uu[i, j]), float(vv[i, j])) for i, j in idx]


def find_umbilics(spec, cfg: FindConfig = None):
    """Locate umbilic points across the whole atlas.

    Returns deduplicated :class:`UmbilicRecord` entries sorted by rounded
    ambient coordinates.  Non-isolated continua (spheres) are collapsed to a
    single representative record flagged ``non_isolated``.
    """
    cfg = cfg or FindConfig()
    r_dedup = cfg.r_dedup
    if r_dedup is None:
        r_dedup = 1e-6 * sf.surface_diameter(spec)

    found = []
    for chart in sf.chart_atlas(spec):
        for u0, v0 in _grid_seeds(spec, chart, cfg):
            u, v = _newton_refine(spec, chart, u0, v0, cfg)
            res = float(umbilic_residual_arrays(spec, chart, u, v))
            u, v, res = _snap_symmetry(spec, chart, u, v, res)
            if not res < cfg.tol_find:
                log.debug(
                    "seed (%.3f, %.3f) on %s did not converge (residual %.2e)",
                    u0, v0, chart.label, res,
                )
                continue
            point = sf.chart_points(spec, chart, u, v)
            kind = (
                NON_ISOLATED
                if _probe_non_isolated(spec, chart, u, v, cfg)
                else ISOLATED
            )
            found.append(UmbilicRecord(tuple(point), chart, (u, v), res, kind))

    if any(r.kind == NON_ISOLATED for r in found):
        # Everywhere-umbilic surface: report one representative.
        rep = min(
            (r for r in found if r.kind == NON_ISOLATED), key=lambda r: r.residual
        )
        return [_snap_ambient(rep, sf.surface_diameter(spec))]

    found.sort(key=lambda r: r.residual)
    kept = []
    for rec in found:
        p = np.array(rec.ambient)
        if all(np.linalg.norm(p - np.array(k.ambient)) >= r_dedup for k in kept):
            kept.append(rec)
    diam = sf.surface_diameter(spec)
    kept = [_snap_ambient(r, diam) for r in kept]
    kept.sort(key=lambda r: tuple(round(c, 9) for c in r.ambient))
    return kept


def _snap_ambient(rec: UmbilicRecord, diam: float) -> UmbilicRecord:
    """Zero out coordinates that vanished to refinement accuracy."""
    amb = tuple(0.0 if abs(c) < 1e-9 * diam else float(c) for c in rec.ambient)
    return replace(rec, ambient=amb)


# ---------------------------------------------------------------------------
# Closed-form locations and thresholds


def closed_form_umbilics(spec):
    """Umbilic locations known in closed form, as ambient points.

    * superquadric: all 14 (six axis points and eight balanced diagonal
      points).
    * perturbed ellipsoid, a != b: the two poles, plus for epsilon above the
      critical value the eight mid-latitude (a > b) or eight diagonal
      (a < b) points.  The a < b equator octet has no closed form and is
      found numerically only.
    * ellipsoid with distinct coefficients: the classical four points.

    Raises NotApplicable where the dichotomy is silent (a = b perturbed
    surfaces with epsilon > 0, ellipsoids with repeated coefficients).
    """
    if spec.family == sf.SUPERQUADRIC:
        a, b, c, m = spec.a, spec.b, spec.c, 2 * spec.k
        pts = []
        for i, coef in enumerate((a, b, c)):
            for s in (1.0, -1.0):
                p = [0.0, 0.0, 0.0]
                p[i] = s * coef ** (-1.0 / m)
                pts.append(np.array(p))
        ssum = b * c + c * a + a * b
        base = np.array(
            [
                (b * c / a) ** (1.0 / m),
                (a * c / b) ** (1.0 / m),
                (a * b / c) ** (1.0 / m),
            ]
        ) * ssum ** (-1.0 / m)
        for sx in (1.0, -1.0):
            for sy in (1.0, -1.0):
                for sz in (1.0, -1.0):
                    pts.append(base * (sx, sy, sz))
        return pts

    if spec.family == sf.PERTURBED_ELLIPSOID:
        a, b, eps = spec.a, spec.b, spec.epsilon
        if eps == 0.0:
            if a == b:
                raise NotApplicable("sphere: every point is umbilic")
            zp = math.sqrt(1.0 / b)
            return [np.array([0.0, 0.0, zp]), np.array([0.0, 0.0, -zp])]
        if a == b:
            raise NotApplicable(
                "a = b with epsilon > 0 is outside the threshold dichotomy"
            )
        zp = math.sqrt(1.0 / b)
        pts = [np.array([0.0, 0.0, zp]), np.array([0.0, 0.0, -zp])]
        thr = critical_epsilon(a, b)
        if eps <= thr.epsilon_critical:
            return pts
        if a > b:
            v2 = (-a + math.sqrt(3.0 * b * (a * a + 4.0 * eps) / (2.0 * a + b))) / (
                2.0 * eps
            )
            z2 = (a - b) * (a * a + 4.0 * eps) / (2.0 * b * eps * (2.0 * a + b))
            vs, zs = math.sqrt(v2), math.sqrt(z2)
            for s1 in (1.0, -1.0):
                for s2 in (1.0, -1.0):
                    pts.append(np.array([0.0, s1 * vs, s2 * zs]))
                    pts.append(np.array([s1 * vs, 0.0, s2 * zs]))
        else:
            u2 = (b - a) / (6.0 * eps)
            z2 = (5.0 * a * a - 4.0 * a * b - b * b + 18.0 * eps) / (18.0 * b * eps)
            us, zs = math.sqrt(u2), math.sqrt(z2)
            for s1 in (1.0, -1.0):
                for s2 in (1.0, -1.0):
                    for s3 in (1.0, -1.0):
                        pts.append(np.array([s1 * us, s2 * us, s3 * zs]))
        return pts

    # Ellipsoid: umbilics lie in the plane of the middle coefficient.
    a, b, c = spec.a, spec.b, spec.c
    if len({a, b, c}) != 3:
        raise NotApplicable("ellipsoid umbilic formula needs distinct a, b, c")
    order = sorted(range(3), key=lambda i: (a, b, c)[i])
    lo, mid, hi = order
    cs = (a, b, c)
    ci, cj, cl = cs[lo], cs[mid], cs[hi]
    x2 = cl * (cj - ci) / (ci * cj * (cl - ci))
    z2 = ci * (cl - cj) / (cj * cl * (cl - ci))
    pts = []
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            p = [0.0, 0.0, 0.0]
            p[lo] = s1 * math.sqrt(x2)
            p[hi] = s2 * math.sqrt(z2)
            pts.append(np.array(p))
    return pts


A_GREATER_B = "a_greater_b"
A_LESS_B = "a_less_b"


def critical_epsilon(a, b) -> ThresholdReport:
    """Critical quartic perturbation separating the umbilic-count regimes.

    For a > b the count jumps 2 -> 10 at eps = a^2 (a/b - 1) / 6; for a < b
    it jumps 2 -> 18 at eps = (5a + b)(b - a) / 18.
    """
    if not (a > 0 and b > 0):
        raise NotApplicable("coefficients must be positive")
    if a == b:
        raise NotApplicable("a = b has no threshold (no count dichotomy)")
    if a > b:
        return ThresholdReport(A_GREATER_B, a * a * (a / b - 1.0) / 6.0, 2, 10)
    return ThresholdReport(A_LESS_B, (5.0 * a + b) * (b - a) / 18.0, 2, 18)


def expected_count(spec):
    """Umbilic count implied by the closed-form results, or None."""
    if spec.family == sf.SUPERQUADRIC:
        return 14
    if spec.family == sf.ELLIPSOID:
        return 4 if len({spec.a, spec.b, spec.c}) == 3 else None
    a, b, eps = spec.a, spec.b, spec.epsilon
    if a == b:
        return None
    if eps == 0.0:
        return 2
    thr = critical_epsilon(a, b)
    if eps <= thr.epsilon_critical:
        return thr.predicted_count_below
    return thr.predicted_count_above


def match_distance(points_a, points_b) -> float:
    """Directed Hausdorff distance from set A to set B (max-min)."""
    if not points_a:
        return 0.0
    if not points_b:
        return math.inf
    pa = np.array([np.asarray(p, float) for p in points_a])
    pb = np.array([np.asarray(p, float) for p in points_b])
    d = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=-1)
    return float(d.min(axis=1).max())
