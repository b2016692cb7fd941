"""First/second fundamental forms, shape operator, curvatures, convexity scan.

Two independent evaluation paths are provided and cross-checked in tests:

* :func:`forms_closed` evaluates the analytic second-order jet of the chart
  height function (see :func:`umbilics.surface.height_jet`) and assembles
  the coefficients through the Monge-patch identities;
* :func:`forms_numeric` differentiates the chart map with 4th-order central
  stencils and assembles through explicit ambient frame vectors, knowing
  nothing about the analytic derivatives.

Second-form coefficients use the unit normal, oriented so the principal
curvatures of these convex surfaces come out positive; this fixes the
magnitudes of K, H, k1, k2 while leaving every umbilic/line-of-curvature
equation's zero set unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from . import surface as sf
from .errors import DegenerateMetric, InvalidChartPoint, MarginTooSmall

# Step for 4th-order difference stencils, scaled by (1 + |u| + |v|).
H_FD = float(np.finfo(float).eps) ** 0.2

CONVEXITY_TOL = 1e-10


@dataclass(frozen=True)
class FundamentalForms:
    E: float
    F: float
    G: float
    e: float
    f: float
    g: float

    @property
    def det_first(self):
        return self.E * self.G - self.F * self.F


@dataclass(frozen=True)
class ShapeOperator:
    """Weingarten matrix entries in the chart frame."""

    c00: float
    c01: float
    c10: float
    c11: float

    def as_matrix(self):
        return np.array([[self.c00, self.c01], [self.c10, self.c11]])


@dataclass(frozen=True)
class CurvatureSummary:
    K: float
    H: float
    k1: float                 # larger principal curvature
    k2: float
    dir1: tuple               # chart-coordinate (du, dv), unit in the first form
    dir2: tuple
    degenerate: bool          # |k1 - k2| below tol_umb: dirs are arbitrary


def tol_umb(k1, k2) -> float:
    """Curvature-separation threshold below which a point counts as umbilic."""
    return 1e-9 * (abs(k1) + abs(k2) + 1.0)


def _assemble(su, sv, suu, suv, svv, grad):
    """E, F, G, e, f, g from chart-map derivative vectors (arrays of (..., 3)).

    The unit normal is oriented outward via the implicit gradient and the
    second form is taken against the inward normal, making it positive
    definite on convex surfaces.
    """
    E = np.sum(su * su, axis=-1)
    F = np.sum(su * sv, axis=-1)
    G = np.sum(sv * sv, axis=-1)
    n = np.cross(su, sv)
    w = np.linalg.norm(n, axis=-1)
    sigma = np.where(np.sum(n * grad, axis=-1) >= 0.0, 1.0, -1.0)
    nu = n * (sigma / w)[..., None]
    e = -np.sum(nu * suu, axis=-1)
    f = -np.sum(nu * suv, axis=-1)
    g = -np.sum(nu * svv, axis=-1)
    return E, F, G, e, f, g


def _gradient_component(spec, slot, value):
    """Implicit-gradient component for one ambient coordinate slot."""
    if spec.family == sf.PERTURBED_ELLIPSOID:
        if slot == 2:
            return 2.0 * spec.b * value
        return 2.0 * spec.a * value + 4.0 * spec.epsilon * value**3
    coefs = (spec.a, spec.b, spec.c)
    m = sf.exponent(spec)
    return m * coefs[slot] * value ** (m - 1)


def closed_forms_arrays(spec, chart, u, v):
    """Vectorized closed-form coefficients (E, F, G, e, f, g) at (u, v).

    Uses the Monge-patch identities E = 1 + hu^2, F = hu hv, G = 1 + hv^2
    and |Su x Sv| = sqrt(1 + hu^2 + hv^2); the second form is the height
    Hessian over that norm, signed so it is positive definite on convex
    surfaces (sign fixed by the implicit gradient).  Caller guarantees
    validity; no checks.
    """
    h, hu, hv, huu, huv, hvv = sf.height_jet(spec, chart, u, v)
    E = 1.0 + hu * hu
    F = hu * hv
    G = 1.0 + hv * hv
    w = np.sqrt(1.0 + hu * hu + hv * hv)
    iu, iv, ih = sf.placement(chart)
    beta = (
        _gradient_component(spec, ih, h)
        - hu * _gradient_component(spec, iu, np.asarray(u, dtype=float))
        - hv * _gradient_component(spec, iv, np.asarray(v, dtype=float))
    )
    tau = np.where(beta >= 0.0, 1.0, -1.0)
    e = -tau * huu / w
    f = -tau * huv / w
    g = -tau * hvv / w
    return E, F, G, e, f, g


def _check_valid(spec, cp, margin=sf.DELTA_VALID):
    r = float(sf.radicand(spec, cp.chart, cp.u, cp.v))
    if not r >= margin:
        raise InvalidChartPoint(
            f"chart {cp.chart.label} at ({cp.u}, {cp.v}): radicand {r:.3e}"
        )
    return r


def forms_closed(spec, cp) -> FundamentalForms:
    """Fundamental form coefficients from the analytic chart jet."""
    _check_valid(spec, cp)
    vals = closed_forms_arrays(spec, cp.chart, cp.u, cp.v)
    return FundamentalForms(*(float(x) for x in vals))


def boundary_distance(spec, chart, u, v) -> float:
    """Estimated (u, v)-distance to the chart boundary: radicand over its
    own finite-difference slope.  Infinite where the radicand is flat."""
    r0 = float(sf.radicand(spec, chart, u, v))
    d = 1e-6 * (1.0 + abs(u) + abs(v))
    ru = float(sf.radicand(spec, chart, u + d, v)) - float(sf.radicand(spec, chart, u - d, v))
    rv = float(sf.radicand(spec, chart, u, v + d)) - float(sf.radicand(spec, chart, u, v - d))
    slope = (abs(ru) + abs(rv)) / (2.0 * d)
    if slope <= 0.0:
        return math.inf
    return r0 / slope


def fd_step(spec, chart, u, v) -> float:
    """Difference step: eps^(1/5) position-scaled, shrunk near the boundary.

    Near the chart boundary the height derivatives grow like inverse powers
    of the boundary distance, so the step is clamped to a fraction of that
    distance to keep the relative truncation error at the 1e-6 level.  The
    clamp trades away absolute accuracy on near-zero coefficients (stencil
    rounding grows as the step shrinks); both tolerances hold wherever the
    clamp is inactive, i.e. at boundary distance >= 64 base steps.
    """
    base = H_FD * (1.0 + abs(u) + abs(v))
    return min(base, boundary_distance(spec, chart, u, v) / 64.0)


def forms_numeric(spec, cp, step=None) -> FundamentalForms:
    """Fundamental forms by 4th-order central differencing of the chart map.

    Independent of the analytic jet: only the chart map itself is evaluated.
    Raises MarginTooSmall when the stencil would leave the chart domain or
    sit too close to the boundary for the advertised accuracy.
    """
    _check_valid(spec, cp)
    u, v = float(cp.u), float(cp.v)
    h = step if step is not None else fd_step(spec, cp.chart, u, v)
    if h < 1e-7:
        raise MarginTooSmall(
            f"point ({u}, {v}) too close to the {cp.chart.label} boundary"
        )
    offs = np.arange(-2, 3) * h
    uu, vv = np.meshgrid(u + offs, v + offs, indexing="ij")
    rad = sf.radicand(spec, cp.chart, uu, vv)
    if not np.all(rad >= sf.DELTA_VALID):
        raise MarginTooSmall(
            f"difference stencil leaves chart {cp.chart.label} near ({u}, {v})"
        )
    grid = sf.chart_points(spec, cp.chart, uu, vv)   # (5, 5, 3), center (2, 2)

    # Pairwise antisymmetric differences: on a mirror-symmetric chart slice
    # the opposing samples cancel exactly, so F and f vanish bit-exactly on
    # the symmetry loci just like the closed forms.
    def d1(plus1, minus1, plus2, minus2):
        return (8.0 * (plus1 - minus1) - (plus2 - minus2)) / (12.0 * h)

    def d2(center, plus1, minus1, plus2, minus2):
        return (16.0 * (plus1 + minus1) - (plus2 + minus2) - 30.0 * center) / (
            12.0 * h * h
        )

    su = d1(grid[3, 2], grid[1, 2], grid[4, 2], grid[0, 2])
    sv = d1(grid[2, 3], grid[2, 1], grid[2, 4], grid[2, 0])
    suu = d2(grid[2, 2], grid[3, 2], grid[1, 2], grid[4, 2], grid[0, 2])
    svv = d2(grid[2, 2], grid[2, 3], grid[2, 1], grid[2, 4], grid[2, 0])
    sv_at = [d1(grid[i, 3], grid[i, 1], grid[i, 4], grid[i, 0]) for i in range(5)]
    suv = d1(sv_at[3], sv_at[1], sv_at[4], sv_at[0])

    vals = _assemble(su, sv, suu, suv, svv, sf.implicit_gradient(spec, grid[2, 2]))
    return FundamentalForms(*(float(x) for x in vals))


def shape_operator(ff: FundamentalForms) -> ShapeOperator:
    """Weingarten matrix (inverse first form times second form)."""
    det = ff.det_first
    if not det > 0.0:
        raise DegenerateMetric(f"EG - F^2 = {det:.3e} is not positive")
    E, F, G, e, f, g = ff.E, ff.F, ff.G, ff.e, ff.f, ff.g
    return ShapeOperator(
        c00=(e * G - f * F) / det,
        c01=(f * G - g * F) / det,
        c10=(f * E - e * F) / det,
        c11=(g * E - f * F) / det,
    )


def _eig2(op: ShapeOperator):
    """Real eigenvalues (k1 >= k2) of the 2x2 Weingarten matrix."""
    tr = op.c00 + op.c11
    det = op.c00 * op.c11 - op.c01 * op.c10
    disc = tr * tr / 4.0 - det
    root = math.sqrt(max(disc, 0.0))
    return tr / 2.0 + root, tr / 2.0 - root


def principal_direction(op: ShapeOperator, k):
    """Chart-coordinate eigenvector of the Weingarten matrix for eigenvalue k.

    Picks whichever defining row is better conditioned; not normalized.
    """
    w1 = (op.c01, k - op.c00)
    w2 = (k - op.c11, op.c10)
    n1 = math.hypot(*w1)
    n2 = math.hypot(*w2)
    return w1 if n1 >= n2 else w2


def _first_form_normalize(ff, w):
    du, dv = w
    norm = math.sqrt(
        max(ff.E * du * du + 2.0 * ff.F * du * dv + ff.G * dv * dv, 0.0)
    )
    if norm == 0.0:
        return (0.0, 0.0)
    return (du / norm, dv / norm)


def curvature_summary(spec, cp) -> CurvatureSummary:
    """Curvatures and principal directions at a chart point.

    At (near-)umbilic points the directions are arbitrary; a chart-axis
    aligned first-form-orthonormal basis is returned with ``degenerate``
    set so downstream code can detect rather than consume them.
    """
    ff = forms_closed(spec, cp)
    op = shape_operator(ff)
    det = ff.det_first
    K = (ff.e * ff.g - ff.f * ff.f) / det
    H = (ff.e * ff.G - 2.0 * ff.f * ff.F + ff.g * ff.E) / (2.0 * det)
    k1, k2 = _eig2(op)
    if abs(k1 - k2) < tol_umb(k1, k2):
        d1 = _first_form_normalize(ff, (1.0, 0.0))
        # Gram-Schmidt of the v axis against the u axis in the first form
        d2 = _first_form_normalize(ff, (-ff.F / ff.E, 1.0))
        return CurvatureSummary(K, H, k1, k2, d1, d2, True)
    d1 = _first_form_normalize(ff, principal_direction(op, k1))
    d2 = _first_form_normalize(ff, principal_direction(op, k2))
    return CurvatureSummary(K, H, k1, k2, d1, d2, False)


def gaussian_curvature_arrays(spec, chart, u, v):
    """Vectorized Gaussian curvature at valid (u, v) arrays."""
    E, F, G, e, f, g = closed_forms_arrays(spec, chart, u, v)
    return (e * g - f * f) / (E * G - F * F)


@dataclass(frozen=True)
class ConvexityReport:
    min_K: float
    argmin_chart: str
    argmin_uv: tuple
    samples: int
    passed: bool


def convexity_scan(spec, n_samples, seed=0) -> ConvexityReport:
    """Scan quasi-random valid chart points for the minimum Gaussian curvature.

    Passes when min K >= -CONVEXITY_TOL, i.e. the sampled surface is convex
    up to floating-point noise.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    charts = sf.chart_atlas(spec)
    per_chart = max(1, n_samples // len(charts))
    best = math.inf
    arg_chart = charts[0].label
    arg_uv = (0.0, 0.0)
    total = 0
    sampler = qmc.Halton(d=2, scramble=True, seed=seed)
    for chart in charts:
        umax, vmax = sf.chart_bounds(spec, chart)
        pts = sampler.random(per_chart)
        uu = (2.0 * pts[:, 0] - 1.0) * umax
        vv = (2.0 * pts[:, 1] - 1.0) * vmax
        mask = sf.chart_valid(spec, chart, uu, vv, margin=sf.DELTA_COVER)
        if not np.any(mask):
            continue
        uu, vv = uu[mask], vv[mask]
        total += uu.size
        K = gaussian_curvature_arrays(spec, chart, uu, vv)
        i = int(np.argmin(K))
        if K[i] < best:
            best = float(K[i])
            arg_chart = chart.label
            arg_uv = (float(uu[i]), float(vv[i]))
    return ConvexityReport(best, arg_chart, arg_uv, total, best >= -CONVEXITY_TOL)
