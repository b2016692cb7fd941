"""Shared fixtures: reference specs, samplers, and cached pipeline results."""

import json
from importlib import resources

import numpy as np
import pytest

from umbilics import forms as fm
from umbilics import index as ix
from umbilics import surface as sf
from umbilics import umbilic as um
from umbilics.surface import SurfaceSpec


def bundled_specs():
    """name -> SurfaceSpec for every parameter set shipped with the package."""
    root = resources.files("umbilics").joinpath("specs")
    out = {}
    for p in sorted(root.iterdir(), key=lambda p: p.name):
        if p.name.endswith(".json"):
            out[p.name[:-5]] = SurfaceSpec.from_json(json.loads(p.read_text()))
    return out


BUNDLED = bundled_specs()

SQ_1112 = BUNDLED["sq_1112"]
SQ_2352 = BUNDLED["sq_2352"]
PE_GT = BUNDLED["pe_gt"]                  # a=0.516 > b=0.3, eps=0.1
PE_LT = BUNDLED["pe_lt"]                  # a=0.3 < b=0.516, eps=0.1
ELL_123 = BUNDLED["ellipsoid_123"]
SPHERE = SurfaceSpec.perturbed_ellipsoid(1.0, 1.0, 0.0)


class _ResultCache:
    """Lazily computed find/index results, shared across test modules."""

    def __init__(self):
        self._found = {}
        self._indexed = {}

    def records(self, spec):
        key = repr(spec)
        if key not in self._found:
            self._found[key] = um.find_umbilics(spec)
        return self._found[key]

    def indexed(self, spec):
        key = repr(spec)
        if key not in self._indexed:
            self._indexed[key] = ix.attach_indices(spec, self.records(spec))
        return self._indexed[key]


_CACHE = _ResultCache()


@pytest.fixture(scope="session")
def results():
    return _CACHE


def random_valid_chart_points(spec, chart, n, rng, margin=sf.DELTA_COVER, interior=False):
    """Rejection-sample n chart points with a safe boundary margin.

    With ``interior`` the points additionally keep a boundary distance of
    64 finite-difference base steps, the zone where the numeric-derivative
    path meets both its relative and absolute accuracy targets.
    """
    umax, vmax = sf.chart_bounds(spec, chart)
    us, vs = [], []
    while len(us) < n:
        uu = rng.uniform(-umax, umax, size=4 * n)
        vv = rng.uniform(-vmax, vmax, size=4 * n)
        ok = sf.chart_valid(spec, chart, uu, vv, margin=margin)
        for u, v in zip(uu[ok], vv[ok]):
            if len(us) >= n:
                break
            if interior:
                dist = fm.boundary_distance(spec, chart, float(u), float(v))
                if dist < 64.0 * fm.H_FD * (1.0 + abs(u) + abs(v)):
                    continue
            us.append(float(u))
            vs.append(float(v))
    return np.array(us), np.array(vs)


def random_surface_points(spec, n, rng):
    """Ambient surface points by root-solving f along random rays."""
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    lo = np.zeros(n)
    hi = np.full(n, 1e-3)
    for _ in range(60):  # expand until outside
        vals = sf.implicit_value(spec, hi[:, None] * d)
        inside = vals < 0
        if not inside.any():
            break
        hi[inside] *= 2.0
    for _ in range(80):  # bisection
        mid = 0.5 * (lo + hi)
        vals = sf.implicit_value(spec, mid[:, None] * d)
        inside = vals < 0
        lo[inside] = mid[inside]
        hi[~inside] = mid[~inside]
    return (0.5 * (lo + hi))[:, None] * d
