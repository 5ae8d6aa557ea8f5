"""Propagation-speed bounds ``c = sup sqrt(L(x, t) / rho(x))``.

The supremum over a ball is a maximum over a square lattice of points inside
it (plus the centre); the supremum over time is a maximum over ``n_t``
uniform samples of ``[0, t_max]`` for aging kinds and ``t = 0`` otherwise.
Piecewise-constant spatial fields are therefore resolved only up to the
lattice spacing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonPositiveDensity
from ..grid import Grid, SpatialField, resolve
from ..kelvin import lambda_max


@dataclass(frozen=True)
class Ball:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise ValueError("ball radius must be positive")

    def points(self, n=17):
        cx, cy = self.center
        u = np.linspace(-self.radius, self.radius, n)
        X, Y = np.meshgrid(cx + u, cy + u)
        inside = (X - cx) ** 2 + (Y - cy) ** 2 <= self.radius**2
        pts = [(float(x), float(y)) for x, y in zip(X[inside], Y[inside])]
        return [(float(cx), float(cy))] + pts


def _times(model, t_max, n_t):
    if model.aging and t_max > 0:
        return np.linspace(0.0, t_max, n_t)
    return np.array([0.0])


def _rho_at(rho, where):
    r = np.asarray(resolve(rho, where), dtype=float)
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise NonPositiveDensity("density must be positive")
    return r


def _superposed_constant(model, t, where):
    total = 0.0
    for member, w in model.members():
        total = total + w * lambda_max(member.instantaneous(t, where))
    return total


_CONSTANTS = {
    "generic": lambda m, t, w: lambda_max(m.instantaneous(t, w)),
    "model": lambda m, t, w: m.speed_constant(t, w),
    "superposed": _superposed_constant,
}


def _bound(which, model, region, t_max, rho, n_t, n_lattice):
    fn = _CONSTANTS[which]
    if isinstance(region, Grid):
        where_list = [region]
    else:
        uniform = not isinstance(rho, SpatialField) and not _has_fields(model)
        where_list = [region.center] if uniform else region.points(n_lattice)
    best = 0.0
    for where in where_list:
        r = _rho_at(rho, where)
        for t in _times(model, t_max, n_t):
            best = max(best, float(np.max(np.asarray(fn(model, t, where)) / r)))
    return float(np.sqrt(best))


def _has_fields(model):
    seen = set()

    def walk(obj):
        if id(obj) in seen:
            return False
        seen.add(id(obj))
        if isinstance(obj, SpatialField) or getattr(obj, "spatial", False) is True:
            return True
        if isinstance(obj, (list, tuple)):
            return any(walk(o) for o in obj)
        if hasattr(obj, "__dict__"):
            return any(walk(v) for v in vars(obj).values())
        return False

    return walk(model)


def speed_bound_generic(model, region, t_max=0.0, rho=1.0, n_t=33, n_lattice=17):
    """``sup sqrt(lambda_max(C(x,t,t)) / rho(x))``.  ``region`` is a :class:`Ball` or a Grid."""
    return _bound("generic", model, region, t_max, rho, n_t, n_lattice)


def speed_bound_model(model, region, t_max=0.0, rho=1.0, n_t=33, n_lattice=17):
    """Kind-specific bound (e.g. ``lambda + 2 mu`` for isotropic kinds)."""
    return _bound("model", model, region, t_max, rho, n_t, n_lattice)


def speed_bound_superposed(model, region, t_max=0.0, rho=1.0, n_t=33, n_lattice=17):
    """Bound from summing (weighted) member ``lambda_max`` values."""
    return _bound("superposed", model, region, t_max, rho, n_t, n_lattice)
