"""Time-dependent (aging) coefficient laws.

A law gives a coefficient and its time derivative at time ``t`` and at a
position, a :class:`~viscowave.grid.Grid` (per-cell arrays) or nowhere
(spatially constant).  Laws must be positive and non-increasing in time.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameter
from ..grid import Grid, SpatialField, resolve


class ConstantLaw:
    def __init__(self, value):
        if np.any(np.asarray(value.values if isinstance(value, SpatialField) else value) <= 0):
            raise InvalidParameter("coefficient must be positive")
        self.v = value

    def value(self, t, where=None):
        return resolve(self.v, where)

    def rate(self, t, where=None):
        return np.zeros_like(np.asarray(resolve(self.v, where), dtype=float))

    def __repr__(self):
        return f"ConstantLaw({self.v!r})"


class ExpAging:
    """``final + (initial - final) exp(-t / timescale)`` with ``initial >= final > 0``."""

    def __init__(self, initial, final, timescale):
        lo = np.asarray(final.values if isinstance(final, SpatialField) else final)
        hi = np.asarray(initial.values if isinstance(initial, SpatialField) else initial)
        if np.any(lo <= 0) or np.any(hi < lo) or timescale <= 0:
            raise InvalidParameter("exponential aging needs initial >= final > 0 and timescale > 0")
        self.initial, self.final, self.timescale = initial, final, float(timescale)

    def value(self, t, where=None):
        a, b = resolve(self.initial, where), resolve(self.final, where)
        return b + (a - b) * np.exp(-t / self.timescale)

    def rate(self, t, where=None):
        a, b = resolve(self.initial, where), resolve(self.final, where)
        return -(a - b) / self.timescale * np.exp(-t / self.timescale)

    def __repr__(self):
        return f"ExpAging({self.initial!r}, {self.final!r}, {self.timescale})"


class AgingTable:
    """Sampled coefficient, linear in time between samples, constant after the last.

    ``values`` has shape ``(nt,)`` or ``(nt, ny, nx)`` (per-cell tables on
    ``grid``).  The derivative is the slope of the segment to the right of
    ``t`` (so it is exact for the forward half-open interval).
    """

    def __init__(self, times, values, grid=None):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise InvalidParameter("aging table times must be strictly increasing with >= 2 samples")
        if times[0] != 0.0:
            raise InvalidParameter("aging table must start at t=0")
        if values.shape[0] != times.size:
            raise InvalidParameter("aging table values do not match its times")
        if values.ndim == 3 and (grid is None or values.shape[1:] != grid.shape):
            raise InvalidParameter("per-cell aging table needs a matching grid")
        if np.any(values <= 0):
            raise InvalidParameter("aging coefficient must stay positive")
        if np.any(np.diff(values, axis=0) > 0):
            raise InvalidParameter("aging coefficient must be non-increasing in time")
        self.times, self.values, self.grid = times, values, grid

    @property
    def spatial(self):
        return self.values.ndim == 3

    def _column(self, where):
        if self.values.ndim == 1:
            return self.values
        if isinstance(where, Grid):
            return self.values
        if where is None:
            raise InvalidParameter("spatially varying aging table needs a position")
        iy, ix = self.grid.cell_index(where)
        return self.values[:, iy, ix]

    def _segment(self, t):
        return int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2))

    def value(self, t, where=None):
        col = self._column(where)
        if t >= self.times[-1]:
            return col[-1]
        i = self._segment(t)
        u = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
        return (1 - u) * col[i] + u * col[i + 1]

    def rate(self, t, where=None):
        col = self._column(where)
        if t >= self.times[-1]:
            return np.zeros_like(col[-1])
        i = self._segment(t)
        return (col[i + 1] - col[i]) / (self.times[i + 1] - self.times[i])

    def __repr__(self):
        return f"AgingTable({self.times.size} samples)"


def as_law(v):
    if hasattr(v, "value") and hasattr(v, "rate"):
        return v
    return ConstantLaw(v)
