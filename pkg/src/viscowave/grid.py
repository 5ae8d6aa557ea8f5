"""Uniform 2D cell grid, sampled parameter fields and the VCGR binary format.

VCGR layout (little endian)::

    4s   magic  b"VCGR"
    u32  nx     columns of every stored array
    u32  ny     rows of every stored array
    u32  nf     number of arrays
    nf * ny * nx float64, row-major, one array after the other
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"VCGR"
_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    dx: float
    dy: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError(f"grid needs at least 8x8 cells, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("grid spacings must be positive")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def square(cls, n, length=1.0, origin=(0.0, 0.0)):
        return cls(n, n, length / n, length / n, origin)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def extent(self):
        x0, y0 = self.origin
        return (x0, x0 + self.nx * self.dx, y0, y0 + self.ny * self.dy)

    @property
    def cell_area(self):
        return self.dx * self.dy

    def centers(self):
        """(X, Y) coordinates of cell centres, each shape (ny, nx)."""
        x0, y0 = self.origin
        x = x0 + (np.arange(self.nx) + 0.5) * self.dx
        y = y0 + (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y)

    def xfaces(self):
        """Coordinates of vertical faces (where vx lives), shape (ny, nx+1)."""
        x0, y0 = self.origin
        x = x0 + np.arange(self.nx + 1) * self.dx
        y = y0 + (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y)

    def yfaces(self):
        """Coordinates of horizontal faces (where vy lives), shape (ny+1, nx)."""
        x0, y0 = self.origin
        x = x0 + (np.arange(self.nx) + 0.5) * self.dx
        y = y0 + np.arange(self.ny + 1) * self.dy
        return np.meshgrid(x, y)

    def corners(self):
        """Coordinates of cell corners (where shear lives), shape (ny+1, nx+1)."""
        x0, y0 = self.origin
        x = x0 + np.arange(self.nx + 1) * self.dx
        y = y0 + np.arange(self.ny + 1) * self.dy
        return np.meshgrid(x, y)

    def cell_index(self, x):
        """(iy, ix) of the cell containing position ``x``, clipped to the grid."""
        x0, y0 = self.origin
        ix = int(np.clip(np.floor((x[0] - x0) / self.dx), 0, self.nx - 1))
        iy = int(np.clip(np.floor((x[1] - y0) / self.dy), 0, self.ny - 1))
        return iy, ix


class SpatialField:
    """Piecewise-constant per-cell parameter field on a :class:`Grid`."""

    def __init__(self, values, grid):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"field shape {values.shape} does not match grid {grid.shape}")
        self.values = values
        self.grid = grid

    def __call__(self, x):
        return self.values[self.grid.cell_index(x)]

    def min(self):
        return float(self.values.min())

    def max(self):
        return float(self.values.max())

    def __repr__(self):
        return f"SpatialField(min={self.min():.4g}, max={self.max():.4g}, grid={self.grid.shape})"


def resolve(p, where=None):
    """Evaluate a parameter (number, :class:`SpatialField`, or array) at ``where``.

    ``where`` is ``None`` (parameter must be spatially constant), a position
    ``(x, y)``, or a :class:`Grid` (returns per-cell values).
    """
    if isinstance(p, SpatialField):
        if where is None:
            raise ValueError("spatially varying parameter needs a position")
        if isinstance(where, Grid):
            if where.shape != p.grid.shape:
                raise ValueError("field grid does not match requested grid")
            return p.values
        return float(p(where))
    return p


def write_vcgr(path, arrays):
    """Write equal-shape 2D arrays to ``path`` in VCGR format."""
    arrays = [np.ascontiguousarray(a, dtype="<f8") for a in arrays]
    if not arrays:
        raise ValueError("nothing to write")
    ny, nx = arrays[0].shape
    for a in arrays:
        if a.shape != (ny, nx):
            raise ValueError("all arrays in a VCGR file must share one shape")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, nx, ny, len(arrays)))
        for a in arrays:
            fh.write(a.tobytes(order="C"))


def read_vcgr(path):
    """Read a VCGR file; returns an array of shape (nf, ny, nx)."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, nx, ny, nf = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * nx * ny * nf
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    return np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(nf, ny, nx).copy()


def load_field(path, grid):
    """Load a single-array VCGR file as a :class:`SpatialField`."""
    arr = read_vcgr(path)
    if arr.shape[0] != 1:
        raise ValueError(f"{path}: expected one array, found {arr.shape[0]}")
    return SpatialField(arr[0], grid)
