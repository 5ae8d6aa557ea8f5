"""Simulation configuration and initial velocity pulses."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonPositiveDensity
from ..grid import Grid, SpatialField

BOUNDARIES = ("clamped", "free")
PULSE_KINDS = ("radial", "directional", "plane", "point")


def bump(q):
    """Compactly supported smooth profile ``(1 - q^2)^4`` on ``|q| < 1``."""
    q = np.asarray(q, dtype=float)
    return np.where(np.abs(q) < 1.0, (1.0 - q * q) ** 4, 0.0)


@dataclass(frozen=True)
class Pulse:
    """Initial velocity disturbance.

    ``radial``: ``A bump(r/R) (x - x0)/R`` (outward, vanishes at the centre);
    ``directional``: ``A bump(r/R) d``; ``plane``: ``A bump(((x - x0).d)/R) d``;
    ``point``: a single velocity sample of size ``A`` on the x-face nearest to
    ``center``.  Initial strain is always zero.
    """

    kind: str = "radial"
    center: tuple[float, float] = (0.5, 0.5)
    radius: float = 0.05
    amplitude: float = 1.0
    direction: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}; expected one of {PULSE_KINDS}")
        if self.radius <= 0:
            raise ValueError("pulse radius must be positive")
        d = np.asarray(self.direction, dtype=float)
        if np.linalg.norm(d) == 0:
            raise ValueError("pulse direction must be nonzero")

    def velocity(self, X, Y, component):
        """Velocity component (0 = x, 1 = y) at coordinates ``X, Y``."""
        x0, y0 = self.center
        d = np.asarray(self.direction, dtype=float)
        d = d / np.linalg.norm(d)
        if self.kind == "radial":
            r = np.hypot(X - x0, Y - y0)
            off = (X - x0) if component == 0 else (Y - y0)
            return self.amplitude * bump(r / self.radius) * off / self.radius
        if self.kind == "directional":
            r = np.hypot(X - x0, Y - y0)
            return self.amplitude * bump(r / self.radius) * d[component]
        if self.kind == "plane":
            q = ((X - x0) * d[0] + (Y - y0) * d[1]) / self.radius
            return self.amplitude * bump(q) * d[component]
        return np.zeros_like(X)


@dataclass
class SimConfig:
    grid: Grid
    model: object
    rho: float | SpatialField = 1.0
    t_end: float = 0.1
    dt: float | str = "auto"
    cfl: float = 0.45
    pulses: list = field(default_factory=list)
    boundary: str = "clamped"
    stride: int = 10
    check_every: int = 25
    growth_limit: float = 1.01

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.stride < 1:
            raise ValueError("snapshot stride must be >= 1")
        rho = self.rho.values if isinstance(self.rho, SpatialField) else np.asarray(self.rho, dtype=float)
        if np.any(rho <= 0) or not np.all(np.isfinite(rho)):
            raise NonPositiveDensity("density must be positive everywhere")

    def rho_cells(self):
        if isinstance(self.rho, SpatialField):
            return np.asarray(self.rho.values, dtype=float)
        return np.full(self.grid.shape, float(self.rho))
