"""Staggered-grid plane-strain wave solver with exponential memory variables."""

from .config import BOUNDARIES, PULSE_KINDS, Pulse, SimConfig, bump
from .solver import Medium, Snapshot, Solver, WaveState, corner_harmonic, stable_dt, time_step

__all__ = [
    "BOUNDARIES",
    "PULSE_KINDS",
    "Medium",
    "Pulse",
    "SimConfig",
    "Snapshot",
    "Solver",
    "WaveState",
    "bump",
    "corner_harmonic",
    "stable_dt",
    "time_step",
]
