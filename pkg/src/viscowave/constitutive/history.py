"""Piecewise-linear strain-rate histories, stored in Kelvin form."""

from __future__ import annotations

import numpy as np

from ..errors import HistoryTooShort
from ..kelvin import from_kelvin_vec, to_kelvin_vec


class StrainHistory:
    """Strain rate sampled at ``times`` and interpolated linearly in between.

    ``rates`` has shape ``(n, *batch, 6)`` (Kelvin vectors), so a single
    object can carry many independent histories on a shared time grid.
    Strain starts from zero at t=0.
    """

    def __init__(self, times, rates):
        times = np.asarray(times, dtype=float)
        rates = np.asarray(rates, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise HistoryTooShort("a history needs at least one sample")
        if times[0] != 0.0:
            raise ValueError(f"history must start at t=0, starts at {times[0]}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("history times must be strictly increasing")
        if rates.shape[0] != times.size or rates.shape[-1] != 6:
            raise ValueError(f"rates shape {rates.shape} does not fit {times.size} samples of Kelvin vectors")
        self.times = times
        self.rates = rates

    @classmethod
    def from_matrices(cls, times, rate_matrices):
        return cls(times, to_kelvin_vec(rate_matrices))

    @classmethod
    def zeros(cls, times, batch=()):
        times = np.asarray(times, dtype=float)
        return cls(times, np.zeros((times.size, *batch, 6)))

    @classmethod
    def sampled(cls, times, rate_fn):
        """Sample ``rate_fn(t) -> (..., 6)`` at ``times``."""
        times = np.asarray(times, dtype=float)
        return cls(times, np.stack([np.asarray(rate_fn(t), dtype=float) for t in times]))

    @property
    def batch_shape(self):
        return self.rates.shape[1:-1]

    @property
    def t_end(self):
        return float(self.times[-1])

    def __len__(self):
        return self.times.size

    def __add__(self, other):
        if not np.array_equal(self.times, other.times):
            raise ValueError("histories must share a time grid to be added")
        return StrainHistory(self.times, self.rates + other.rates)

    def __mul__(self, k):
        return StrainHistory(self.times, self.rates * k)

    __rmul__ = __mul__

    def _check_t(self, t):
        if t < 0 or t > self.times[-1] * (1 + 1e-14) + 1e-300:
            raise HistoryTooShort(f"t={t} outside history span [0, {self.times[-1]}]")

    def rate_at(self, t):
        self._check_t(t)
        if self.times.size == 1:
            return self.rates[0].copy()
        i = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2))
        h = self.times[i + 1] - self.times[i]
        u = (t - self.times[i]) / h
        return (1 - u) * self.rates[i] + u * self.rates[i + 1]

    def truncate(self, t):
        """History restricted to ``[0, t]`` with an interpolated end sample."""
        self._check_t(t)
        t = min(t, self.t_end)
        k = int(np.searchsorted(self.times, t, side="left"))
        if k < self.times.size and self.times[k] == t:
            return StrainHistory(self.times[: k + 1], self.rates[: k + 1])
        return StrainHistory(
            np.append(self.times[:k], t), np.concatenate([self.rates[:k], self.rate_at(t)[None]])
        )

    def strains(self):
        """Strain (Kelvin) at every sample time; exact for linear rates."""
        h = np.diff(self.times).reshape(-1, *([1] * (self.rates.ndim - 1)))
        inc = 0.5 * h * (self.rates[1:] + self.rates[:-1])
        out = np.zeros_like(self.rates)
        out[1:] = np.cumsum(inc, axis=0)
        return out

    def strain_at(self, t):
        return self.truncate(t).strains()[-1]

    def strain_matrix_at(self, t):
        return from_kelvin_vec(self.strain_at(t))


def random_histories(rng, n_hist, t_end, n_samples, n_modes=(3, 8), amplitude=1.0, dims=3):
    """Band-limited random histories: sums of sinusoids with random symmetric amplitudes.

    Frequencies stay below a quarter of the sampling Nyquist rate.  With
    ``dims=2`` the out-of-plane components are zero (plane strain).
    """
    times = np.linspace(0.0, t_end, n_samples)
    dt = times[1] - times[0]
    f_max = 0.25 * 0.5 / dt
    rates = np.zeros((n_samples, n_hist, 6))
    for h in range(n_hist):
        m = rng.integers(n_modes[0], n_modes[1] + 1)
        freq = rng.uniform(0.05 / t_end, f_max, m)
        phase = rng.uniform(0, 2 * np.pi, m)
        amp = rng.normal(size=(m, 6)) * amplitude / np.sqrt(m)
        if dims == 2:
            amp[:, [2, 3, 4]] = 0.0
        rates[:, h, :] = np.sin(2 * np.pi * freq * times[:, None] + phase) @ amp
    return StrainHistory(times, rates)
