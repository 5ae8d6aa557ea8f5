"""Mittag-Leffler relaxation, its Bernstein density, Prony fits and Caputo derivatives.

The relaxation function ``E_a(-(t/a)^alpha)`` is completely monotone, so it is a
mixture of decaying exponentials ``int exp(-t*tau) dbeta(tau)``.  Substituting

    delta = atan2(p sin(alpha pi), 1 + p cos(alpha pi)),   p = (a tau)^alpha

turns ``beta`` into the uniform measure ``d delta / (alpha pi)`` on
``(0, alpha pi)``, so

    E_alpha(-x) = 1/(alpha pi) * int_0^{alpha pi} exp(-(x p(delta))^(1/alpha)) d delta,
    p(delta) = sin(delta) / sin(alpha pi - delta).

The integrand is positive and bounded, which makes this form well conditioned
for every ``x`` where the power series suffers cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from .errors import HistoryTooShort, InsufficientNodes, OutOfDomain

# below this |z| the alternating power series is summed directly in double
SERIES_LIMIT = 1.0

C1_TAIL = 1e-2
C2_TAIL = 1e2


def _check_alpha(alpha, allow_one=True):
    hi_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (alpha > 0.0 and hi_ok):
        raise OutOfDomain(f"order alpha={alpha} outside {'(0, 1]' if allow_one else '(0, 1)'}")


def _series(alpha, z):
    total = 0.0
    n = 0
    while True:
        term = z**n / math.gamma(alpha * n + 1.0)
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1e-300) and n > 2:
            return total
        n += 1
        if n > 500:
            return total


def _integral(alpha, x):
    apin = alpha * math.pi
    spi = math.sin(apin)

    def f(d):
        p = math.sin(d) / math.sin(apin - d) if d < apin else math.inf
        return math.exp(-((x * p) ** (1.0 / alpha)))

    # (x p)^(1/alpha) = 1 near delta ~ sin(alpha pi)/x for large x
    knee = min(math.atan2(spi / x, 1.0 + math.cos(apin) / x), 0.5 * apin)
    pts = sorted({knee, min(10 * knee, 0.9 * apin)})
    val, _ = integrate.quad(f, 0.0, apin, points=pts, epsabs=0.0, epsrel=1e-13, limit=400)
    return val / apin


def ml_series_mp(alpha, z, dps=None):
    """Reference value of the series in extended precision (slow, for cross-checks).

    The alternating terms peak near ``exp(|z|^(1/alpha))``, so by default the
    working precision is raised by that many digits on top of 30.
    """
    import mpmath

    if dps is None:
        dps = 30 + int(abs(z) ** (1.0 / alpha) / math.log(10.0)) + 1
    with mpmath.workdps(dps):
        z = mpmath.mpf(z)
        alpha = mpmath.mpf(alpha)
        total = mpmath.mpf(0)
        n = 0
        while True:
            term = z**n / mpmath.gamma(alpha * n + 1)
            total += term
            if n > 5 and abs(term) < mpmath.mpf(10) ** (-dps + 5) * max(abs(total), mpmath.mpf(10) ** (-dps)):
                break
            n += 1
        return float(total)


def _ml_scalar(alpha, z):
    if z > 0:
        raise OutOfDomain(f"argument z={z} must be <= 0")
    if alpha == 1.0:
        return math.exp(z)
    if z == 0.0:
        return 1.0
    if -z <= SERIES_LIMIT:
        return _series(alpha, z)
    return _integral(alpha, -z)


def ml_eval(alpha, z):
    """Mittag-Leffler function ``E_alpha(z)`` for ``0 < alpha <= 1`` and real ``z <= 0``.

    Accepts scalars or arrays; relative accuracy is about 1e-12.
    """
    _check_alpha(alpha)
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr > 0) or np.any(np.isnan(z_arr)):
        raise OutOfDomain("Mittag-Leffler evaluation needs z <= 0")
    if z_arr.ndim == 0:
        return _ml_scalar(alpha, float(z_arr))
    if alpha == 1.0:
        return np.exp(z_arr)
    flat = z_arr.ravel()
    out = np.empty_like(flat)
    cache = {}
    for i, v in enumerate(flat):
        if v not in cache:
            cache[v] = _ml_scalar(alpha, float(v))
        out[i] = cache[v]
    return out.reshape(z_arr.shape)


def relaxation(alpha, a, t):
    """``E_alpha(-(t/a)^alpha)`` for ``t >= 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise OutOfDomain("relaxation time argument must be >= 0")
    return ml_eval(alpha, -((t / a) ** alpha))


def bernstein_density(alpha, a, tau):
    """Density ``d beta / d tau`` of the relaxation-rate measure."""
    _check_alpha(alpha, allow_one=False)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise OutOfDomain("relaxation rate tau must be > 0")
    # p / (p^2 + 2 p cos + 1) is symmetric under p -> 1/p; use the side <= 1
    log_p = alpha * np.log(a * tau)
    q = np.exp(-np.abs(log_p))
    apin = alpha * np.pi
    out = np.sin(apin) / np.pi * q / (tau * (q * q + 2.0 * q * np.cos(apin) + 1.0))
    return out if out.ndim else float(out)


def bernstein_cdf(alpha, a, tau):
    """``beta([0, tau])`` in closed form; rises from 0 to 1."""
    _check_alpha(alpha, allow_one=False)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise OutOfDomain("relaxation rate tau must be >= 0")
    apin = alpha * np.pi
    with np.errstate(over="ignore"):
        p = (a * tau) ** alpha
        delta = np.where(
            np.isinf(p), apin, np.arctan2(p * np.sin(apin), 1.0 + p * np.cos(apin))
        )
    out = delta / apin
    return out if out.ndim else float(out)


def _tau_of_delta(alpha, a, delta):
    apin = alpha * np.pi
    p = np.sin(delta) / np.sin(apin - delta)
    return p ** (1.0 / alpha) / a


def _delta_of_tau(alpha, a, tau):
    return bernstein_cdf(alpha, a, tau) * alpha * np.pi


@dataclass(frozen=True)
class PronyApprox:
    """Exponential sum ``sum_k w_k exp(-t tau_k)`` with nonnegative weights."""

    nodes: np.ndarray
    weights: np.ndarray
    alpha: float
    a: float

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be matching 1-D arrays")
        if np.any(weights < 0):
            raise ValueError("Prony weights must be nonnegative")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    @property
    def mass(self):
        return float(self.weights.sum())

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-t[..., None] * self.nodes) @ self.weights


@dataclass(frozen=True)
class PronyErrorReport:
    t: np.ndarray
    exact: np.ndarray
    approx: np.ndarray
    rel_err: np.ndarray = field(repr=False)
    max_rel_err: float = 0.0
    dropped_mass: float = 0.0
    lumped_mass: float = 0.0


def _panel_orders(n, panels):
    base, extra = divmod(n, panels)
    return [base + (1 if i < extra else 0) for i in range(panels)]


def prony_fit(alpha, a, n_nodes, t_range, tol=None, order=4, n_check=241, polish=False):
    """Exponential-sum approximation of the fractional relaxation function.

    Relaxation rates are restricted to ``[C1_TAIL/t_max, C2_TAIL/t_min]``.
    Rates above the window are dropped (their mass is reported); the mass
    below it is lumped into a single node at its mean rate.  The window is
    cut into log-spaced panels and each panel carries a Gauss-Legendre rule
    in the uniformising variable, so panel masses are exact.

    With ``polish=True`` the Gauss nodes seed a reweighted nonlinear
    least-squares fit of log-rates and log-weights to the relative error on
    the check grid (weights stay positive); the best iterate is kept.  This
    matters when the mass is concentrated (order close to 1) and few nodes
    are allowed.

    Returns ``(PronyApprox, PronyErrorReport)``.  Raises
    :class:`InsufficientNodes` if ``n_nodes < 1`` or the observed maximum
    relative error on ``t_range`` exceeds ``tol``.
    """
    if n_nodes < 1:
        raise InsufficientNodes(f"need at least one node, got {n_nodes}")
    t_min, t_max = map(float, t_range)
    if not (0 < t_min < t_max):
        raise ValueError("t_range must satisfy 0 < t_min < t_max")
    _check_alpha(alpha)
    if a <= 0:
        raise OutOfDomain("time scale a must be > 0")

    if alpha == 1.0:
        approx = PronyApprox([1.0 / a], [1.0], alpha, a)
        return approx, _report(approx, t_min, t_max, n_check, 0.0, 0.0)

    apin = alpha * np.pi
    tau_lo, tau_hi = C1_TAIL / t_max, C2_TAIL / t_min
    d_lo = float(_delta_of_tau(alpha, a, tau_lo))
    d_hi = float(_delta_of_tau(alpha, a, tau_hi))
    dropped = 1.0 - d_hi / apin

    nodes, weights = [], []
    if n_nodes >= 3:
        lumped = d_lo / apin
        # mean rate of the lumped mass: int_0^d_lo tau(delta) d delta / d_lo
        mean_tau, _ = integrate.quad(lambda d: _tau_of_delta(alpha, a, d), 0.0, d_lo, epsrel=1e-12)
        nodes.append(mean_tau / d_lo)
        weights.append(lumped)
        n_mid = n_nodes - 1
    else:
        lumped = 0.0
        d_lo = 0.0
        n_mid = n_nodes

    if d_lo > 0:
        panels = max(1, int(math.ceil(n_mid / order)))
        edges = _delta_of_tau(alpha, a, np.geomspace(tau_lo, tau_hi, panels + 1))
        edges[0], edges[-1] = d_lo, d_hi
    else:
        panels = 1
        edges = np.array([0.0, d_hi])
    for (lo, hi), q in zip(zip(edges[:-1], edges[1:]), _panel_orders(n_mid, panels)):
        x, w = np.polynomial.legendre.leggauss(q)
        d = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        nodes.extend(_tau_of_delta(alpha, a, d))
        weights.extend(0.5 * (hi - lo) * w / apin)

    order_idx = np.argsort(nodes)
    approx = PronyApprox(np.asarray(nodes)[order_idx], np.asarray(weights)[order_idx], alpha, a)
    report = _report(approx, t_min, t_max, n_check, dropped, lumped)
    if polish:
        polished = _polish(approx, t_min, t_max, n_check)
        new_report = _report(polished, t_min, t_max, n_check, dropped, lumped)
        if new_report.max_rel_err < report.max_rel_err:
            approx, report = polished, new_report
    if tol is not None and report.max_rel_err > tol:
        raise InsufficientNodes(
            f"{n_nodes} nodes reach max relative error {report.max_rel_err:.3e} > {tol:.3e}",
            approx=approx,
            report=report,
        )
    return approx, report


def _polish(approx, t_min, t_max, n_check, rounds=6):
    t = np.geomspace(t_min, t_max, n_check)
    exact = relaxation(approx.alpha, approx.a, t)
    n = len(approx)

    def resid(x):
        return (np.exp(-t[:, None] * np.exp(x[:n])) @ np.exp(x[n:])) / exact - 1.0

    x = np.concatenate([np.log(approx.nodes), np.log(approx.weights)])
    best_x, best = x, np.abs(resid(x)).max()
    w = np.ones_like(t)
    for _ in range(rounds):
        x = optimize.least_squares(lambda y: np.sqrt(w) * resid(y), x, method="trf", max_nfev=500).x
        r = np.abs(resid(x))
        if r.max() < best:
            best_x, best = x, r.max()
        # Lawson-style reweighting pushes the fit toward the minimax error
        w = w * (r / r.mean() + 1e-3)
        w /= w.mean()
    order = np.argsort(best_x[:n])
    return PronyApprox(np.exp(best_x[:n])[order], np.exp(best_x[n:])[order], approx.alpha, approx.a)


def _report(approx, t_min, t_max, n_check, dropped, lumped):
    t = np.geomspace(t_min, t_max, n_check)
    exact = relaxation(approx.alpha, approx.a, t)
    got = approx(t)
    rel = np.abs(got - exact) / np.abs(exact)
    return PronyErrorReport(t, exact, got, rel, float(rel.max()), float(dropped), float(lumped))


def caputo_l1(f, alpha, dt):
    """L1-scheme Caputo derivative at every sample of a uniformly sampled ``f``.

    ``f[0]`` is the value at t=0; entry 0 of the result is 0.  Works on the
    leading axis, so ``f`` may carry trailing component dimensions.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[0] < 2:
        raise HistoryTooShort("need at least two samples for a Caputo derivative")
    if not (0 < alpha < 1):
        raise OutOfDomain(f"Caputo order alpha={alpha} outside (0, 1)")
    n = f.shape[0] - 1
    k = np.arange(n, dtype=float)
    b = (k + 1.0) ** (1.0 - alpha) - k ** (1.0 - alpha)
    df = np.diff(f, axis=0)
    flat = df.reshape(n, -1)
    out = np.zeros((n + 1, flat.shape[1]))
    for c in range(flat.shape[1]):
        out[1:, c] = np.convolve(b, flat[:, c])[:n]
    out /= special.gamma(2.0 - alpha) * dt**alpha
    return out.reshape(f.shape)


def caputo_derivative(f, alpha, dt):
    """L1-scheme Caputo derivative at the last sample of ``f`` (uniform step ``dt``)."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] < 2:
        raise HistoryTooShort("need at least two samples for a Caputo derivative")
    if not (0 < alpha < 1):
        raise OutOfDomain(f"Caputo order alpha={alpha} outside (0, 1)")
    n = f.shape[0] - 1
    j = np.arange(n, dtype=float)
    b = (n - j) ** (1.0 - alpha) - (n - j - 1.0) ** (1.0 - alpha)
    df = np.diff(f, axis=0)
    return np.tensordot(b, df, axes=(0, 0)) / (special.gamma(2.0 - alpha) * dt**alpha)


def relaxation_rate(alpha, a, t):
    """Time derivative of ``E_alpha(-(t/a)^alpha)`` for ``t > 0`` (it diverges at 0)."""
    _check_alpha(alpha)
    t = float(t)
    if t <= 0:
        raise OutOfDomain("relaxation rate is unbounded at t=0")
    if alpha == 1.0:
        return -math.exp(-t / a) / a
    apin = alpha * math.pi

    def f(d):
        tau = float(_tau_of_delta(alpha, a, d)) if d < apin else math.inf
        return tau * math.exp(-t * tau) if tau < math.inf else 0.0

    knee = float(_delta_of_tau(alpha, a, 1.0 / t))
    pts = sorted({min(knee, 0.95 * apin), min(2 * knee, 0.97 * apin)})
    val, _ = integrate.quad(f, 0.0, apin, points=pts, epsabs=0.0, epsrel=1e-12, limit=400)
    return -val / apin
