"""Stress, energy densities and dissipation functionals for a strain history.

All quantities are returned for every history in the batch at once.  Kernels
with a branch decomposition are integrated exactly against the
piecewise-linear strain rate; :class:`GenericKernel` uses refined composite
trapezoid quadrature with a Richardson step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import mittag_leffler as ml
from ..errors import HistoryTooShort, NotPositiveDefinite, SingularStiffness, UnsupportedKind
from ..kelvin import from_kelvin_vec, is_pd, psd_factor, psd_quad
from .history import StrainHistory
from .models import FractionalZener

QUAD_RTOL = 1e-11


def _phi_a(x):
    """``(1 - e^{-x}(1 + x)) / x^2`` without cancellation."""
    x = np.asarray(x, dtype=float)
    small = x < 0.1
    xs = np.where(small, x, 0.0)
    series = np.zeros_like(xs)
    fact = 1.0
    for n in range(0, 12):
        if n > 0:
            fact *= n
        series = series + (-xs) ** n / (fact * (n + 2))
    xl = np.where(small, 1.0, x)
    direct = (1.0 - np.exp(-xl) * (1.0 + xl)) / xl**2
    return np.where(small, series, direct)


def _phi_0(x):
    """``(1 - e^{-x}) / x``."""
    x = np.asarray(x, dtype=float)
    xs = np.where(x == 0, 1.0, x)
    return np.where(x == 0, 1.0, -np.expm1(-xs) / xs)


def exp_weights(times, theta):
    """Node weights ``c_j`` with ``int_0^T e^{-(T-s)/theta} r(s) ds = sum_j c_j r_j``
    for ``r`` linear between samples (exact).  ``theta`` may be an array; the
    result then has shape ``(n, *theta.shape)``."""
    times = np.asarray(times, dtype=float)
    theta = np.asarray(theta, dtype=float)
    n = times.size
    c = np.zeros((n,) + theta.shape)
    if n < 2:
        return c
    h = np.diff(times).reshape((-1,) + (1,) * theta.ndim)
    x = h / theta
    a = _phi_a(x)
    b = _phi_0(x) - a
    decay = np.exp(-(times[-1] - times[1:]).reshape((-1,) + (1,) * theta.ndim) / theta)
    c[:-1] += decay * h * a
    c[1:] += decay * h * b
    return c


def exp_segment(theta, h):
    """One-segment update coefficients: ``eta_new = E eta + h (A r0 + B r1)``."""
    x = np.asarray(h / np.asarray(theta, dtype=float))
    a = _phi_a(x)
    return np.exp(-x), h * a, h * (_phi_0(x) - a)


@dataclass
class Response:
    """State of the constitutive law at one time, Kelvin components."""

    t: float
    strain: np.ndarray
    rate: np.ndarray
    sigma: np.ndarray
    sigma_tilde: np.ndarray
    c_tt: np.ndarray
    c_tt_rate: np.ndarray
    etas: list | None = None
    branches: list | None = None
    c_eq: np.ndarray | None = None
    c_eq_rate: np.ndarray | None = None


def _mv(k, v):
    return np.einsum("...ab,...b->...a", k, v)


def _dot(a, b):
    return np.einsum("...a,...a->...", a, b)


def response(model, x, history: StrainHistory, t=None) -> Response:
    """Evaluate strain, stress and sigma-tilde for every history at time ``t``."""
    t = history.t_end if t is None else float(t)
    h = history.truncate(t)
    strain = h.strains()[-1]
    rate = h.rates[-1]
    if model.has_branch_form:
        c_eq = np.asarray(model.equilibrium(t, x), dtype=float)
        c_eq_rate = np.asarray(model.equilibrium_rate(t, x), dtype=float)
        branches = model.branches(x)
        sigma = _mv(c_eq, strain)
        sigma_tilde = _mv(c_eq_rate, strain)
        etas = []
        c_tt = c_eq.copy()
        for k, theta in branches:
            w = exp_weights(h.times, theta)
            eta = np.tensordot(w, h.rates, axes=(0, 0))
            etas.append(eta)
            k_eta = _mv(k, eta)
            sigma = sigma + k_eta
            sigma_tilde = sigma_tilde - k_eta / theta
            c_tt = c_tt + k
        return Response(t, strain, rate, sigma, sigma_tilde, c_tt, c_eq_rate, etas, branches, c_eq, c_eq_rate)
    sigma = _kernel_quadrature(lambda s: model.kernel(t, s, x), h)
    sigma_tilde = _kernel_quadrature(lambda s: model.kernel_t(t, s, x), h)
    c_tt = np.asarray(model.instantaneous(t, x), dtype=float)
    c_tt_rate = np.asarray(model.instantaneous_rate(t, x), dtype=float)
    return Response(t, strain, rate, sigma, sigma_tilde, c_tt, c_tt_rate)


def _trapezoid(kernel, times, rates, m):
    """Composite trapezoid with every history segment split into ``m`` pieces."""
    if times.size < 2:
        return np.zeros(rates.shape[1:])
    u = np.arange(m) / m
    fine_t = np.append((times[:-1, None] + u * np.diff(times)[:, None]).ravel(), times[-1])
    uu = u.reshape((1, m) + (1,) * (rates.ndim - 1))
    fine_r = ((1 - uu) * rates[:-1, None] + uu * rates[1:, None]).reshape((-1,) + rates.shape[1:])
    fine_r = np.concatenate([fine_r, rates[-1:]])
    ks = np.stack([kernel(s) for s in fine_t])
    vals = np.einsum("nab,n...b->n...a", ks, fine_r)
    dt = np.diff(fine_t).reshape((-1,) + (1,) * (vals.ndim - 1))
    return np.sum(0.5 * dt * (vals[1:] + vals[:-1]), axis=0)


def _kernel_quadrature(kernel, h, rtol=QUAD_RTOL, max_refine=64):
    """Trapezoid sums on doubling refinements, Richardson-extrapolated until
    two successive extrapolations agree to ``rtol``."""
    m = 1
    prev = _trapezoid(kernel, h.times, h.rates, m)
    prev_rich = None
    while m < max_refine:
        m *= 2
        cur = _trapezoid(kernel, h.times, h.rates, m)
        rich = (4.0 * cur - prev) / 3.0
        if prev_rich is not None:
            scale = np.max(np.abs(rich))
            if np.max(np.abs(rich - prev_rich)) <= rtol * scale:
                return rich
        prev, prev_rich = cur, rich
    return prev_rich


def stress(model, x, history, t=None):
    """Stress tensor(s) ``int_0^t C(t, s) eps_s ds`` as 3x3 matrices."""
    return from_kelvin_vec(response(model, x, history, t).sigma)


def sigma_tilde(model, x, history, t=None):
    """``int_0^t C_t(t, s) eps_s ds`` as 3x3 matrices."""
    return from_kelvin_vec(response(model, x, history, t).sigma_tilde)


def _compliance(c_tt):
    if not np.all(is_pd(c_tt)):
        raise SingularStiffness("instantaneous stiffness is not positive definite")
    return np.linalg.inv(c_tt)


def generic_pair(r: Response):
    s = _compliance(r.c_tt)
    s_t = -s @ r.c_tt_rate @ s
    e_s = 0.5 * _dot(r.sigma, _mv(s, r.sigma))
    f = _dot(r.sigma, _mv(s, r.sigma_tilde)) + 0.5 * _dot(r.sigma, _mv(s_t, r.sigma))
    return e_s, f


def model_pair(r: Response):
    if r.etas is None:
        raise UnsupportedKind("no certified energy split for a generic kernel; use the generic pair")
    eq = psd_factor(r.c_eq)
    neg_rate = psd_factor(-r.c_eq_rate)
    e_s = 0.5 * psd_quad(eq, r.strain)
    ed = 0.5 * psd_quad(neg_rate, r.strain)
    for (k, theta), eta in zip(r.branches, r.etas):
        q = psd_quad(psd_factor(k), eta)
        e_s = e_s + 0.5 * q
        ed = ed + q / np.asarray(theta)
    return e_s, ed


def energy_densities_generic(model, x, history, t=None):
    """``(e_S, F)`` from ``e_S = 1/2 sigma:S sigma`` and
    ``F = sigma:S sigma_tilde + 1/2 sigma:S_t sigma``."""
    return generic_pair(response(model, x, history, t))


def energy_densities_model(model, x, history, t=None):
    """``(e_S, e_D_rate)`` from the per-branch split (sum of nonnegative terms)."""
    if not model.has_branch_form:
        raise UnsupportedKind(f"{model.kind} has no certified energy split")
    return model_pair(response(model, x, history, t))


def work_decomposition_residual(model, x, history, t, which="model", h=None):
    """``sigma:eps_dot - (de_S/dt + e_D_rate)`` with de_S/dt by centred differences.

    ``h`` defaults to the smaller history spacing adjacent to ``t``.
    """
    if len(history) < 3:
        raise HistoryTooShort("decomposition residual needs at least three samples")
    if h is None:
        i = int(np.argmin(np.abs(history.times - t)))
        gaps = np.diff(history.times)
        h = min(gaps[max(i - 1, 0)], gaps[min(i, gaps.size - 1)])
    if t - h < 0 or t + h > history.t_end * (1 + 1e-14):
        raise HistoryTooShort("history does not extend a full step on both sides of t")
    pair = model_pair if which == "model" else generic_pair
    r = response(model, x, history, t)
    _, d = pair(r)
    if which != "model":
        d = -d
    e_plus, _ = pair(response(model, x, history, t + h))
    e_minus, _ = pair(response(model, x, history, t - h))
    return _dot(r.sigma, r.rate) - ((e_plus - e_minus) / (2 * h) + d)


def check_F_B(model, B, history, t=None, x=None, B_t=None):
    """``F^B = sigma:[B C(t,t) - I] eps_dot + sigma:B sigma_tilde + 1/2 sigma:B_t sigma``.

    ``B`` is a callable ``t -> 6x6`` (or ``None`` for the compliance itself,
    with its exact time derivative).  ``B_t`` defaults to a centred finite
    difference of ``B``.
    """
    r = response(model, x, history, t)
    if B is None:
        b = _compliance(r.c_tt)
        b_t = -b @ r.c_tt_rate @ b
    else:
        b = np.asarray(B(r.t), dtype=float)
        if not np.all(is_pd(b)):
            raise NotPositiveDefinite("B must be symmetric positive definite")
        if B_t is not None:
            b_t = np.asarray(B_t(r.t), dtype=float)
        else:
            dh = 1e-6 * max(1.0, r.t)
            lo = max(r.t - dh, 0.0)
            b_t = (np.asarray(B(r.t + dh)) - np.asarray(B(lo))) / (r.t + dh - lo)
    first = _mv(b @ r.c_tt - np.eye(6), r.rate)
    return _dot(r.sigma, first) + _dot(r.sigma, _mv(b, r.sigma_tilde)) + 0.5 * _dot(r.sigma, _mv(b_t, r.sigma))


def fz_stress_quadrature(model: FractionalZener, history, t=None, panels_per_segment=2, order=8, grading=12):
    """Fractional Zener stress with the exact Mittag-Leffler kernel.

    The memory integral is computed with Gauss-Legendre panels on each
    history segment; panels next to ``s = t`` are geometrically graded toward
    the kernel's weak singularity in its derivative.  Kernel values are shared
    by all histories of the batch.
    """
    t = history.t_end if t is None else float(t)
    h = history.truncate(t)
    x, w = np.polynomial.legendre.leggauss(order)
    s_nodes, s_w, s_rates = [], [], []
    for j in range(h.times.size - 1):
        a, b = h.times[j], h.times[j + 1]
        if j == h.times.size - 2:
            # geometric grading toward s = t
            span = b - a
            cuts = [b - span * 0.5**k for k in range(grading)][::-1]
            edges = np.concatenate([[a], np.array(cuts[1:]) if grading > 1 else [], [b]])
            edges = np.unique(np.concatenate([np.linspace(a, b - span * 0.5, panels_per_segment + 1), edges]))
        else:
            edges = np.linspace(a, b, panels_per_segment + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            s = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
            u = (s - a) / (b - a)
            s_nodes.append(s)
            s_w.append(0.5 * (hi - lo) * w)
            s_rates.append(np.einsum("q,...->q...", 1 - u, h.rates[j]) + np.einsum("q,...->q...", u, h.rates[j + 1]))
    if not s_nodes:
        return _mv(model.C1, h.strains()[-1])
    s = np.concatenate(s_nodes)
    wq = np.concatenate(s_w)
    rq = np.concatenate(s_rates)
    kern = ml.relaxation(model.alpha, model.a, t - s)
    memory = np.tensordot(wq * kern, rq, axes=(0, 0))
    return _mv(model.C1, h.strains()[-1]) + _mv(model.M, memory)
