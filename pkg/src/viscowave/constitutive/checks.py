"""Dissipation checks: sufficient conditions, random parameter draws and
the search for histories where the generic dissipation functional is positive."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .. import mittag_leffler as ml
from ..kelvin import is_pd, is_psd
from .history import StrainHistory, random_histories
from .laws import AgingTable, ExpAging
from .models import GLSM, AgingIso, AgingPlusExp, Elastic, ExpConvIso, ExponentialKernel, FractionalZener
from .response import energy_densities_generic, energy_densities_model, response

VOL = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0]) / np.sqrt(3.0)
DEV = np.array([1.0, -1.0, 0.0, 0.0, 0.0, 0.0]) / np.sqrt(2.0)


def _commutator_norm(a, b):
    return float(np.max(np.abs(a @ b - b @ a)))


def exponential_sufficient_report(A, C0, tol=1e-10, C0_dot=None, s_samples=None):
    """Itemized check that ``C(t, s) = expm(-t A) C0(s)`` meets the sufficient
    condition for a nonpositive generic dissipation functional."""
    A = np.asarray(getattr(A, "kelvin", A), dtype=float)
    s_samples = np.linspace(0.0, 1.0, 11) if s_samples is None else np.asarray(s_samples, dtype=float)

    def c0_dot(s):
        if C0_dot is not None:
            return np.asarray(C0_dot(s), dtype=float)
        h = 1e-6 * max(1.0, abs(s))
        return (np.asarray(C0(s + h)) - np.asarray(C0(s - h))) / (2 * h)

    scale = max(1.0, float(np.max(np.abs(A))))
    report = {
        "A_symmetric": bool(np.max(np.abs(A - A.T)) <= tol * scale),
        "A_psd": bool(is_psd(A, tol * scale)),
        "C0_spd": True,
        "C0_dot_psd": True,
        "commute_A_C0": True,
        "commute_A_C0_dot": True,
    }
    for s in s_samples:
        c0 = np.asarray(C0(s), dtype=float)
        cd = c0_dot(s)
        cs = max(1.0, float(np.max(np.abs(c0))))
        ds = max(1.0, float(np.max(np.abs(cd))))
        report["C0_spd"] &= bool(np.max(np.abs(c0 - c0.T)) <= tol * cs and is_pd(c0))
        report["C0_dot_psd"] &= bool(np.max(np.abs(cd - cd.T)) <= 1e-6 * ds and is_psd(cd, 1e-8 * ds))
        report["commute_A_C0"] &= _commutator_norm(A, c0) <= tol * scale * cs
        report["commute_A_C0_dot"] &= _commutator_norm(A, cd) <= max(tol, 1e-7) * scale * ds
    return report


def check_exponential_sufficient(A, C0, tol=1e-10, C0_dot=None, s_samples=None):
    """True iff all items of :func:`exponential_sufficient_report` hold."""
    return all(exponential_sufficient_report(A, C0, tol, C0_dot, s_samples).values())


def exponential_kernel_F(model: ExponentialKernel, sigma, t):
    """Closed form ``-1/2 sigma:[A S + S expm(-t A) C0_dot(t) S] sigma`` of the generic
    dissipation functional for commuting exponential kernels (Kelvin ``sigma``)."""
    c_tt = model.instantaneous(t)
    s = np.linalg.inv(c_tt)
    inner = model.A @ s + s @ expm(-t * model.A) @ model._c0_dot(t) @ s
    return -0.5 * np.einsum("...a,ab,...b->...", sigma, inner, sigma)


# --------------------------------------------------------------------------
# counterexample search

@dataclass
class ViolationResult:
    found: bool
    history: StrainHistory
    F: float
    e_D_rate: float
    evaluations: int
    params: np.ndarray


def _two_segment(p):
    t1, t2 = np.exp(p[0]), np.exp(p[1])
    times = np.array([0.0, t1, t1 + t2])
    rates = p[2:5, None] * VOL + p[5:8, None] * DEV
    return StrainHistory(times, rates)


def _objective(model, x, p):
    h = _two_segment(p)
    r = response(model, x, h)
    s2 = float(r.sigma @ r.sigma)
    if s2 == 0:
        return -np.inf, 0.0
    _, f = energy_densities_generic(model, x, h)
    return float(f) / s2, float(f)


def find_generic_violation(model, x=None, max_evals=10_000, start=None):
    """Coordinate search over two-segment histories for ``F_generic > 0``.

    Parameters searched: log segment lengths and volumetric / deviatoric rate
    samples at the three nodes.  The objective ``F / |sigma|^2`` is scale
    free.  Returns a :class:`ViolationResult` (``found`` is False if the
    budget runs out).
    """
    p = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5]) if start is None else np.asarray(start, float)
    steps = np.full(p.size, 1.0)
    best, best_f = _objective(model, x, p)
    evals = 1
    while evals < max_evals and best_f <= 0:
        improved = False
        for i in range(p.size):
            for sign in (1.0, -1.0):
                if evals >= max_evals:
                    break
                q = p.copy()
                q[i] += sign * steps[i]
                val, f = _objective(model, x, q)
                evals += 1
                if val > best:
                    p, best, best_f, improved = q, val, f, True
                    steps[i] *= 1.5
                    break
            if best_f > 0:
                break
        if not improved:
            steps *= 0.5
            if np.all(steps < 1e-8):
                break
    h = _two_segment(p)
    _, ed = energy_densities_model(model, x, h)
    return ViolationResult(bool(best_f > 0), h, best_f, float(ed), evals, p)


# --------------------------------------------------------------------------
# random parameter draws (all inside each kind's invariants)

def _logu(rng, lo, hi, size=None):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def random_spd(rng, scale=1.0, cond=20.0):
    q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    eig = scale * _logu(rng, 1.0 / cond, 1.0, 6)
    return (q * eig) @ q.T


def random_model(kind, rng, prony_nodes=32):
    lam, mu = _logu(rng, 0.1, 10.0), _logu(rng, 0.1, 10.0)
    if kind == "Elastic":
        return Elastic(lam, mu)
    if kind == "ExpConvIso":
        return ExpConvIso(lam, mu, _logu(rng, 1e-2, 1e2), _logu(rng, 1e-2, 1e2))
    n_l, n_m = rng.integers(1, 4), rng.integers(1, 4)
    lams, gams = _logu(rng, 0.1, 10.0, n_l), _logu(rng, 1e-2, 1e2, n_l)
    mus, taus = _logu(rng, 0.1, 10.0, n_m), _logu(rng, 1e-2, 1e2, n_m)
    if kind == "GLSM":
        return GLSM(lam, mu, list(lams), list(gams), list(mus), list(taus))
    if kind in ("AgingIso", "AgingPlusExp"):
        lam_law = ExpAging(lam, lam * rng.uniform(0.2, 1.0), _logu(rng, 0.1, 10.0))
        times = np.concatenate([[0.0], np.sort(rng.uniform(0.0, 5.0, 6))])
        drops = np.concatenate([[0.0], rng.uniform(0.0, 0.1, 6)])
        mu_law = AgingTable(times, mu * np.cumprod(1.0 - drops))
        if kind == "AgingIso":
            return AgingIso(lam_law, mu_law)
        return AgingPlusExp(lam_law, mu_law, list(lams), list(gams), list(mus), list(taus))
    if kind == "FractionalZener":
        alpha, a = rng.uniform(0.1, 0.95), _logu(rng, 1e-2, 1e1)
        prony, _ = ml.prony_fit(alpha, a, prony_nodes, (1e-3 * a, 1e3 * a), n_check=17)
        return FractionalZener(alpha, a, random_spd(rng, lam), random_spd(rng, mu), prony)
    raise ValueError(f"no random draw for kind {kind!r}")


@dataclass
class DissipationSummary:
    kind: str
    n_params: int
    n_histories: int
    n_checks: int
    violations: int
    min_e_D_rate: float
    min_e_S: float


def dissipation_survey(kind, rng, n_params=50, n_histories=1000, n_samples=64, eval_times=(0.5, 1.0)):
    """Count negative model-specific dissipation rates (or strain energies) over
    random parameter draws and random smooth histories."""
    violations = checks = 0
    min_ed = min_es = np.inf
    for _ in range(n_params):
        model = random_model(kind, rng)
        hist = random_histories(rng, n_histories, 2.0, n_samples)
        for frac in eval_times:
            e_s, ed = energy_densities_model(model, None, hist, frac * hist.t_end)
            checks += ed.size
            violations += int(np.sum(ed < 0) + np.sum(e_s < 0))
            min_ed = min(min_ed, float(ed.min()))
            min_es = min(min_es, float(e_s.min()))
    return DissipationSummary(kind, n_params, n_histories, checks, violations, min_ed, min_es)
