"""Constitutive kernels ``C(x, t, s)`` as immutable model objects.

Every kind except :class:`GenericKernel` splits into a (possibly aging)
equilibrium part and a finite set of exponential branches,

    C(x, t, s) = C_eq(x, t) + sum_k K_k(x) exp(-(t - s) / theta_k(x)),

with ``C_eq`` positive definite and non-increasing in ``t``, ``K_k``
positive semidefinite and ``theta_k > 0``.  This form drives the exact
exponential integrator, the certified energy densities and the solver's
internal variables.  The fractional Zener model enters it through a Prony
approximation; its exact kernel is still available from :meth:`kernel`.

``where`` arguments are ``None`` (spatially constant parameters), a position
``(x, y)``, or a :class:`~viscowave.grid.Grid` (per-cell arrays).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .. import mittag_leffler as ml
from ..errors import EmptySuperposition, InvalidParameter, NegativeWeight, OutOfDomain, OutOfOrder, UnsupportedKind
from ..grid import SpatialField, resolve
from ..kelvin import IDENTITY4, IXI, StiffnessTensor, is_pd, isotropic_kelvin, lambda_max
from .laws import as_law


def _check_positive(name, p):
    vals = p.values if isinstance(p, SpatialField) else np.asarray(p, dtype=float)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise InvalidParameter(f"{name} must be positive")


def _kelvin(c):
    k = c.kelvin if isinstance(c, StiffnessTensor) else np.asarray(c, dtype=float)
    if k.shape != (6, 6):
        raise InvalidParameter("tensor parameters must be 6x6 Kelvin matrices")
    return k


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


class MaterialModel:
    """Base class; subclasses set ``kind`` and the branch decomposition."""

    kind = "abstract"
    aging = False

    # branch decomposition -------------------------------------------------
    def equilibrium(self, t, where=None):
        raise UnsupportedKind(f"{self.kind} has no branch decomposition")

    def equilibrium_rate(self, t, where=None):
        return np.zeros_like(self.equilibrium(t, where))

    def branches(self, where=None):
        """List of ``(K, theta)`` pairs: Kelvin matrices and relaxation times."""
        return []

    # kernel ---------------------------------------------------------------
    def kernel(self, t, s, where=None):
        if s > t:
            raise OutOfOrder(f"kernel needs s <= t, got s={s}, t={t}")
        out = np.array(self.equilibrium(t, where), dtype=float)
        for k, theta in self.branches(where):
            out = out + k * np.exp(-(t - s) / np.asarray(theta))[..., None, None]
        return out

    def kernel_t(self, t, s, where=None):
        if s > t:
            raise OutOfOrder(f"kernel needs s <= t, got s={s}, t={t}")
        out = np.array(self.equilibrium_rate(t, where), dtype=float)
        for k, theta in self.branches(where):
            theta = np.asarray(theta)
            out = out - k * (np.exp(-(t - s) / theta) / theta)[..., None, None]
        return out

    def instantaneous(self, t, where=None):
        return self.kernel(t, t, where)

    def instantaneous_rate(self, t, where=None):
        """d/dt of C(x, t, t)."""
        return self.equilibrium_rate(t, where)

    # speed ------------------------------------------------------------------
    def speed_constant(self, t, where=None):
        """Model-specific stiffness bound ``L`` with speed ``sqrt(L / rho)``."""
        return lambda_max(self.instantaneous(t, where))

    def members(self):
        return [(self, 1.0)]

    @property
    def has_branch_form(self):
        return True

    def __repr__(self):
        fields = ", ".join(f"{k}={v!r}" for k, v in vars(self).items() if not k.startswith("_"))
        return f"{type(self).__name__}({fields})"


class Elastic(MaterialModel):
    kind = "Elastic"

    def __init__(self, lam, mu):
        _check_positive("lambda", lam)
        _check_positive("mu", mu)
        self.lam, self.mu = lam, mu

    def equilibrium(self, t, where=None):
        return isotropic_kelvin(resolve(self.lam, where), resolve(self.mu, where))

    def speed_constant(self, t, where=None):
        return np.asarray(resolve(self.lam, where) + 2.0 * resolve(self.mu, where), dtype=float)


class ExpConvIso(MaterialModel):
    """``lam e^{-(t-s)/gamma} IxI + 2 mu e^{-(t-s)/tau} II``."""

    kind = "ExpConvIso"

    def __init__(self, lam, mu, gamma, tau):
        for name, p in (("lambda", lam), ("mu", mu), ("gamma", gamma), ("tau", tau)):
            _check_positive(name, p)
        self.lam, self.mu, self.gamma, self.tau = lam, mu, gamma, tau

    def equilibrium(self, t, where=None):
        shape = np.shape(resolve(self.lam, where))
        return np.zeros(shape + (6, 6))

    def branches(self, where=None):
        lam, mu = resolve(self.lam, where), resolve(self.mu, where)
        return [
            (np.asarray(lam, dtype=float)[..., None, None] * IXI, resolve(self.gamma, where)),
            (2.0 * np.asarray(mu, dtype=float)[..., None, None] * IDENTITY4, resolve(self.tau, where)),
        ]

    def speed_constant(self, t, where=None):
        return np.asarray(resolve(self.lam, where) + 2.0 * resolve(self.mu, where), dtype=float)


class GLSM(MaterialModel):
    """Generalized linear solid: equilibrium ``(lam0, mu0)`` plus decaying
    volumetric terms ``(lams, gammas)`` and shear terms ``(mus, taus)``.
    The two term lists may have different lengths."""

    kind = "GLSM"

    def __init__(self, lam0, mu0, lams=(), gammas=(), mus=(), taus=()):
        lams, gammas, mus, taus = map(_as_list, (lams, gammas, mus, taus))
        if len(lams) != len(gammas) or len(mus) != len(taus):
            raise InvalidParameter("each decaying term needs both a modulus and a relaxation time")
        for name, group in (("lambda", [lam0, *lams]), ("mu", [mu0, *mus]), ("gamma", gammas), ("tau", taus)):
            for p in group:
                _check_positive(name, p)
        self.lam0, self.mu0 = lam0, mu0
        self.lams, self.gammas, self.mus, self.taus = lams, gammas, mus, taus

    def equilibrium(self, t, where=None):
        return isotropic_kelvin(resolve(self.lam0, where), resolve(self.mu0, where))

    def branches(self, where=None):
        out = []
        for lam, g in zip(self.lams, self.gammas):
            out.append((np.asarray(resolve(lam, where), float)[..., None, None] * IXI, resolve(g, where)))
        for mu, tau in zip(self.mus, self.taus):
            out.append((2.0 * np.asarray(resolve(mu, where), float)[..., None, None] * IDENTITY4, resolve(tau, where)))
        return out

    def speed_constant(self, t, where=None):
        total = resolve(self.lam0, where) + 2.0 * resolve(self.mu0, where)
        for lam in self.lams:
            total = total + resolve(lam, where)
        for mu in self.mus:
            total = total + 2.0 * resolve(mu, where)
        return np.asarray(total, dtype=float)


class AgingIso(MaterialModel):
    """``lam(t) IxI + 2 mu(t) II`` with positive, non-increasing laws."""

    kind = "AgingIso"
    aging = True

    def __init__(self, lam, mu):
        self.lam, self.mu = as_law(lam), as_law(mu)

    def equilibrium(self, t, where=None):
        return isotropic_kelvin(self.lam.value(t, where), self.mu.value(t, where))

    def equilibrium_rate(self, t, where=None):
        return isotropic_kelvin(self.lam.rate(t, where), self.mu.rate(t, where))

    def speed_constant(self, t, where=None):
        return np.asarray(self.lam.value(t, where) + 2.0 * self.mu.value(t, where), dtype=float)


class AgingPlusExp(GLSM):
    """Aging equilibrium part plus exponential volumetric and shear terms."""

    kind = "AgingPlusExp"
    aging = True

    def __init__(self, lam0, mu0, lams=(), gammas=(), mus=(), taus=()):
        lams, gammas, mus, taus = map(_as_list, (lams, gammas, mus, taus))
        if len(lams) != len(gammas) or len(mus) != len(taus):
            raise InvalidParameter("each decaying term needs both a modulus and a relaxation time")
        for name, group in (("lambda", lams), ("mu", mus), ("gamma", gammas), ("tau", taus)):
            for p in group:
                _check_positive(name, p)
        self.lam0, self.mu0 = as_law(lam0), as_law(mu0)
        self.lams, self.gammas, self.mus, self.taus = lams, gammas, mus, taus

    def equilibrium(self, t, where=None):
        return isotropic_kelvin(self.lam0.value(t, where), self.mu0.value(t, where))

    def equilibrium_rate(self, t, where=None):
        return isotropic_kelvin(self.lam0.rate(t, where), self.mu0.rate(t, where))

    def speed_constant(self, t, where=None):
        total = self.lam0.value(t, where) + 2.0 * self.mu0.value(t, where)
        for lam in self.lams:
            total = total + resolve(lam, where)
        for mu in self.mus:
            total = total + 2.0 * resolve(mu, where)
        return np.asarray(total, dtype=float)


class FractionalZener(MaterialModel):
    """``C1 + E_alpha(-((t-s)/a)^alpha) M`` with SPD tensors ``C1`` and ``M``.

    Stress, energies and the solver use the exponential-sum form built from
    ``prony`` (default: 64-node fit on ``[1e-3 a, 1e3 a]``).
    """

    kind = "FractionalZener"

    def __init__(self, alpha, a, C1, M, prony=None):
        if not (0 < alpha < 1):
            raise InvalidParameter("fractional order must lie in (0, 1)")
        if a <= 0:
            raise InvalidParameter("time scale a must be positive")
        self.alpha, self.a = float(alpha), float(a)
        self.C1, self.M = _kelvin(C1), _kelvin(M)
        for name, k in (("C1", self.C1), ("M", self.M)):
            if not is_pd(k):
                raise InvalidParameter(f"{name} must be symmetric positive definite")
        if prony is None:
            prony, _ = ml.prony_fit(self.alpha, self.a, 64, (1e-3 * self.a, 1e3 * self.a))
        if prony.alpha != self.alpha or prony.a != self.a:
            raise InvalidParameter("Prony approximation was fitted for different (alpha, a)")
        self.prony = prony

    def equilibrium(self, t, where=None):
        return self.C1.copy()

    def branches(self, where=None):
        return [(w * self.M, 1.0 / tau) for tau, w in zip(self.prony.nodes, self.prony.weights)]

    def kernel(self, t, s, where=None):
        if s > t:
            raise OutOfOrder(f"kernel needs s <= t, got s={s}, t={t}")
        return self.C1 + ml.relaxation(self.alpha, self.a, t - s) * self.M

    def kernel_t(self, t, s, where=None):
        if s > t:
            raise OutOfOrder(f"kernel needs s <= t, got s={s}, t={t}")
        if s == t:
            raise OutOfDomain("fractional kernel has an unbounded time derivative at s = t")
        return ml.relaxation_rate(self.alpha, self.a, t - s) * self.M

    def speed_constant(self, t, where=None):
        return np.asarray(lambda_max(self.C1) + lambda_max(self.M))

    def members(self):
        return [(_Fixed(self.C1), 1.0)] + [
            (_Branch(self.M, 1.0 / tau), w) for tau, w in zip(self.prony.nodes, self.prony.weights)
        ]

    def __repr__(self):
        return f"FractionalZener(alpha={self.alpha}, a={self.a}, prony_nodes={len(self.prony)})"


class _Fixed(MaterialModel):
    kind = "Fixed"

    def __init__(self, k):
        self.k = k

    def equilibrium(self, t, where=None):
        return self.k.copy()


class _Branch(MaterialModel):
    kind = "Branch"

    def __init__(self, k, theta):
        self.k, self.theta = k, theta

    def equilibrium(self, t, where=None):
        return np.zeros_like(self.k)

    def branches(self, where=None):
        return [(self.k, self.theta)]


class SuperposedSum(MaterialModel):
    """Weighted sum of member kernels (finite or quadrature-discretized)."""

    kind = "SuperposedSum"

    def __init__(self, models, weights=None):
        models = list(models)
        if not models:
            raise EmptySuperposition("superposition needs at least one member")
        weights = np.ones(len(models)) if weights is None else np.asarray(weights, dtype=float)
        if weights.shape != (len(models),):
            raise InvalidParameter("one weight per member required")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise NegativeWeight("superposition weights must be finite and nonnegative")
        self.models, self.weights = models, weights
        self.aging = any(m.aging for m in models)

    @property
    def has_branch_form(self):
        return all(m.has_branch_form for m in self.models)

    def _sum(self, fn):
        out = None
        for m, w in zip(self.models, self.weights):
            v = w * np.asarray(fn(m), dtype=float)
            out = v if out is None else out + v
        return out

    def equilibrium(self, t, where=None):
        return self._sum(lambda m: m.equilibrium(t, where))

    def equilibrium_rate(self, t, where=None):
        return self._sum(lambda m: m.equilibrium_rate(t, where))

    def branches(self, where=None):
        return [(w * k, th) for m, w in zip(self.models, self.weights) for k, th in m.branches(where)]

    def kernel(self, t, s, where=None):
        return self._sum(lambda m: m.kernel(t, s, where))

    def kernel_t(self, t, s, where=None):
        return self._sum(lambda m: m.kernel_t(t, s, where))

    def instantaneous_rate(self, t, where=None):
        return self._sum(lambda m: m.instantaneous_rate(t, where))

    def speed_constant(self, t, where=None):
        return self._sum(lambda m: m.speed_constant(t, where))

    def members(self):
        return list(zip(self.models, self.weights))

    def __repr__(self):
        return f"{type(self).__name__}({len(self.models)} members)"


class SuperposedIntegral(SuperposedSum):
    """Quadrature discretization of ``int C^tau d beta(tau)``."""

    kind = "SuperposedIntegral"

    def __init__(self, models, weights, nodes=None):
        super().__init__(models, weights)
        self.nodes = None if nodes is None else np.asarray(nodes, dtype=float)


class GenericKernel(MaterialModel):
    """User-supplied kernel ``kernel(t, s) -> 6x6 Kelvin``.

    ``kernel_t`` (partial t-derivative) and ``diag_rate`` (d/dt of
    ``kernel(t, t)``) default to centred finite differences.
    """

    kind = "GenericKernel"

    def __init__(self, kernel, kernel_t=None, diag_rate=None, fd_step=1e-6):
        self._kernel, self._kernel_t, self._diag_rate = kernel, kernel_t, diag_rate
        self.fd_step = fd_step

    @property
    def has_branch_form(self):
        return False

    def _h(self, t):
        return self.fd_step * max(1.0, abs(t))

    def kernel(self, t, s, where=None):
        if s > t:
            raise OutOfOrder(f"kernel needs s <= t, got s={s}, t={t}")
        return np.asarray(self._kernel(t, s), dtype=float)

    def kernel_t(self, t, s, where=None):
        if s > t:
            raise OutOfOrder(f"kernel needs s <= t, got s={s}, t={t}")
        if self._kernel_t is not None:
            return np.asarray(self._kernel_t(t, s), dtype=float)
        h = self._h(t)
        return (np.asarray(self._kernel(t + h, s)) - np.asarray(self._kernel(t - h, s))) / (2 * h) if t - h >= s else (
            np.asarray(self._kernel(t + h, s)) - np.asarray(self._kernel(t, s))
        ) / h

    def instantaneous_rate(self, t, where=None):
        if self._diag_rate is not None:
            return np.asarray(self._diag_rate(t), dtype=float)
        h = self._h(t)
        lo = max(t - h, 0.0)
        return (np.asarray(self._kernel(t + h, t + h)) - np.asarray(self._kernel(lo, lo))) / (t + h - lo)

    def speed_constant(self, t, where=None):
        return lambda_max(self.instantaneous(t, where))

    def __repr__(self):
        return "GenericKernel()"


class ExponentialKernel(GenericKernel):
    """``C(t, s) = expm(-t A) C0(s)`` with constant Kelvin matrix ``A``."""

    kind = "GenericKernel"

    def __init__(self, A, C0, C0_dot=None):
        self.A = _kelvin(A)
        self.C0 = C0
        self.C0_dot = C0_dot
        super().__init__(self._k, self._kt, self._dr)

    def _c0_dot(self, s):
        if self.C0_dot is not None:
            return np.asarray(self.C0_dot(s), dtype=float)
        h = 1e-6 * max(1.0, abs(s))
        return (np.asarray(self.C0(s + h)) - np.asarray(self.C0(s - h))) / (2 * h)

    def propagator(self, t):
        return expm(-t * self.A)

    def _k(self, t, s):
        return self.propagator(t) @ np.asarray(self.C0(s), dtype=float)

    def _kt(self, t, s):
        return -self.A @ self._k(t, s)

    def _dr(self, t):
        return -self.A @ self._k(t, t) + self.propagator(t) @ self._c0_dot(t)

    def __repr__(self):
        return "ExponentialKernel()"


def superpose_sum(models):
    """Kernel equal to the sum of the member kernels."""
    return SuperposedSum(models)


def superpose_integral(family, nodes, weights):
    """Kernel ``sum_k w_k C^{tau_k}`` discretizing ``int C^tau d beta(tau)``."""
    nodes = np.asarray(nodes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if nodes.size == 0:
        raise EmptySuperposition("quadrature has no nodes")
    if nodes.shape != weights.shape:
        raise InvalidParameter("nodes and weights must match")
    if np.any(weights < 0):
        raise NegativeWeight("measure weights must be nonnegative")
    return SuperposedIntegral([family(tau) for tau in nodes], weights, nodes)


def fractional_zener_superposition(alpha, a, C1, M, prony):
    """Fractional Zener kernel assembled explicitly as an elastic member plus a
    continuous superposition of ``exp(-(t-s) tau) M`` members."""
    C1, M = _kelvin(C1), _kelvin(M)
    family = SuperposedIntegral(
        [_Branch(M, 1.0 / tau) for tau in prony.nodes], prony.weights, prony.nodes
    )
    return SuperposedSum([_Fixed(C1), family])
