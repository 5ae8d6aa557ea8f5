"""Symmetric 2- and 4-tensors in Kelvin (norm-preserving) notation.

A symmetric 3x3 matrix ``m`` maps to the 6-vector

    (m11, m22, m33, sqrt2*m23, sqrt2*m31, sqrt2*m12)

and a 4-tensor with minor and major symmetries maps to a symmetric 6x6
matrix whose mixed normal/shear entries carry sqrt2 and whose shear/shear
entries carry a factor 2.  Because the map is an isometry, the spectrum of
the 6x6 matrix is the spectrum of the tensor acting on symmetric matrices
(Voigt notation does not have this property).

All functions accept arrays with arbitrary leading batch dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularStiffness

SQRT2 = np.sqrt(2.0)

# Kelvin slot -> (i, j) index pair
KELVIN_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (2, 0), (0, 1))
_KELVIN_SCALE = np.array([1.0, 1.0, 1.0, SQRT2, SQRT2, SQRT2])

#: I (x) I in Kelvin form
IXI = np.zeros((6, 6))
IXI[:3, :3] = 1.0
#: symmetric fourth-order identity in Kelvin form
IDENTITY4 = np.eye(6)

DEFAULT_RTOL = 1e-10


def to_kelvin_vec(m):
    """Kelvin 6-vector of symmetric matrices ``m`` with shape (..., 3, 3)."""
    m = np.asarray(m, dtype=float)
    rows = [0, 1, 2, 1, 2, 0]
    cols = [0, 1, 2, 2, 0, 1]
    return m[..., rows, cols] * _KELVIN_SCALE


def from_kelvin_vec(v):
    """Inverse of :func:`to_kelvin_vec`; returns shape (..., 3, 3)."""
    v = np.asarray(v, dtype=float)
    d = v / _KELVIN_SCALE
    m = np.empty(v.shape[:-1] + (3, 3))
    for slot, (i, j) in enumerate(KELVIN_PAIRS):
        m[..., i, j] = d[..., slot]
        m[..., j, i] = d[..., slot]
    return m


def sym(m):
    """Symmetric part of (..., 3, 3) matrices."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def double_dot(a, b):
    """Componentwise inner product ``a : b`` of (..., 3, 3) matrices."""
    return np.einsum("...ij,...ij->...", np.asarray(a, float), np.asarray(b, float))


def tensor4_to_kelvin(c4):
    """Kelvin 6x6 matrix from a full (..., 3, 3, 3, 3) tensor."""
    c4 = np.asarray(c4, dtype=float)
    out = np.empty(c4.shape[:-4] + (6, 6))
    for a, (i, j) in enumerate(KELVIN_PAIRS):
        for b, (k, l) in enumerate(KELVIN_PAIRS):
            out[..., a, b] = c4[..., i, j, k, l] * _KELVIN_SCALE[a] * _KELVIN_SCALE[b]
    return out


def kelvin_to_tensor4(k):
    """Full (..., 3, 3, 3, 3) tensor with minor symmetries from a Kelvin matrix."""
    k = np.asarray(k, dtype=float)
    out = np.empty(k.shape[:-2] + (3, 3, 3, 3))
    for a, (i, j) in enumerate(KELVIN_PAIRS):
        for b, (p, q) in enumerate(KELVIN_PAIRS):
            val = k[..., a, b] / (_KELVIN_SCALE[a] * _KELVIN_SCALE[b])
            for (r, s) in {(i, j), (j, i)}:
                for (u, w) in {(p, q), (q, p)}:
                    out[..., r, s, u, w] = val
    return out


@dataclass(frozen=True, eq=False)
class StiffnessTensor:
    """Symmetric 4-tensor stored as its Kelvin 6x6 matrix (stress units)."""

    kelvin: np.ndarray

    def __post_init__(self):
        k = np.array(self.kelvin, dtype=float)
        if k.shape[-2:] != (6, 6):
            raise ValueError(f"Kelvin matrix must be 6x6, got {k.shape}")
        k = 0.5 * (k + np.swapaxes(k, -1, -2))
        k.setflags(write=False)
        object.__setattr__(self, "kelvin", k)

    def __add__(self, other):
        return type(self)(self.kelvin + other.kelvin)

    def __mul__(self, scalar):
        return type(self)(self.kelvin * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"{type(self).__name__}(eigenvalues={np.round(eigenvalues(self), 6)})"


class ComplianceTensor(StiffnessTensor):
    """Inverse of a positive definite stiffness (inverse-stress units)."""


def _as_kelvin(c):
    return c.kelvin if isinstance(c, StiffnessTensor) else np.asarray(c, dtype=float)


def isotropic_stiffness(lam, mu):
    """``lam I(x)I + 2 mu II`` as a :class:`StiffnessTensor`."""
    return StiffnessTensor(isotropic_kelvin(lam, mu))


def isotropic_kelvin(lam, mu):
    """Raw Kelvin matrices for (possibly array-valued) Lame parameters."""
    lam = np.asarray(lam, dtype=float)[..., None, None]
    mu = np.asarray(mu, dtype=float)[..., None, None]
    return lam * IXI + 2.0 * mu * IDENTITY4


def apply(c, m):
    """Contract the 4-tensor ``c`` with symmetric matrices ``m``: returns ``c m``."""
    v = to_kelvin_vec(m)
    return from_kelvin_vec(np.einsum("...ab,...b->...a", _as_kelvin(c), v))


def eigenvalues(c):
    """Ascending eigenvalues of the Kelvin matrix."""
    return np.linalg.eigvalsh(_as_kelvin(c))


def lambda_max(c):
    return eigenvalues(c)[..., -1]


def _scale(k):
    return np.maximum(np.max(np.abs(k), axis=(-1, -2)), np.finfo(float).tiny)


def is_psd(c, tol=None):
    """True iff the minimum eigenvalue is >= -tol.

    ``tol`` defaults to ``1e-10`` times the largest entry magnitude.
    """
    k = _as_kelvin(c)
    if tol is None:
        tol = DEFAULT_RTOL * _scale(k)
    return eigenvalues(k)[..., 0] >= -tol


def is_pd(c, tol=None):
    k = _as_kelvin(c)
    if tol is None:
        tol = DEFAULT_RTOL * _scale(k)
    return eigenvalues(k)[..., 0] > tol


def invert(c, tol=None):
    """Compliance of a positive definite stiffness."""
    k = _as_kelvin(c)
    if not np.all(is_pd(k, tol)):
        raise SingularStiffness(
            f"stiffness not positive definite (min eigenvalue {eigenvalues(k)[..., 0].min():.3e})"
        )
    return ComplianceTensor(np.linalg.inv(k))


def psd_factor(k):
    """Return ``(w, v)`` with ``k = v diag(w) v^T`` and ``w`` clipped at 0.

    Quadratic forms evaluated as ``sum(w * (v^T x)**2)`` are nonnegative by
    construction, which removes round-off sign flips for rank-deficient ``k``.
    """
    w, v = np.linalg.eigh(np.asarray(k, dtype=float))
    return np.clip(w, 0.0, None), v


def psd_quad(factor, x):
    """``x . k x`` for a factor from :func:`psd_factor`; ``x`` is (..., 6)."""
    w, v = factor
    y = np.einsum("...ab,...a->...b", v, x)
    return np.einsum("...b,...b->...", w, y * y)


def to_text(c):
    """21 upper-triangle Kelvin entries, row-major, whitespace separated."""
    k = _as_kelvin(c)
    iu = np.triu_indices(6)
    return " ".join(repr(float(x)) for x in k[iu])


def from_text(text):
    vals = np.array(text.split(), dtype=float)
    if vals.size != 21:
        raise ValueError(f"expected 21 Kelvin entries, got {vals.size}")
    k = np.zeros((6, 6))
    k[np.triu_indices(6)] = vals
    k = k + np.triu(k, 1).T
    return StiffnessTensor(k)
