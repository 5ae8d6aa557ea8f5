import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from viscowave.errors import SingularStiffness
from viscowave.kelvin import (
    IDENTITY4,
    IXI,
    ComplianceTensor,
    StiffnessTensor,
    apply,
    double_dot,
    eigenvalues,
    from_kelvin_vec,
    from_text,
    invert,
    is_pd,
    is_psd,
    isotropic_kelvin,
    isotropic_stiffness,
    kelvin_to_tensor4,
    lambda_max,
    psd_factor,
    psd_quad,
    sym,
    tensor4_to_kelvin,
    to_kelvin_vec,
    to_text,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
mat3 = arrays(np.float64, (3, 3), elements=finite).map(sym)


@given(mat3)
def test_vector_roundtrip(m):
    np.testing.assert_allclose(from_kelvin_vec(to_kelvin_vec(m)), m, rtol=0, atol=1e-12 * (1 + np.abs(m).max()))


@given(mat3, mat3)
def test_inner_product_is_preserved(a, b):
    scale = 1 + np.abs(a).max() * np.abs(b).max()
    assert abs(double_dot(a, b) - to_kelvin_vec(a) @ to_kelvin_vec(b)) <= 1e-12 * scale * 9


def test_norm_matches_frobenius(rng):
    m = sym(rng.normal(size=(100, 3, 3)))
    np.testing.assert_allclose(np.linalg.norm(to_kelvin_vec(m), axis=-1), np.linalg.norm(m, axis=(-2, -1)), rtol=1e-14)


def test_voigt_ordering():
    m = np.array([[1.0, 6.0, 5.0], [6.0, 2.0, 4.0], [5.0, 4.0, 3.0]])
    np.testing.assert_allclose(to_kelvin_vec(m), [1, 2, 3, 4 * np.sqrt(2), 5 * np.sqrt(2), 6 * np.sqrt(2)])


def _random_c4(rng):
    k = rng.normal(size=(6, 6))
    return kelvin_to_tensor4(k + k.T)


def test_tensor4_roundtrip(rng):
    k = rng.normal(size=(6, 6))
    k = k + k.T
    np.testing.assert_allclose(tensor4_to_kelvin(kelvin_to_tensor4(k)), k, rtol=1e-14, atol=1e-14)


def test_contraction_consistency(rng):
    c4 = _random_c4(rng)
    m = sym(rng.normal(size=(3, 3)))
    direct = np.einsum("ijkl,kl->ij", c4, m)
    np.testing.assert_allclose(apply(tensor4_to_kelvin(c4), m), direct, rtol=1e-12, atol=1e-12)


def test_tensor4_has_minor_and_major_symmetry(rng):
    c4 = _random_c4(rng)
    np.testing.assert_allclose(c4, c4.transpose(1, 0, 2, 3))
    np.testing.assert_allclose(c4, c4.transpose(0, 1, 3, 2))
    np.testing.assert_allclose(c4, c4.transpose(2, 3, 0, 1))


@pytest.mark.parametrize("lam,mu", [(1.0, 1.0), (2.5, 0.3), (0.0, 4.0), (1e6, 1e-3)])
def test_isotropic_spectrum(lam, mu):
    ev = np.sort(eigenvalues(isotropic_stiffness(lam, mu)))
    want = np.sort([3 * lam + 2 * mu] + [2 * mu] * 5)
    # eigenvalue errors scale with the largest eigenvalue
    np.testing.assert_allclose(ev, want, rtol=1e-12, atol=1e-12 * want.max())


def test_isotropic_matches_tensor_formula():
    lam, mu = 1.3, 0.7
    d = np.eye(3)
    c4 = lam * np.einsum("ij,kl->ijkl", d, d) + mu * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d))
    np.testing.assert_allclose(tensor4_to_kelvin(c4), isotropic_kelvin(lam, mu), atol=1e-14)
    np.testing.assert_allclose(isotropic_kelvin(lam, mu), lam * IXI + 2 * mu * IDENTITY4)


def test_isotropic_kelvin_broadcasts():
    k = isotropic_kelvin(np.array([1.0, 2.0]), np.array([1.0, 1.0]))
    assert k.shape == (2, 6, 6)
    np.testing.assert_allclose(lambda_max(k), [5.0, 8.0])


def test_rayleigh_bound(rng):
    for _ in range(50):
        a = rng.normal(size=(6, 6))
        k = a @ a.T
        v = rng.normal(size=(20, 6))
        q = np.einsum("ni,ij,nj->n", v, k, v)
        assert np.all(q <= lambda_max(k) * np.sum(v * v, axis=1) * (1 + 1e-12))


def test_stiffness_is_symmetrized_and_frozen(rng):
    a = rng.normal(size=(6, 6))
    c = StiffnessTensor(a)
    np.testing.assert_allclose(c.kelvin, 0.5 * (a + a.T))
    with pytest.raises(ValueError):
        c.kelvin[0, 0] = 1.0
    with pytest.raises(ValueError):
        StiffnessTensor(np.eye(5))


def test_stiffness_arithmetic():
    c = isotropic_stiffness(1.0, 1.0)
    d = 2.0 * c + c
    np.testing.assert_allclose(d.kelvin, 3.0 * c.kelvin)


def test_invert_and_singular():
    c = isotropic_stiffness(1.0, 2.0)
    s = invert(c)
    assert isinstance(s, ComplianceTensor)
    np.testing.assert_allclose(s.kelvin @ c.kelvin, np.eye(6), atol=1e-14)
    with pytest.raises(SingularStiffness):
        invert(isotropic_stiffness(1.0, 0.0))


def test_definiteness_checks():
    assert is_pd(isotropic_kelvin(1.0, 1.0))
    assert not is_pd(isotropic_kelvin(1.0, 0.0))
    assert is_psd(isotropic_kelvin(1.0, 0.0))
    assert not is_psd(isotropic_kelvin(-1.0, 0.1))


def test_psd_quad_is_nonnegative_and_exact(rng):
    a = rng.normal(size=(6, 3))
    k = a @ a.T
    x = rng.normal(size=(10, 6))
    q = psd_quad(psd_factor(k), x)
    assert np.all(q >= 0)
    np.testing.assert_allclose(q, np.einsum("ni,ij,nj->n", x, k, x), rtol=1e-10, atol=1e-12)


def test_text_roundtrip(rng):
    a = rng.normal(size=(6, 6))
    c = StiffnessTensor(a + a.T)
    np.testing.assert_array_equal(from_text(to_text(c)).kelvin, c.kelvin)
    with pytest.raises(ValueError):
        from_text("1 2 3")


@settings(max_examples=50)
@given(st.floats(0.01, 100), st.floats(0.01, 100))
def test_isotropic_max_eigenvalue(lam, mu):
    assert lambda_max(isotropic_kelvin(lam, mu)) == pytest.approx(3 * lam + 2 * mu, rel=1e-12)
