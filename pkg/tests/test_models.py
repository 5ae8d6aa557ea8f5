import numpy as np
import pytest

from viscowave import mittag_leffler as ml
from viscowave.constitutive import (
    GLSM,
    AgingIso,
    Elastic,
    ExpAging,
    ExpConvIso,
    FractionalZener,
    GenericKernel,
    SuperposedSum,
    eval_C,
    eval_Ct,
    fractional_zener_superposition,
    superpose_integral,
    superpose_sum,
)
from viscowave.errors import EmptySuperposition, InvalidParameter, NegativeWeight, OutOfDomain, OutOfOrder
from viscowave.grid import Grid, SpatialField
from viscowave.kelvin import IDENTITY4, IXI, is_pd, isotropic_kelvin


def test_expconv_kernel_closed_form():
    m = ExpConvIso(2.0, 3.0, 0.5, 0.25)
    t, s = 1.2, 0.4
    want = 2.0 * np.exp(-0.8 / 0.5) * IXI + 6.0 * np.exp(-0.8 / 0.25) * IDENTITY4
    np.testing.assert_allclose(eval_C(m, None, t, s), want, rtol=1e-14)
    want_t = -2.0 / 0.5 * np.exp(-0.8 / 0.5) * IXI - 6.0 / 0.25 * np.exp(-0.8 / 0.25) * IDENTITY4
    np.testing.assert_allclose(eval_Ct(m, None, t, s), want_t, rtol=1e-14)


def test_glsm_instantaneous_and_equilibrium():
    m = GLSM(1.0, 2.0, [0.5, 0.25], [0.1, 1.0], [0.3], [0.2])
    np.testing.assert_allclose(m.instantaneous(0.0), isotropic_kelvin(1.75, 2.3), rtol=1e-14)
    np.testing.assert_allclose(m.kernel(1e4, 0.0), isotropic_kelvin(1.0, 2.0), atol=1e-12)
    assert float(m.speed_constant(0.0)) == pytest.approx(1.75 + 2 * 2.3)


def test_aging_kernel_depends_on_current_time_only():
    m = AgingIso(ExpAging(2.0, 1.0, 0.5), 1.0)
    np.testing.assert_allclose(m.kernel(0.7, 0.1), m.kernel(0.7, 0.6))
    assert m.aging
    np.testing.assert_allclose(m.instantaneous_rate(0.7), -np.exp(-1.4) * 2 * IXI, rtol=1e-13)


@pytest.mark.parametrize("name", ["Elastic", "ExpConvIso", "GLSM", "AgingIso", "AgingPlusExp", "FractionalZener"])
def test_kernel_rate_matches_finite_difference(zoo, name):
    m = zoo[name]
    t, s, h = 0.3, 0.1, 1e-6
    fd = (m.kernel(t + h, s) - m.kernel(t - h, s)) / (2 * h)
    np.testing.assert_allclose(m.kernel_t(t, s), fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("name", ["Elastic", "ExpConvIso", "GLSM", "AgingIso", "AgingPlusExp", "FractionalZener"])
def test_branch_invariants(zoo, name):
    m = zoo[name]
    for t in (0.0, 0.5, 3.0):
        eq = m.equilibrium(t)
        assert np.all(np.linalg.eigvalsh(eq) >= -1e-12)
        assert np.all(np.linalg.eigvalsh(-m.equilibrium_rate(t)) >= -1e-12)
    for k, theta in m.branches():
        assert np.all(np.linalg.eigvalsh(k) >= -1e-12) and np.all(np.asarray(theta) > 0)


def test_kernel_order_enforced(zoo):
    for m in zoo.values():
        with pytest.raises(OutOfOrder):
            m.kernel(0.1, 0.2)


def test_fractional_rate_unbounded_at_diagonal(fz_model):
    with pytest.raises(OutOfDomain):
        fz_model.kernel_t(0.5, 0.5)


def test_fractional_exact_kernel_vs_prony(fz_model):
    for lag in (1e-2, 0.1, 1.0, 10.0):
        exact = fz_model.kernel(lag, 0.0)
        approx = fz_model.equilibrium(lag) + sum(k * np.exp(-lag / th) for k, th in fz_model.branches())
        np.testing.assert_allclose(approx, exact, rtol=2e-3, atol=1e-12)


@pytest.mark.parametrize(
    "build",
    [
        lambda: Elastic(-1.0, 1.0),
        lambda: ExpConvIso(1.0, 1.0, 0.0, 1.0),
        lambda: GLSM(1.0, 1.0, [0.5], [], [], []),
        lambda: GLSM(1.0, 1.0, [-0.5], [1.0]),
        lambda: FractionalZener(1.0, 1.0, np.eye(6), np.eye(6)),
        lambda: FractionalZener(0.5, -1.0, np.eye(6), np.eye(6)),
        lambda: FractionalZener(0.5, 1.0, -np.eye(6), np.eye(6)),
        lambda: FractionalZener(0.5, 1.0, np.eye(6), np.eye(6), ml.prony_fit(0.4, 1.0, 8, (1e-3, 1e3))[0]),
    ],
)
def test_invalid_parameters(build):
    with pytest.raises(InvalidParameter):
        build()


def test_superposition_errors():
    with pytest.raises(EmptySuperposition):
        SuperposedSum([])
    with pytest.raises(NegativeWeight):
        SuperposedSum([Elastic(1, 1)], [-1.0])
    with pytest.raises(EmptySuperposition):
        superpose_integral(lambda tau: Elastic(1, 1), [], [])
    with pytest.raises(NegativeWeight):
        superpose_integral(lambda tau: Elastic(1, 1), [1.0], [-0.5])


def test_superpose_sum_adds_kernels():
    parts = [Elastic(1.0, 1.0), ExpConvIso(0.5, 0.3, 0.05, 0.1)]
    total = superpose_sum(parts)
    glsm = GLSM(1.0, 1.0, [0.5], [0.05], [0.3], [0.1])
    for t, s in [(0.0, 0.0), (0.2, 0.05), (1.0, 0.0)]:
        np.testing.assert_allclose(total.kernel(t, s), glsm.kernel(t, s), rtol=1e-15)
    assert total.speed_constant(0.0) == pytest.approx(glsm.speed_constant(0.0))


def test_superpose_integral_of_exponentials():
    nodes, weights = np.array([1.0, 3.0]), np.array([0.25, 0.75])
    sup = superpose_integral(lambda tau: ExpConvIso(1.0, 1.0, 1 / tau, 1 / tau), nodes, weights)
    lag = 0.4
    mix = weights @ np.exp(-nodes * lag)
    np.testing.assert_allclose(sup.kernel(lag, 0.0), mix * isotropic_kelvin(1.0, 1.0), rtol=1e-14)


def test_fractional_superposition_matches_branch_form(fz_model):
    sup = fractional_zener_superposition(fz_model.alpha, fz_model.a, fz_model.C1, fz_model.M, fz_model.prony)
    for lag in (0.0, 0.01, 0.5):
        np.testing.assert_allclose(
            sup.kernel(lag, 0.0),
            fz_model.equilibrium(lag) + sum(k * np.exp(-lag / th) for k, th in fz_model.branches()),
            rtol=1e-13,
        )


def test_spatial_parameters_resolve_per_cell():
    g = Grid.square(8)
    lam = np.ones(g.shape)
    lam[2, 3] = 4.0
    m = Elastic(SpatialField(lam, g), 1.0)
    c = m.equilibrium(0.0, g)
    assert c.shape == (8, 8, 6, 6)
    np.testing.assert_allclose(c[2, 3], isotropic_kelvin(4.0, 1.0))
    assert is_pd(m.equilibrium(0.0, (0.9, 0.9)))


def test_generic_kernel_finite_difference_rates():
    c0 = isotropic_kelvin(1.0, 1.0)
    g = GenericKernel(lambda t, s: np.exp(-(t - s)) * (1 + np.exp(-t)) * c0)
    t, s = 0.7, 0.2
    exact = -(np.exp(-(t - s)) * (1 + 2 * np.exp(-t))) * c0
    np.testing.assert_allclose(g.kernel_t(t, s), exact, rtol=1e-8)
    assert not g.has_branch_form
