import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from viscowave import mittag_leffler as ml
from viscowave.errors import HistoryTooShort, InsufficientNodes, OutOfDomain


@pytest.mark.parametrize("x", [0.0, 1e-8, 0.3, 1.0, 1.5, 7.0, 40.0, 300.0])
def test_order_one_is_exponential(x):
    assert ml.ml_eval(1.0, -x) == pytest.approx(math.exp(-x), rel=1e-12, abs=0)


@pytest.mark.parametrize("x", [0.01, 0.5, 0.99, 1.01, 2.0, 10.0, 100.0, 1e4])
def test_half_order_matches_erfc(x):
    # E_{1/2}(-x) = exp(x^2) erfc(x)
    assert ml.ml_eval(0.5, -x) == pytest.approx(special.erfcx(x), rel=1e-12)


def test_half_order_frozen_value():
    assert ml.ml_eval(0.5, -1.0) == pytest.approx(0.42758357615580705, rel=1e-14)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9, 0.99])
@pytest.mark.parametrize("x", [0.2, 0.999, 1.001, 2.5, 6.0])
def test_matches_extended_precision_series(alpha, x):
    ref = ml.ml_series_mp(alpha, -x)
    assert ml.ml_eval(alpha, -x) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("x", [0.2, 0.999, 1.001])
def test_small_order_matches_series(x):
    assert ml.ml_eval(0.1, -x) == pytest.approx(ml.ml_series_mp(0.1, -x), rel=1e-12)


def test_array_evaluation_matches_scalar():
    z = -np.array([[0.0, 0.5], [3.0, 0.5]])
    out = ml.ml_eval(0.6, z)
    assert out.shape == (2, 2)
    assert out[1, 0] == ml.ml_eval(0.6, -3.0)
    assert out[0, 0] == 1.0


def test_domain_errors():
    with pytest.raises(OutOfDomain):
        ml.ml_eval(0.5, 1.0)
    with pytest.raises(OutOfDomain):
        ml.ml_eval(1.5, -1.0)
    with pytest.raises(OutOfDomain):
        ml.ml_eval(0.0, -1.0)
    with pytest.raises(OutOfDomain):
        ml.relaxation(0.5, 1.0, -1.0)
    with pytest.raises(OutOfDomain):
        ml.relaxation_rate(0.5, 1.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(1e-3, 1e2), st.floats(1.01, 3.0))
def test_relaxation_is_decreasing_and_positive(alpha, t, factor):
    a = 1.0
    r1, r2 = ml.relaxation(alpha, a, t), ml.relaxation(alpha, a, t * factor)
    assert 0 < r2 < r1 <= 1


@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.0])
def test_relaxation_rate_matches_difference(alpha):
    a, t, h = 0.7, 0.9, 1e-5
    fd = (ml.relaxation(alpha, a, t + h) - ml.relaxation(alpha, a, t - h)) / (2 * h)
    assert ml.relaxation_rate(alpha, a, t) == pytest.approx(fd, rel=1e-7)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8, 0.95])
def test_bernstein_total_mass(alpha):
    a = 2.0
    dens = lambda u: ml.bernstein_density(alpha, a, math.exp(u)) * math.exp(u)
    mass, _ = integrate.quad(dens, -60, 60, limit=500, epsabs=1e-13)
    window = ml.bernstein_cdf(alpha, a, math.exp(60)) - ml.bernstein_cdf(alpha, a, math.exp(-60))
    assert mass == pytest.approx(window, abs=1e-9)
    assert ml.bernstein_cdf(alpha, a, 0.0) == 0.0
    assert ml.bernstein_cdf(alpha, a, np.inf) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.3, 0.6])
def test_bernstein_cdf_integrates_density(alpha):
    a = 0.5
    tau = 3.7
    part, _ = integrate.quad(lambda u: ml.bernstein_density(alpha, a, math.exp(u)) * math.exp(u), -60, math.log(tau), limit=400)
    tail = ml.bernstein_cdf(alpha, a, math.exp(-60))
    assert ml.bernstein_cdf(alpha, a, tau) == pytest.approx(part + tail, abs=1e-10)


def test_bernstein_mixture_reproduces_relaxation():
    alpha, a, t = 0.45, 1.3, 0.8
    f = lambda u: math.exp(-t * math.exp(u)) * ml.bernstein_density(alpha, a, math.exp(u)) * math.exp(u)
    val, _ = integrate.quad(f, -60, 10, limit=500)
    assert val == pytest.approx(ml.relaxation(alpha, a, t), rel=1e-9)


def test_bernstein_concentrates_near_order_one():
    # derived from the closed-form distribution function; fixed for regression
    a = 1.0
    mass = ml.bernstein_cdf(0.999, a, 1.1 / a) - ml.bernstein_cdf(0.999, a, 0.9 / a)
    assert mass == pytest.approx(0.98097, abs=5e-5)
    wider = ml.bernstein_cdf(0.9999, a, 1.1 / a) - ml.bernstein_cdf(0.9999, a, 0.9 / a)
    assert wider > 0.99


@pytest.mark.parametrize("alpha,limit", [(0.3, 1e-5), (0.5, 5e-5), (0.7, 5e-4)])
def test_prony_fit_accuracy(alpha, limit):
    a = 1.0
    approx, rep = ml.prony_fit(alpha, a, 64, (1e-3 * a, 1e3 * a), tol=1e-3)
    assert len(approx) == 64
    assert rep.max_rel_err <= limit
    assert np.all(approx.weights >= 0) and approx.mass <= 1.0 + 1e-12


def test_prony_fit_scales_with_time_constant():
    p1, r1 = ml.prony_fit(0.5, 1.0, 32, (1e-3, 1e3))
    p2, r2 = ml.prony_fit(0.5, 10.0, 32, (1e-2, 1e4))
    np.testing.assert_allclose(p2.nodes, p1.nodes / 10.0, rtol=1e-10)
    np.testing.assert_allclose(p2.weights, p1.weights, rtol=1e-10)


def test_prony_polish_for_nearly_exponential_relaxation():
    plain, rep_plain = ml.prony_fit(0.999, 1.0, 8, (1e-3, 1e3))
    approx, rep = ml.prony_fit(0.999, 1.0, 8, (1e-3, 1e3), tol=1e-3, polish=True)
    assert rep.max_rel_err <= 1e-3 < rep_plain.max_rel_err


def test_prony_order_one_is_single_exponential():
    approx, rep = ml.prony_fit(1.0, 2.0, 5, (1e-3, 1e3))
    assert len(approx) == 1 and approx.nodes[0] == 0.5 and rep.max_rel_err < 1e-12


def test_prony_errors():
    with pytest.raises(InsufficientNodes):
        ml.prony_fit(0.5, 1.0, 0, (1e-3, 1e3))
    with pytest.raises(InsufficientNodes) as info:
        ml.prony_fit(0.5, 1.0, 4, (1e-3, 1e3), tol=1e-6)
    assert info.value.approx is not None and info.value.report.max_rel_err > 1e-6
    with pytest.raises(ValueError):
        ml.prony_fit(0.5, 1.0, 8, (1.0, 0.1))
    with pytest.raises(ValueError):
        ml.PronyApprox([1.0], [-1.0], 0.5, 1.0)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_caputo_exact_for_linear(alpha):
    dt = 0.01
    t = np.arange(101) * dt
    d = ml.caputo_l1(3.0 * t, alpha, dt)
    exact = 3.0 * t ** (1 - alpha) / special.gamma(2 - alpha)
    np.testing.assert_allclose(d, exact, rtol=1e-12, atol=1e-14)
    assert ml.caputo_derivative(3.0 * t, alpha, dt) == pytest.approx(exact[-1], rel=1e-12)


def test_caputo_of_square_converges():
    alpha = 0.5
    exact = 2.0 / special.gamma(3 - alpha)  # D^a t^2 at t=1
    errs = []
    for n in (50, 100, 200):
        t = np.linspace(0, 1, n + 1)
        errs.append(abs(ml.caputo_derivative(t**2, alpha, 1.0 / n) - exact))
    assert errs[2] < errs[1] < errs[0]
    assert math.log2(errs[1] / errs[2]) > 1.3


def test_caputo_componentwise():
    t = np.linspace(0, 1, 11)
    f = np.stack([t, 2 * t], axis=1)
    d = ml.caputo_l1(f, 0.4, 0.1)
    np.testing.assert_allclose(d[:, 1], 2 * d[:, 0])


def test_caputo_errors():
    with pytest.raises(HistoryTooShort):
        ml.caputo_l1([1.0], 0.5, 0.1)
    with pytest.raises(OutOfDomain):
        ml.caputo_derivative([0.0, 1.0], 1.0, 0.1)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9])
def test_relaxation_is_caputo_eigenfunction(alpha):
    a, n = 2.0, 400
    dt = 5.0 * a / n
    t = np.arange(n + 1) * dt
    f = ml.relaxation(alpha, a, t)
    res = np.abs(a**alpha * ml.caputo_l1(f, alpha, dt) + f)
    # the L1 scheme cannot resolve the t^alpha cusp in the first few samples
    assert res[t >= 0.1 * a].max() <= 2e-2
    assert res[1] > 10 * res[t >= 0.1 * a].max()
