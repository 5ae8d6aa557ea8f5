import numpy as np
import pytest

from viscowave import mittag_leffler as ml
from viscowave.audit import leapfrog_energy, total_energy
from viscowave.constitutive import Elastic, ExpConvIso, FractionalZener, GenericKernel, random_histories, response
from viscowave.errors import NonPositiveDensity, UnsupportedKind, Unstable
from viscowave.grid import Grid, SpatialField
from viscowave.kelvin import isotropic_kelvin
from viscowave.wavesim import Medium, Pulse, SimConfig, Solver, bump, corner_harmonic, stable_dt, time_step
from viscowave.wavesim.io import load_run, read_manifest, write_run
from viscowave.errors import InsufficientSnapshots

SQRT2 = np.sqrt(2.0)


def _cfg(model=None, n=64, **kw):
    kw.setdefault("t_end", 0.1)
    kw.setdefault("pulses", [Pulse("radial", (0.5, 0.5), 0.15)])
    return SimConfig(Grid.square(n), model or Elastic(1.0, 1.0), **kw)


def test_bump_profile():
    assert bump(0.0) == 1.0
    assert bump(1.0) == 0.0 and bump(-1.5) == 0.0
    np.testing.assert_allclose(bump(0.5), 0.75**4)


def test_corner_harmonic_averages():
    v = np.array([[1.0, 2.0], [4.0, 4.0]])
    c = corner_harmonic(v)
    assert c.shape == (3, 3)
    assert c[1, 1] == pytest.approx(4 / (1 + 0.5 + 0.25 + 0.25))
    assert c[0, 0] == pytest.approx(1.0)
    z = v.copy()
    z[0, 0] = 0.0
    assert corner_harmonic(z)[1, 1] == 0.0


def test_stable_dt_examples():
    g = Grid.square(100)
    cfg = SimConfig(g, Elastic(1.0, 1.0))
    assert stable_dt(cfg) == pytest.approx(0.45 * 0.01 / np.sqrt(3.0), rel=1e-14)
    heavy = SimConfig(g, Elastic(1.0, 1.0), rho=2.0)
    assert stable_dt(heavy) == pytest.approx(stable_dt(cfg) * SQRT2, rel=1e-14)


def test_time_step_divides_end_time():
    cfg = _cfg(t_end=0.1)
    dt, n = time_step(cfg)
    assert dt <= stable_dt(cfg) and n * dt == pytest.approx(0.1, rel=1e-14)
    assert time_step(_cfg(t_end=0.0))[1] == 0


def test_zero_end_time_gives_one_snapshot():
    snaps = list(Solver(_cfg(t_end=0.0)).run())
    assert len(snaps) == 1 and snaps[0].t == 0.0


def test_zero_state_stays_zero():
    s = Solver(_cfg(ExpConvIso(1, 1, 0.1, 0.1), pulses=[]))
    for snap in s.run():
        for f in ("vx", "vy", "sxx", "syy", "sxy"):
            assert not np.any(getattr(snap, f))


def test_radial_pulse_mirror_symmetry():
    snap = list(Solver(_cfg(n=48, t_end=0.08)).run())[-1]
    np.testing.assert_allclose(snap.vx, -snap.vx[:, ::-1], atol=1e-14)
    np.testing.assert_allclose(snap.vy, -snap.vy[::-1, :], atol=1e-14)
    np.testing.assert_allclose(snap.sxx, snap.sxx[:, ::-1], atol=1e-14)


@pytest.mark.parametrize("model", [Elastic(1.0, 1.0), ExpConvIso(1.0, 1.0, 0.05, 0.1)])
def test_discrete_causality(model):
    n = 64
    cfg = _cfg(model, n, t_end=1.0, dt=0.002, pulses=[Pulse("point", (0.5, 0.5))])
    solver = Solver(cfg)
    state = solver.initial_state()
    iy, ix = np.argwhere(state.vx)[0]
    for k in range(1, 9):
        state = solver.step(state)
        hit = np.argwhere(np.abs(state.vx) > 0)
        dist = np.maximum(np.abs(hit[:, 0] - iy), np.abs(hit[:, 1] - ix))
        assert dist.max() <= k


@pytest.mark.parametrize("name", ["ExpConvIso", "GLSM", "AgingIso", "AgingPlusExp", "FractionalZener"])
def test_uniform_drive_matches_constitutive_response(zoo, rng, name):
    model = zoo[name]
    solver = Solver(SimConfig(Grid.square(8), model, t_end=0.0))
    h = random_histories(rng, 1, 0.5, 41, dims=2)
    single = type(h)(h.times, h.rates[:, 0])
    sxx, syy, sxy = solver.drive_uniform(single)
    want = response(model, None, single).sigma
    scale = np.abs(want).max()
    assert np.abs(sxx[3, 3] - want[0]) <= 1e-12 * scale
    assert np.abs(syy[3, 3] - want[1]) <= 1e-12 * scale
    assert np.abs(sxy[3, 3] - want[5] / SQRT2) <= 1e-12 * scale


@pytest.mark.parametrize("boundary", ["clamped", "free"])
def test_elastic_energy_conserved(boundary):
    cfg = _cfg(n=128, t_end=0.4, stride=8, boundary=boundary, pulses=[Pulse("radial", (0.4, 0.55), 0.15)])
    solver = Solver(cfg)
    e = np.array([total_energy(s, solver.medium) for s in solver.run()])
    assert np.abs(e / e[0] - 1).max() <= 5e-3


def test_leapfrog_energy_is_exactly_conserved_for_elastic():
    cfg = _cfg(n=48, t_end=0.3)
    solver = Solver(cfg)
    state = solver.initial_state()
    vals = []
    for _ in range(40):
        vx, vy = solver.half_kick(state)
        vals.append(leapfrog_energy(state, vx, vy, solver.medium))
        state = solver._finish(state, vx, vy)
    assert np.ptp(vals) <= 1e-12 * vals[0]


def test_viscous_energy_decays():
    cfg = _cfg(ExpConvIso(1.0, 1.0, 0.05, 0.08), n=96, t_end=0.4, stride=4)
    solver = Solver(cfg)
    e = np.array([total_energy(s, solver.medium) for s in solver.run()])
    assert np.all(np.diff(e) <= 1e-3 * e[0])
    assert e[-1] < 0.9 * e[0]


def test_generic_kernel_cannot_be_stepped():
    g = GenericKernel(lambda t, s: np.exp(-(t - s)) * np.eye(6))
    with pytest.raises(UnsupportedKind):
        Solver(_cfg(g))


def test_out_of_plane_coupling_rejected():
    c1 = isotropic_kelvin(1.0, 1.0)
    m = c1.copy() * 0.5
    m[0, 5] = m[5, 0] = 0.05
    prony, _ = ml.prony_fit(0.5, 0.1, 8, (1e-4, 1e2), n_check=17)
    with pytest.raises(UnsupportedKind):
        Solver(_cfg(FractionalZener(0.5, 0.1, c1, m, prony)))


def test_large_step_is_flagged_unstable():
    cfg = _cfg(n=32, t_end=1.0, dt=0.05, check_every=5)
    with pytest.raises(Unstable):
        list(Solver(cfg).run())


def test_bad_configs():
    with pytest.raises(NonPositiveDensity):
        _cfg(rho=0.0)
    with pytest.raises(ValueError):
        _cfg(boundary="periodic")
    with pytest.raises(ValueError):
        _cfg(stride=0)
    with pytest.raises(ValueError):
        Pulse("spiral")


def test_heterogeneous_density_face_averages():
    g = Grid.square(8)
    rho = np.ones(g.shape)
    rho[:, 4:] = 3.0
    med = Medium(SimConfig(g, Elastic(1, 1), SpatialField(rho, g)))
    assert med.rho_vx[0, 4] == 2.0 and med.rho_vx[0, 0] == 1.0 and med.rho_vx[0, -1] == 3.0


@pytest.mark.parametrize("compact", [False, True])
def test_snapshot_files_roundtrip(tmp_path, compact):
    solver = Solver(_cfg(ExpConvIso(1, 1, 0.1, 0.2), n=16, t_end=0.05, stride=3))
    snaps = list(solver.run())
    n = write_run(tmp_path, iter(snaps), solver.medium, compact=compact)
    back = load_run(tmp_path)
    assert n == len(back) == len(snaps)
    for a, b in zip(snaps, back):
        assert a.t == b.t and a.step == b.step
        for f in ("vx", "vy", "exx", "eyy", "gxy", "sxx", "syy", "sxy"):
            np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
        if compact:
            assert b.xi_n is None
            np.testing.assert_allclose(total_energy(a, solver.medium), total_energy(b, solver.medium), rtol=1e-14)
        else:
            np.testing.assert_array_equal(a.xi_n, b.xi_n)
            np.testing.assert_array_equal(a.xi_s, b.xi_s)


def test_missing_manifest(tmp_path):
    with pytest.raises(InsufficientSnapshots):
        read_manifest(tmp_path)
