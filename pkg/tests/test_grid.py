import numpy as np
import pytest

from viscowave.grid import Grid, SpatialField, load_field, read_vcgr, resolve, write_vcgr


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(7, 8, 0.1, 0.1)
    with pytest.raises(ValueError):
        Grid(8, 8, 0.0, 0.1)


def test_grid_geometry():
    g = Grid(10, 8, 0.1, 0.2, origin=(1.0, -1.0))
    assert g.shape == (8, 10)
    assert g.extent == pytest.approx((1.0, 2.0, -1.0, 0.6))
    X, Y = g.centers()
    assert X.shape == (8, 10) and X[0, 0] == pytest.approx(1.05) and Y[0, 0] == pytest.approx(-0.9)
    assert g.xfaces()[0].shape == (8, 11)
    assert g.yfaces()[0].shape == (9, 10)
    assert g.corners()[0].shape == (9, 11)
    assert g.cell_index((1.26, -0.5)) == (2, 2)
    assert g.cell_index((100.0, -100.0)) == (0, 9)


def test_square():
    g = Grid.square(16, 2.0)
    assert g.dx == g.dy == 0.125 and g.cell_area == pytest.approx(0.015625)


def test_spatial_field_and_resolve():
    g = Grid.square(8)
    vals = np.arange(64.0).reshape(8, 8)
    f = SpatialField(vals, g)
    assert f((0.01, 0.99)) == vals[7, 0]
    assert f.min() == 0.0 and f.max() == 63.0
    assert resolve(2.0) == 2.0
    assert resolve(f, (0.3, 0.1)) == vals[0, 2]
    np.testing.assert_array_equal(resolve(f, g), vals)
    np.testing.assert_array_equal(resolve(3.0, g), 3.0)
    with pytest.raises(ValueError):
        SpatialField(np.zeros((4, 4)), g)


def test_vcgr_roundtrip(tmp_path, rng):
    arrays = [rng.normal(size=(9, 12)) for _ in range(3)]
    p = tmp_path / "f.vcgr"
    write_vcgr(p, arrays)
    raw = p.read_bytes()
    assert raw[:4] == b"VCGR" and len(raw) == 16 + 3 * 9 * 12 * 8
    back = read_vcgr(p)
    assert back.shape == (3, 9, 12)
    np.testing.assert_array_equal(back, np.stack(arrays))


def test_vcgr_errors(tmp_path):
    p = tmp_path / "bad.vcgr"
    p.write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(ValueError, match="magic"):
        read_vcgr(p)
    write_vcgr(p, [np.zeros((8, 8))])
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError, match="expected"):
        read_vcgr(p)
    with pytest.raises(ValueError):
        write_vcgr(p, [np.zeros((8, 8)), np.zeros((8, 9))])


def test_load_field(tmp_path):
    g = Grid.square(8)
    p = tmp_path / "rho.vcgr"
    write_vcgr(p, [np.full((8, 8), 2.0)])
    assert load_field(p, g).max() == 2.0
