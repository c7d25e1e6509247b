import numpy as np
import pytest

from vortexlab.gl.grid import PolarField, PolarGrid, field_from_function, zero_field


def test_grid_layout():
    g = PolarGrid.uniform(50, 10)
    h = 1 / 49.5
    assert g.r[0] == pytest.approx(h / 2) and g.r[-1] == 1.0
    assert np.all(np.diff(g.r) > 0)
    # cell volumes tile the unit disc: sum V = 1/2
    assert g.V.sum() == pytest.approx(0.5, abs=1e-14)
    assert g.n_theta % 12 == 0 and g.n_theta >= 4 * 10 + 1
    assert list(g.modes) == list(range(-10, 11))


def test_sector_grid_modes():
    g = PolarGrid.uniform(20, 12, k_sym=3)
    assert np.all(g.modes % 3 == 0)
    assert g.theta[-1] < 2 * np.pi / 3


def test_transform_roundtrip():
    g = PolarGrid.uniform(16, 8)
    rng = np.random.default_rng(1)
    c = rng.normal(size=(g.n_modes, g.Nr)) + 1j * rng.normal(size=(g.n_modes, g.Nr))
    assert np.allclose(g.to_modes(g.to_physical(c)), c, atol=1e-13)


def test_integrate_constant_exact():
    g = PolarGrid.uniform(37, 6)
    assert g.integrate(np.ones((g.Nr, g.n_theta))) == pytest.approx(np.pi, abs=1e-13)


def test_stretched_grid_clusters_nodes():
    g = PolarGrid.stretched(80, 8, centers=(0.5,), width=0.05)
    dr = np.diff(g.r)
    i = np.searchsorted(g.r, 0.5)
    assert dr[i] < dr[5] and g.r[-1] == 1.0


def test_field_boundary_and_evaluate():
    g = PolarGrid.uniform(60, 6)
    f = field_from_function(lambda z: z, g, 0.1, 1)
    assert f.boundary_exact()
    z = np.array([0.3 + 0.2j, -0.5j, 0.01])
    assert np.allclose(f.evaluate(z), z, atol=1e-10)


def test_rotation_of_field():
    g = PolarGrid.uniform(40, 8)
    f = field_from_function(lambda z: z * (z - 0.3), g, 0.1, 2)
    a = 0.4
    z = 0.25 + 0.1j
    assert f.rotated(a).evaluate(z)[0] == pytest.approx(f.evaluate(z * np.exp(-1j * a))[0], abs=1e-10)


def test_save_load_roundtrip(tmp_path):
    g = PolarGrid.uniform(30, 6, k_sym=2)
    f = field_from_function(lambda z: z ** 2, g, 0.05, 2, k_sym=2)
    f.save(tmp_path / "f.bin")
    h = PolarField.load(tmp_path / "f.bin")
    assert np.array_equal(h.coeffs, f.coeffs)
    assert h.epsilon == f.epsilon and h.n_bc == 2 and h.k_sym == 2
    assert np.array_equal(h.grid.r, g.r)


def test_zero_field_and_sector_norm():
    g = PolarGrid.uniform(10, 4)
    f = zero_field(g, 0.1, 0)
    assert f.boundary_exact() and f.sector_norm(2) == 0.0


def test_raster_csv(tmp_path):
    g = PolarGrid.uniform(10, 4)
    f = zero_field(g, 0.1, 0)
    f.export_raster_csv(tmp_path / "r.csv", n_r=4, n_theta=8)
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "r,theta,modulus,phase" and len(lines) == 33
