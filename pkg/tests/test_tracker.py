import numpy as np
import pytest

from vortexlab.equilibria import RingFamily, solve_equilibrium
from vortexlab.errors import TrackingError
from vortexlab.gl.bbh import bbh_initial_data, core_profile
from vortexlab.gl.flow import constrained_relax, reconstruct_time_periodic
from vortexlab.gl.functionals import SolverParams
from vortexlab.gl.grid import PolarGrid, field_from_function, zero_field
from vortexlab.pvf import VortexConfig, polygon_config
from vortexlab.tracker import (bump, compare_to_pvf, detect_vortices, jacobian_pairing, pohozaev_residual,
                               vanishing_gradient_check, vanishing_gradient_defects, winding_number,
                               write_detections_csv)

EPS = 0.02


@pytest.fixture(scope="module")
def fine_grid():
    return PolarGrid.uniform(250, 160)


def test_smooth_unimodular_field_has_no_jacobian():
    g = PolarGrid.uniform(80, 16)
    f = field_from_function(lambda z: np.exp(1j * 2 * (z.real ** 2 - z.imag)), g, 0.1, 0)
    f.coeffs[:, -1] = g.to_modes(np.exp(1j * 2 * (np.cos(g.theta) ** 2 - np.sin(g.theta)))[None, :])[:, 0]
    assert abs(jacobian_pairing(f, bump(0.1, 0.6))) <= 1e-2


@pytest.mark.parametrize("n", [1, 2])
def test_core_example_jacobian(n, fine_grid):
    # f(r/eps) e^{i n theta} pairs with phi to n pi phi(0) as eps -> 0
    f = field_from_function(lambda z: core_profile(np.abs(z) / EPS) ** n * np.exp(1j * n * np.angle(z)),
                            fine_grid, EPS, n)
    phi = bump(0.05 + 0.02j, 0.3)
    want = n * np.pi * float(phi(0.0, 0.0))
    assert jacobian_pairing(f, phi) == pytest.approx(want, rel=0.05)


def test_jacobian_estimate_bbh(fine_grid):
    cfg = VortexConfig([0.3, -0.25j], [1, -1])
    f = bbh_initial_data(cfg, EPS, fine_grid, check_resolution=False)
    for phi in (bump(0.3, 0.2), bump(-0.25j, 0.2), bump(0.1 - 0.1j, 0.5)):
        want = np.pi * sum(d * float(phi(z.real, z.imag)) for z, d in zip(cfg.positions, cfg.degrees))
        scale = np.pi * 2 * 1.0
        assert abs(jacobian_pairing(f, phi) - want) <= 0.05 * scale


def test_detection_empty_for_constant():
    f = zero_field(PolarGrid.uniform(30, 6), 0.05, 0)
    f.coeffs[f.grid.mode_index(0)] = 1.0
    assert detect_vortices(f) == []


def test_detection_round_trip_same_sign(fine_grid):
    f = bbh_initial_data(VortexConfig([0.5, -0.5], [1, 1]), EPS, fine_grid, check_resolution=False)
    obs = sorted(detect_vortices(f), key=lambda o: o.position.real)
    h = 1 / 249.5
    assert [o.degree for o in obs] == [1, 1]
    assert abs(obs[0].position + 0.5) <= h and abs(obs[1].position - 0.5) <= h


def test_detection_round_trip_signs(fine_grid):
    f = bbh_initial_data(VortexConfig([0.5, -0.5], [1, -1]), EPS, fine_grid, check_resolution=False)
    obs = sorted(detect_vortices(f), key=lambda o: o.position.real)
    assert [o.degree for o in obs] == [-1, 1]


def test_winding_number(fine_grid):
    f = bbh_initial_data(VortexConfig([0.4j], [-1]), EPS, fine_grid, check_resolution=False)
    assert winding_number(f, 0.4j, 0.1) == -1
    assert winding_number(f, -0.4j, 0.1) == 0


def test_pohozaev_trivial_and_terms():
    g = PolarGrid.uniform(40, 4)
    f = zero_field(g, 0.1, 0)
    f.coeffs[g.mode_index(0)] = 1.0
    res, terms = pohozaev_residual(f, SolverParams(omega=0.0, k=0, m=1))
    assert res == pytest.approx(0.0, abs=1e-13)
    assert all(abs(v) <= 1e-13 for v in terms.values())
    # v = z: boundary term pi, degree term -pi, potential pi/(6 eps^2)
    eps = 0.3
    h = field_from_function(lambda z: z, PolarGrid.uniform(200, 4), eps, 1)
    _, t = pohozaev_residual(h, SolverParams(omega=0.0, k=1, m=1))
    assert t["boundary"] == pytest.approx(np.pi, rel=1e-10)
    assert t["degree"] == pytest.approx(-np.pi)
    assert t["potential"] == pytest.approx(np.pi / (6 * eps ** 2), rel=1e-4)


def test_vanishing_gradient_exact_equilibria():
    for eq in (solve_equilibrium(RingFamily(3, ((0.5, 0.0, 1),)), "single_ring_from_momentum", -0.375),
               solve_equilibrium(RingFamily(2, ((0.3, 0.0, 1), (0.3, np.pi / 2, -1))), "staggered_pair", 0.3)):
        assert np.max(vanishing_gradient_defects(eq.config(), eq.omega0, eq.m)) <= 1e-8
    assert vanishing_gradient_defects(VortexConfig([0.0], [1]), -3.0, 1)[0] == 0.0


@pytest.fixture(scope="module")
def relaxed_n1():
    eps = 0.05
    g = PolarGrid.uniform(120, 32)
    f = bbh_initial_data(VortexConfig([0.5], [1]), eps, g, check_resolution=False)
    p = SolverParams(omega=-8 / 3, dt=2 * eps ** 2, residual_tol=1e-7, max_steps=5000, real_modes=True)
    r = constrained_relax(f, -np.pi / 8, p)
    return r, SolverParams(omega=r.omega, k=1, m=1)


def test_vanishing_gradient_relaxed(relaxed_n1):
    r, p = relaxed_n1
    d, cfg = vanishing_gradient_check(r.field, p)
    assert len(d) == 1 and d[0] <= 0.1
    with pytest.raises(TrackingError):
        vanishing_gradient_check(r.field, p, expected=2)


def test_compare_to_pvf_reconstruction(relaxed_n1):
    r, p = relaxed_n1
    eq = solve_equilibrium(RingFamily(1, ((0.5, 0.0, 1),)), "single_ring_from_momentum", -0.125)
    T = 2 * np.pi / abs(p.omega)
    times = T * np.arange(5) / 20
    snaps = [reconstruct_time_periodic(r.field, p, t) for t in times]
    rep = compare_to_pvf(snaps, eq, times)
    assert rep.angular_speed == pytest.approx(p.omega, rel=1e-3)
    assert rep.max_deviation <= 0.05


def test_compare_to_pvf_equivariance():
    eq = solve_equilibrium(RingFamily(3, ((0.5, 0.0, 1),)), "single_ring_from_momentum", -0.375)
    g = PolarGrid.uniform(120, 48)
    f = bbh_initial_data(polygon_config(3, 0.5, phase=0.2), 0.05, g, check_resolution=False)
    base = compare_to_pvf([f], eq)
    phi = 0.5
    eq_rot = solve_equilibrium(RingFamily(3, ((0.5, phi, 1),)), "single_ring_from_momentum", -0.375)
    rot = compare_to_pvf([f], eq_rot)
    period = 2 * np.pi / 3
    shift = np.mod(base.theta_star - rot.theta_star - phi + period / 2, period) - period / 2
    assert abs(shift) <= 1e-9
    assert np.allclose(base.deviations, rot.deviations, atol=1e-12)


def test_detections_csv(tmp_path, fine_grid):
    f = bbh_initial_data(VortexConfig([0.5], [1]), EPS, fine_grid, check_resolution=False)
    write_detections_csv(tmp_path / "d.csv", [(0.0, detect_vortices(f))])
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "t,re,im,degree,radius" and len(lines) == 2
