import numpy as np
import pytest

from vortexlab.gl import functionals as F
from vortexlab.gl.bbh import bbh_initial_data
from vortexlab.gl.functionals import SolverParams
from vortexlab.gl.grid import PolarGrid, field_from_function, zero_field
from vortexlab.pvf import VortexConfig, momentum_J0, polygon_config


def test_constant_field_has_zero_energy():
    f = zero_field(PolarGrid.uniform(20, 4), 0.1, 0)
    f.coeffs[f.grid.mode_index(0)] = 1.0
    assert F.energy_E(f) == pytest.approx(0.0, abs=1e-14)


def test_energy_of_identity_converges_second_order():
    eps = 0.2
    exact = np.pi + np.pi / (12 * eps ** 2)
    errs = []
    for Nr in (50, 100, 200):
        f = field_from_function(lambda z: z, PolarGrid.uniform(Nr, 4), eps, 1)
        errs.append(abs(F.energy_E(f) - exact))
    assert errs[-1] / exact <= 2e-5
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1) and errs[1] / errs[2] == pytest.approx(4, rel=0.1)


def test_momentum_single_mode_zero():
    g = PolarGrid.uniform(30, 6)
    f = field_from_function(lambda z: z ** 2 * (1 + 0.3 * abs(z)), g, 0.1, 2)
    assert F.momentum_J(f, 2, 1) == pytest.approx(0.0, abs=1e-14)
    assert F.momentum_J(zero_field(g, 0.1, 0), 0, 1) == 0.0


def test_momentum_spectral_vs_quadrature():
    g = PolarGrid.uniform(60, 16)
    cfg = VortexConfig([0.3 + 0.1j, -0.4], [1, 1])
    f = bbh_initial_data(cfg, 0.1, g, check_resolution=False)
    assert F.momentum_J(f, 2, 1) == pytest.approx(F.momentum_J_quadrature(f, 2, 1), abs=1e-12)


def test_momentum_of_polygon_bbh():
    eps = 0.02
    g = PolarGrid.uniform(250, 168)
    cfg = polygon_config(2, 0.5)
    f = bbh_initial_data(cfg, eps, g, check_resolution=False)
    assert F.momentum_J(f, 2, 1) == pytest.approx(np.pi * momentum_J0(cfg), abs=0.05)


def test_gradient_is_exact_derivative():
    g = PolarGrid.uniform(24, 6)
    cfg = VortexConfig([0.4], [1])
    f = bbh_initial_data(cfg, 0.1, g, check_resolution=False)
    rng = np.random.default_rng(0)
    d = rng.normal(size=f.coeffs.shape) + 1j * rng.normal(size=f.coeffs.shape)
    d[:, -1] = 0.0
    p = SolverParams(omega=-1.3, k=1, m=1)
    G = -F.residual_modes(f, p)
    h = 1e-6
    up = F.action(f.copy(f.coeffs + h * d), p)
    dn = F.action(f.copy(f.coeffs - h * d), p)
    assert (up - dn) / (2 * h) == pytest.approx(F.inner(g, G, d), rel=1e-6)


def test_manufactured_solution():
    # v = r e^{i theta}: Laplacian vanishes, so the residual is the known forcing r(1-r^2)/eps^2
    eps = 0.3
    g = PolarGrid.uniform(40, 4)
    f = field_from_function(lambda z: z, g, eps, 1)
    R = F.residual_modes(f, SolverParams(omega=2.0, k=1, m=1))
    forcing = np.zeros_like(R)
    forcing[g.mode_index(1), :-1] = g.r[:-1] * (1 - g.r[:-1] ** 2) / eps ** 2
    assert F.norm(g, R - forcing) <= 1e-10 * F.norm(g, forcing)


def test_bbh_is_not_a_solution():
    g = PolarGrid.uniform(60, 20)
    f = bbh_initial_data(VortexConfig([0.5], [1]), 0.1, g, check_resolution=False)
    assert F.elliptic_residual(f, SolverParams(omega=-8 / 3)) > 1e-3


def test_params_check():
    g = PolarGrid.uniform(10, 4)
    with pytest.raises(Exception):
        SolverParams(k=2, m=1).check_field(zero_field(g, 0.1, 1))
