import json

import numpy as np
import pytest

from vortexlab.equilibria import (DEFAULT_CATALOG, RingFamily, catalog, catalog_json, classify_equilibrium,
                                  grad_H_fd, hessian_classify, modified_energy_H, ring_residual,
                                  single_ring_omega, solve_equilibrium)
from vortexlab.errors import PreconditionError, SolverFailure
from vortexlab.pvf import VortexConfig, polygon_config, renormalized_energy


def _omega_oracle(n, rho):
    # criticality of H for an n-gon: omega rho^2 = 2((n-1)/2 - n rho^2n / (1 - rho^2n))
    t = rho ** (2 * n)
    return 2 * ((n - 1) / 2 - n * t / (1 - t)) / rho ** 2


def test_single_ring_values():
    assert single_ring_omega(1, 0.5) == pytest.approx(-8 / 3, abs=1e-14)
    assert single_ring_omega(1, 1e-6) == pytest.approx(-2, abs=1e-10)
    assert single_ring_omega(2, 0.5) == pytest.approx(44 / 15, abs=1e-13)
    for n in (1, 2, 3, 4):
        assert single_ring_omega(n, 0.4) == pytest.approx(_omega_oracle(n, 0.4), rel=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_single_ring_is_critical_for_H(n):
    om = single_ring_omega(n, 0.5)
    g = grad_H_fd(polygon_config(n, 0.5), om, 1)
    assert np.linalg.norm(g) <= 1e-8
    fam = RingFamily(n, ((0.5, 0.0, 1),))
    assert np.max(np.abs(ring_residual(fam, om, 1))) <= 1e-12


def test_ring_residual_sign_matches_fd():
    n, rho, h = 2, 0.5, 1e-6
    om = single_ring_omega(n, rho)
    fam = RingFamily(n, ((rho + 1e-3, 0.0, 1),))
    res = ring_residual(fam, om, 1)[0]

    def H(r):
        return modified_energy_H(polygon_config(n, r), om, 1)
    dH = (H(rho + 1e-3 + h) - H(rho + 1e-3 - h)) / (2 * h)
    assert res != 0 and np.sign(res) == np.sign(dH)


def test_solve_single_ring_from_momentum():
    eq = solve_equilibrium(RingFamily(1, ((0.4, 0.0, 1),)), "single_ring_from_momentum", -1 / 8)
    assert eq.family.rings[0][0] == pytest.approx(0.5, abs=1e-15)
    assert eq.omega0 == pytest.approx(-8 / 3, abs=1e-13)
    assert eq.period == pytest.approx(2 * np.pi / (8 / 3), rel=1e-13)


def test_aligned_two_rings():
    eq = solve_equilibrium(RingFamily(2, ((0.3, 0.0, 1), (0.7, 0.0, 1))), "aligned_multiring", -0.5)
    r1, r2 = sorted(r for r, _, _ in eq.family.rings)
    assert 0 < r1 < r2 < 1
    assert np.max(np.abs(ring_residual(eq.family, eq.omega0, eq.m))) <= 1e-10
    assert np.linalg.norm(grad_H_fd(eq.config(), eq.omega0, eq.m)) <= 1e-8


def test_staggered_pair_k2():
    eq = solve_equilibrium(RingFamily(2, ((0.3, 0.0, 1), (0.3, np.pi / 2, -1))), "staggered_pair", 0.3)
    (r1, _, d1), (r2, _, d2) = eq.family.rings
    assert r1 < 0.3 < r2 and (d1, d2) == (1, -1)
    assert eq.residual <= 1e-10
    assert np.linalg.norm(grad_H_fd(eq.config(), eq.omega0, eq.m)) <= 1e-8


def test_staggered_k1_has_no_solution_under_W():
    with pytest.raises(SolverFailure):
        solve_equilibrium(RingFamily(1, ((0.3, 0.0, 1), (0.3, np.pi, -1))), "staggered_pair", 0.3)


def test_H_examples():
    c = VortexConfig([0.3 + 0.2j, -0.4], [1, 1])
    assert modified_energy_H(c, 0.0, 1) == renormalized_energy(c) / np.pi
    th = 1.234
    assert modified_energy_H(c.rotated(th), -2.0, 1) == pytest.approx(modified_energy_H(c, -2.0, 1), abs=1e-12)


def test_hessian_single_ring_and_rotation():
    om = single_ring_omega(3, 0.5)
    c = polygon_config(3, 0.5)
    rep = hessian_classify(c, om, 1, 3)
    assert rep.null_count == 1 and rep.tangent_alignment >= 0.999
    rot = hessian_classify(c.rotated(0.77), om, 1, 3)
    assert np.allclose(rep.eigenvalues, rot.eigenvalues, atol=1e-8)
    assert rep.negative_count + rep.null_count + rep.positive_count == 2
    assert 1 <= rep.S <= 2


def test_hessian_requires_critical_point():
    with pytest.raises(PreconditionError):
        hessian_classify(polygon_config(3, 0.5), 0.0, 1, 3)


def test_catalog_all_entries_solve():
    eqs, fails = catalog(DEFAULT_CATALOG)
    assert not fails and len(eqs) == len(DEFAULT_CATALOG)
    for eq in eqs:
        N_R = len(eq.family.rings)
        h = eq.hessian
        assert h.negative_count + h.null_count + h.positive_count == 2 * N_R
        assert 1 <= h.S <= 2 * N_R
    doc = json.loads(catalog_json(eqs))
    assert len(doc["equilibria"]) == len(eqs)


def test_classify_stores_report():
    eq = solve_equilibrium(RingFamily(2, ((0.5, 0.0, 1),)), "single_ring_from_momentum", -0.25)
    rep = classify_equilibrium(eq)
    assert eq.hessian is rep and rep.null_count == 1
