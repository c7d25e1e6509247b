import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vortexlab.errors import DegenerateConfigError, DomainError
from vortexlab.pvf import (VortexConfig, grad_W, grad_W_fd, integrate_pvf, momentum_J0, polygon_config,
                           pvf_rhs, renormalized_energy, staggered_pair_config, staggered_radius)
from vortexlab.equilibria import single_ring_omega

# frozen high-precision oracles (30-digit evaluation of the closed forms)
W_HALF = 0.903779885384001599567557212657        # -pi ln(3/4)
W_PAIR = 0.405507487758686357159154714216        # -2 pi ln(15/16)
R0_1 = 0.485868271756645678182863875894          # (sqrt 5 - 2)^(1/2)


def test_config_validation():
    with pytest.raises(DomainError):
        VortexConfig([1.0], [1])
    with pytest.raises(DegenerateConfigError):
        VortexConfig([0.1, 0.1], [1, 1])
    with pytest.raises((DomainError, ValueError)):
        VortexConfig([0.1], [2])
    assert VortexConfig([0.1, -0.2j], [1, -1]).n == 0


def test_energy_examples():
    assert renormalized_energy(VortexConfig([0.0], [1])) == 0.0
    assert renormalized_energy(VortexConfig([0.5], [1])) == pytest.approx(W_HALF, rel=1e-13)
    assert renormalized_energy(VortexConfig([0.5, -0.5], [1, 1])) == pytest.approx(W_PAIR, rel=1e-13)


def test_grad_examples():
    assert np.allclose(grad_W(VortexConfig([0.0], [1])), 0.0, atol=1e-15)
    c = VortexConfig([0.5], [1])
    g, fd = grad_W(c), grad_W_fd(c)
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) <= 1e-6


def test_staggered_radius_oracle():
    assert staggered_radius(1) == pytest.approx(R0_1, rel=1e-14)


@settings(max_examples=64, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 31 - 1))
def test_grad_matches_fd_random(N, seed):
    rng = np.random.default_rng(seed)
    b = np.sqrt(rng.uniform(0, 0.7, N)) * np.exp(2j * np.pi * rng.uniform(size=N))
    if N > 1 and min(abs(x - y) for i, x in enumerate(b) for y in b[i + 1:]) < 0.05:
        return
    c = VortexConfig(b, rng.choice([-1, 1], N))
    g, fd = grad_W(c), grad_W_fd(c)
    assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(fd))


@settings(max_examples=64, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 31 - 1))
def test_hamiltonian_identity_random(N, seed):
    # d_j (b_j')^perp = -(1/pi) grad_j W, with perp = rotation by +pi/2
    rng = np.random.default_rng(seed)
    b = np.sqrt(rng.uniform(0, 0.7, N)) * np.exp(2j * np.pi * rng.uniform(size=N))
    if N > 1 and min(abs(x - y) for i, x in enumerate(b) for y in b[i + 1:]) < 0.05:
        return
    c = VortexConfig(b, rng.choice([-1, 1], N))
    v = pvf_rhs(c)
    g = grad_W(c)
    gz = g[:, 0] + 1j * g[:, 1]
    lhs = c.degrees * 1j * v
    assert np.allclose(lhs, -gz / np.pi, atol=1e-12 * max(1, np.abs(gz).max()))


def test_rotation_invariance():
    c = VortexConfig([0.3 + 0.1j, -0.4j, 0.2], [1, -1, 1])
    assert renormalized_energy(c.rotated(0.7)) == pytest.approx(renormalized_energy(c), abs=1e-12)
    assert momentum_J0(c.rotated(0.7)) == pytest.approx(momentum_J0(c), abs=1e-15)


def test_momentum_examples():
    assert momentum_J0(VortexConfig([0.0], [1])) == 0.0
    assert momentum_J0(VortexConfig([0.5, -0.5], [1, 1])) == pytest.approx(-0.25, abs=1e-15)
    assert momentum_J0(VortexConfig([0.5, 0.5j], [1, -1])) == pytest.approx(0.0, abs=1e-15)


def test_rhs_single_and_polygon():
    v = pvf_rhs(VortexConfig([0.5], [1]))
    assert v[0] == pytest.approx(4j / 3, abs=1e-14)
    c = polygon_config(3, 0.5)
    om = single_ring_omega(3, 0.5)
    assert np.allclose(pvf_rhs(c), -1j * om * c.positions, rtol=1e-12, atol=1e-12)


def test_polygon_returns_after_one_period():
    c = polygon_config(3, 0.5)
    T = 2 * np.pi / abs(single_ring_omega(3, 0.5))
    tr = integrate_pvf(c, T, T / 4000)
    fin = tr.positions[-1]
    assert max(np.min(np.abs(fin - a)) for a in c.positions) <= 1e-6
    dW, dJ = tr.drift()
    assert dW <= 1e-8 and dJ <= 1e-8


def test_abort_on_collision_returns_partial():
    # an opposite-degree pair close together translates out of the disc
    c = VortexConfig([0.05, -0.05], [1, -1])
    tr = integrate_pvf(c, 10.0, 1e-3)
    assert tr.aborted in ("exit-of-disc", "near-collision")
    assert len(tr.times) >= 2


def test_trajectory_csv(tmp_path):
    tr = integrate_pvf(polygon_config(2, 0.4), 0.1, 0.01)
    tr.write_csv(tmp_path / "t.csv")
    head = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert head == "t,re_b1,im_b1,re_b2,im_b2,W,J0"


def test_staggered_r0_not_critical_for_W():
    # the quoted radius is not a critical point of W (see the decisions ledger)
    assert np.linalg.norm(grad_W(staggered_pair_config(1, R0_1))) > 1.0
