"""Ginzburg-Landau energy, momentum, action and their discrete gradients.

All gradients are taken in the discrete L2 inner product
<a, b> = 2 pi Re sum_j sum_i V_i a_ji conj(b_ji), restricted to the
interior nodes (the boundary row is Dirichlet data).  With this inner
product the mode-space operators below are the exact gradients of the
discrete functionals.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SolverParams:
    """Parameters of the rotating-frame problem.

    ``k`` and ``m`` enter through the momentum weight k - j/m.  For n = 0
    families use k = 0, m = 1: the field symmetry order is carried by the
    field itself (``PolarField.k_sym``).
    """
    omega: float = 0.0
    k: int = 1
    m: int = 1
    dt: float = 1e-3
    residual_tol: float = 1e-6
    max_steps: int = 100000
    stabilization: float = 1.0
    real_modes: bool = False      # impose the conjugation symmetry c_j real

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.m == 0:
            raise ValueError("m must be nonzero")

    def check_field(self, field):
        if self.k > 0 and field.n_bc != self.k * self.m:
            raise ValueError(f"boundary degree {field.n_bc} != k*m = {self.k * self.m}")


def inner(grid, a, b):
    return float(2 * np.pi * np.sum(grid.V[None, :-1] * (a[:, :-1] * np.conj(b[:, :-1])).real))


def norm(grid, a):
    return np.sqrt(max(inner(grid, a, a), 0.0))


def momentum_weights(grid, k, m):
    return k - grid.modes / m


def laplacian(grid, c):
    """Finite-volume L_j c_j on interior nodes; the boundary row is zero."""
    flux = grid.faces[None, 1:-1] * np.diff(c, axis=1) / grid.dr[None, :]
    out = np.zeros_like(c)
    out[:, :-1] = flux
    out[:, 1:-1] -= flux[:, :-1]
    out[:, :-1] /= grid.V[None, :-1]
    j2 = (grid.modes ** 2)[:, None]
    out[:, :-1] -= j2 * c[:, :-1] / grid.r[None, :-1] ** 2
    out[:, -1] = 0.0
    return out


def dirichlet_energy(grid, c):
    """(1/2) int |grad u|^2."""
    grad = np.sum(grid.faces[None, 1:-1] * np.abs(np.diff(c, axis=1)) ** 2 / grid.dr[None, :])
    ang = np.sum((grid.modes ** 2)[:, None] * grid.V[None, :] * np.abs(c) ** 2 / grid.r[None, :] ** 2)
    return float(np.pi * (grad + ang))


def potential_energy(grid, u_phys, epsilon):
    return grid.integrate((1.0 - np.abs(u_phys) ** 2) ** 2) / (4 * epsilon ** 2)


def energy_E(field):
    g = field.grid
    return dirichlet_energy(g, field.coeffs) + potential_energy(g, field.physical(), field.epsilon)


def energy_parts(field):
    g = field.grid
    return {"dirichlet": dirichlet_energy(g, field.coeffs),
            "potential": potential_energy(g, field.physical(), field.epsilon)}


def momentum_J(field, k, m):
    """Spectral evaluation: -pi sum_j (k - j/m) int |c_j|^2 r dr."""
    g = field.grid
    w = momentum_weights(g, k, m)
    return float(-np.pi * np.sum(w[:, None] * g.V[None, :] * np.abs(field.coeffs) ** 2))


def momentum_J_quadrature(field, k, m):
    """Direct 2-D evaluation of -(1/2) int k|v|^2 + (1/m) v.(y^perp.grad) v^perp.

    y^perp . grad is d/dtheta, v^perp = i v, and a.b = Re(a conj b).  The
    angular derivative is taken on the full-circle physical grid.
    """
    g = field.grid
    theta, u = field.full_physical()
    nt = len(theta)
    freq = np.fft.fftfreq(nt, d=1.0 / nt)
    u_th = np.fft.ifft(1j * freq[None, :] * np.fft.fft(u, axis=1), axis=1)
    dens = k * np.abs(u) ** 2 + (1.0 / m) * (u * np.conj(1j * u_th)).real
    return float(-0.5 * 2 * np.pi * np.sum(g.V[:, None] * dens) / nt)


def action(field, params):
    """E - omega * J."""
    return energy_E(field) - params.omega * momentum_J(field, params.k, params.m)


def nonlinear_modes(grid, c, epsilon):
    """Mode coefficients of (1 - |u|^2) u / eps^2 together with the potential energy."""
    u = grid.to_physical(c)
    a = 1.0 - np.abs(u) ** 2
    pot = grid.integrate(a * a) / (4 * epsilon ** 2)
    return grid.to_modes(a * u) / epsilon ** 2, pot


def grad_E(field):
    """Discrete L2 gradient of E (boundary row zero)."""
    N, _ = nonlinear_modes(field.grid, field.coeffs, field.epsilon)
    G = -(laplacian(field.grid, field.coeffs) + N)
    G[:, -1] = 0.0
    return G


def grad_J(field, k, m):
    w = momentum_weights(field.grid, k, m)
    G = -w[:, None] * field.coeffs
    G[:, -1] = 0.0
    return G


def residual_modes(field, params, omega=None):
    """Mode-space residual of Delta v + v(1-|v|^2)/eps^2 - omega (k - j/m) v."""
    om = params.omega if omega is None else omega
    N, _ = nonlinear_modes(field.grid, field.coeffs, field.epsilon)
    w = momentum_weights(field.grid, params.k, params.m)
    R = laplacian(field.grid, field.coeffs) + N - om * w[:, None] * field.coeffs
    R[:, -1] = 0.0
    return R


def elliptic_residual(field, params, omega=None):
    """Discrete L2 norm of the PDE residual over interior nodes."""
    return norm(field.grid, residual_modes(field, params, omega))
