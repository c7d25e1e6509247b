"""Gradient flow of the rotating-frame action on the mode system.

Stabilized semi-implicit step for each mode j, on interior nodes:

    (1/dt + S/eps^2 + a_j) c^{n+1} - L_j c^{n+1}
        = (1/dt + S/eps^2 + a_j) c^n + N_j(c^n) - omega_n w_j c^n,

with w_j = k - j/m, N_j the modes of (1-|u|^2)u/eps^2 and a_j = max(omega_ref w_j, 0)
the convex part of the rotation term.  The cubic term is explicit; the
stabilization S >= 1 makes the step energy stable while |u| <= 1 + O(eps^2).
The block-tridiagonal system is factored once with a sparse LU.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..errors import ProjectionError, SolverFailure, StepSizeError
from . import functionals as F


class FlowOperator:
    def __init__(self, grid, epsilon, dt, k, m, omega_ref=0.0, S=1.0):
        self.grid = grid
        self.eps = epsilon
        self.dt = dt
        self.w = F.momentum_weights(grid, k, m)
        self.a = np.maximum(omega_ref * self.w, 0.0)
        self.shift = 1.0 / dt + S / epsilon ** 2
        M, n = grid.n_modes, grid.Nr - 1
        V = grid.V[:-1]
        fr = grid.faces[1:-1] / grid.dr            # face coefficient f/dr, length Nr-1
        up = np.zeros(n)
        lo = np.zeros(n)
        up[:-1] = fr[:-1] / V[:-1]                 # coupling i -> i+1 (interior)
        lo[1:] = fr[:-1] / V[1:]                   # coupling i -> i-1
        self.bcoef = fr[-1] / V[-1]                # coupling of last interior node to r = 1
        diag_lap = -(np.concatenate([[0.0], fr[:-1]]) + fr) / V
        j2 = grid.modes.astype(float) ** 2
        main = (self.shift + self.a)[:, None] - diag_lap[None, :] + j2[:, None] / grid.r[None, :-1] ** 2
        upper = np.tile(-up[:-1], M)
        lower = np.tile(-lo[1:], M)
        # zero the couplings across mode blocks
        upper_full = np.zeros(M * n - 1)
        lower_full = np.zeros(M * n - 1)
        mask = (np.arange(M * n - 1) % n) != n - 1
        upper_full[mask] = upper
        lower_full[mask] = lower
        A = sp.diags([lower_full, main.ravel(), upper_full], [-1, 0, 1], format="csc")
        self.lu = splu(A)
        self.M, self.n = M, n

    def step(self, c, omega, real_modes=False):
        """Advance interior values of c by one step; returns (new c, residual modes, action parts)."""
        g = self.grid
        N, pot = F.nonlinear_modes(g, c, self.eps)
        lap = F.laplacian(g, c)
        R = lap + N - omega * self.w[:, None] * c
        R[:, -1] = 0.0
        rhs = (self.shift + self.a)[:, None] * c[:, :-1] + N[:, :-1] - omega * self.w[:, None] * c[:, :-1]
        rhs[:, -1] += self.bcoef * c[:, -1]
        new = c.copy()
        x = self.lu.solve(np.column_stack([rhs.real.ravel(), rhs.imag.ravel()]))
        new[:, :-1] = (x[:, 0] + 1j * x[:, 1]).reshape(self.M, self.n)
        if real_modes:
            new = new.real.astype(complex)
        return new, R, pot


def gradient_flow_step(field, params, op=None):
    """One step of the flow at fixed omega; boundary values are untouched."""
    params.check_field(field)
    op = op or FlowOperator(field.grid, field.epsilon, params.dt, params.k, params.m,
                            params.omega, params.stabilization)
    new, _, _ = op.step(field.coeffs, params.omega, params.real_modes)
    if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > 1e3:
        raise StepSizeError("amplitude blow-up; reduce dt")
    return field.copy(new)


@dataclass
class RelaxResult:
    field: object
    steps: int
    residual: float
    converged: bool
    action_history: np.ndarray
    residual_history: list = field(default_factory=list)
    omega_history: list = field(default_factory=list)
    momentum_drift: float = 0.0

    @property
    def omega(self):
        return self.omega_history[-1] if self.omega_history else None

    def max_action_increase(self):
        if len(self.action_history) < 2:
            return 0.0
        return float(np.max(np.diff(self.action_history)))


def _action_from_parts(grid, c, pot, omega, k, m):
    J = float(-np.pi * np.sum(F.momentum_weights(grid, k, m)[:, None] * grid.V[None, :] * np.abs(c) ** 2))
    return F.dirichlet_energy(grid, c) + pot - omega * J, J


def relax_to_critical(field, params, record_every=1, raise_on_timeout=False, callback=None):
    """Run the flow until the elliptic residual is below tolerance.

    The returned action history has one entry per step (state before the
    step) plus the final state.
    """
    params.check_field(field)
    g = field.grid
    op = FlowOperator(g, field.epsilon, params.dt, params.k, params.m, params.omega,
                      params.stabilization)
    c = field.coeffs.copy()
    if params.real_modes:
        c = c.real.astype(complex)
    hist, rhist = [], []
    res = np.inf
    steps = 0
    for steps in range(params.max_steps + 1):
        new, R, pot = op.step(c, params.omega, params.real_modes)
        res = F.norm(g, R)
        act, _ = _action_from_parts(g, c, pot, params.omega, params.k, params.m)
        hist.append(act)
        if steps % record_every == 0:
            rhist.append((steps, res))
        if callback is not None:
            callback(steps, c, res)
        if res <= params.residual_tol or steps == params.max_steps:
            break
        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > 1e3:
            raise StepSizeError("amplitude blow-up; reduce dt")
        c = new
    out = field.copy(c)
    converged = res <= params.residual_tol
    result = RelaxResult(out, steps, float(res), converged, np.array(hist), rhist, [params.omega])
    if not converged and raise_on_timeout:
        raise SolverFailure("relaxation did not reach the residual tolerance", last=result, residual=res)
    return result


def _restore_momentum(grid, c, w, target):
    """Move c along grad J until J(c) = target (J is quadratic)."""
    G = -w[:, None] * c
    G[:, -1] = 0.0
    Vw = -np.pi * w[:, None] * grid.V[None, :]
    J0 = float(np.sum(Vw * np.abs(c) ** 2))
    b1 = float(2 * np.sum(Vw * (c * np.conj(G)).real))
    a2 = float(np.sum(Vw * np.abs(G) ** 2))
    d = J0 - target
    if abs(a2) < 1e-300:
        s = -d / b1
    else:
        disc = b1 * b1 - 4 * a2 * d
        if disc < 0:
            s = -d / b1
        else:
            r = np.sqrt(disc)
            roots = [(-b1 + r) / (2 * a2), (-b1 - r) / (2 * a2)]
            s = min(roots, key=abs)
    return c + s * G


def constrained_relax(field, p_target, params, raise_on_timeout=False, callback=None,
                      project_initial=True):
    """Gradient flow projected onto the momentum level set {J = p}.

    At each step omega_n = <grad E, grad J>/|grad J|^2 is the Lagrange
    multiplier estimate; the step is a flow step for E - omega_n J followed
    by an exact restoration of J along grad J.  ``p_target=None`` keeps the
    initial momentum.
    """
    params.check_field(field)
    g = field.grid
    k, m = params.k, params.m
    w = F.momentum_weights(g, k, m)
    c = field.coeffs.copy()
    if params.real_modes:
        c = c.real.astype(complex)
    if p_target is None:
        p_target = F.momentum_J(field.copy(c), k, m)
    elif project_initial:
        c = _restore_momentum(g, c, w, p_target)
    op = FlowOperator(g, field.epsilon, params.dt, k, m, params.omega, params.stabilization)
    hist, rhist, whist = [], [], []
    res = np.inf
    steps = 0
    for steps in range(params.max_steps + 1):
        N, pot = F.nonlinear_modes(g, c, field.epsilon)
        GE = -(F.laplacian(g, c) + N)
        GE[:, -1] = 0.0
        GJ = -w[:, None] * c
        GJ[:, -1] = 0.0
        nJ = F.inner(g, GJ, GJ)
        if nJ < 1e-24:
            raise ProjectionError("momentum gradient degenerate")
        om = F.inner(g, GE, GJ) / nJ
        R = -(GE - om * GJ)
        res = F.norm(g, R)
        E = F.dirichlet_energy(g, c) + pot
        hist.append(E - om * p_target)
        whist.append(om)
        rhrec = (steps, res)
        rhist.append(rhrec)
        if callback is not None:
            callback(steps, c, res)
        if res <= params.residual_tol or steps == params.max_steps:
            break
        new, _, _ = op.step(c, om, params.real_modes)
        new = _restore_momentum(g, new, w, p_target)
        if params.real_modes:
            new = new.real.astype(complex)
        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > 1e3:
            raise StepSizeError("amplitude blow-up; reduce dt")
        c = new
    out = field.copy(c)
    drift = abs(F.momentum_J(out, k, m) - p_target) / max(abs(p_target), 1e-300)
    # report the action with the final multiplier so the history is E - omega J at fixed J
    act = np.array(hist) - (whist[-1] - np.array(whist)) * p_target if whist else np.array(hist)
    converged = res <= params.residual_tol
    result = RelaxResult(out, steps, float(res), converged, act, rhist, whist, drift)
    if not converged and raise_on_timeout:
        raise SolverFailure("constrained relaxation did not converge", last=result, residual=res)
    return result


def reconstruct_time_periodic(field, params, t):
    """u(., t) of the rotating ansatz: c_j -> exp(i (j/m - k) omega t) c_j."""
    if params.omega == 0.0:
        return field.copy()
    T = 2 * np.pi * params.m / params.omega
    s = t / T
    w = F.momentum_weights(field.grid, params.k, params.m) * params.m   # integers n - j
    frac = np.mod(np.round(w).astype(np.int64) * s, 1.0) if float(s).is_integer() else w * s
    ph = np.exp(-2j * np.pi * frac)
    return field.copy(field.coeffs * ph[:, None])


def period(params):
    return np.inf if params.omega == 0.0 else abs(2 * np.pi * params.m / params.omega)


def gp_residual(field, params, t=0.0):
    """Residual of i u_t = Delta u + u(1-|u|^2)/eps^2 for the reconstructed u(., t).

    The time derivative is exact in mode space: u_t = -i omega (k - j/m) c_j.
    """
    u = reconstruct_time_periodic(field, params, t)
    g = u.grid
    w = F.momentum_weights(g, params.k, params.m)
    ut = -1j * params.omega * w[:, None] * u.coeffs
    N, _ = F.nonlinear_modes(g, u.coeffs, u.epsilon)
    R = 1j * ut - (F.laplacian(g, u.coeffs) + N)
    R[:, -1] = 0.0
    return F.norm(g, R)
