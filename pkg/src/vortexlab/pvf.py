"""Point vortex flow in the unit disc.

Positions are complex numbers.  Gradients use the complex convention
grad f = df/dx + i df/dy and are exposed as (N, 2) real arrays.  The
perpendicular of a vector is multiplication by i, so the flow

    d_j (db_j/dt)^perp = -(1/pi) grad_{b_j} W

reads  conj(db_l/dt) = 2i (A_l - B_l)  with

    A_l = sum_{k != l} d_k / (b_l - b_k),   B_l = sum_k d_k conj(b_k) / (1 - conj(b_k) b_l).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConfigError, DomainError

COLLISION_TOL = 1e-6
BOUNDARY_TOL = 1e-6


@dataclass(frozen=True)
class VortexConfig:
    positions: np.ndarray
    degrees: np.ndarray

    def __init__(self, positions, degrees):
        b = np.atleast_1d(np.asarray(positions, dtype=complex)).copy()
        d = np.atleast_1d(np.asarray(degrees, dtype=int)).copy()
        if b.shape != d.shape or b.ndim != 1:
            raise ValueError("positions and degrees must be 1-D and of equal length")
        if np.any(np.abs(d) != 1):
            raise ValueError("degrees must be +1 or -1")
        if np.any(np.abs(b) >= 1.0):
            raise DomainError("all vortices must lie in the open unit disc")
        if len(b) > 1 and min_pair_distance(b) == 0.0:
            raise DegenerateConfigError("coincident vortex positions")
        b.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "positions", b)
        object.__setattr__(self, "degrees", d)

    @property
    def N(self):
        return len(self.positions)

    @property
    def n(self):
        return int(self.degrees.sum())

    def rotated(self, theta):
        return VortexConfig(self.positions * np.exp(1j * theta), self.degrees)

    def with_positions(self, b):
        return VortexConfig(b, self.degrees)


def min_pair_distance(b):
    b = np.asarray(b)
    if len(b) < 2:
        return np.inf
    D = np.abs(b[:, None] - b[None, :])
    D[np.diag_indices(len(b))] = np.inf
    return float(D.min())


def _check(b):
    if np.any(np.abs(b) >= 1.0):
        raise DomainError("vortex outside the open unit disc")
    if min_pair_distance(b) == 0.0:
        raise DegenerateConfigError("coincident vortex positions")


def _energy(b, d):
    _check(b)
    dd = np.outer(d, d)
    diff = np.abs(b[:, None] - b[None, :])
    np.fill_diagonal(diff, 1.0)
    img = np.abs(1.0 - np.conj(b)[:, None] * b[None, :])
    return float(-np.pi * np.sum(dd * np.log(diff)) - np.pi * np.sum(dd * np.log(img)))


def renormalized_energy(config: VortexConfig) -> float:
    """W(b, d), interaction plus image (boundary) part."""
    return _energy(config.positions, config.degrees)


def _AB(b, d):
    _check(b)
    diff = b[:, None] - b[None, :]
    np.fill_diagonal(diff, np.inf)
    A = (d[None, :] / diff).sum(axis=1)
    cb = np.conj(b)
    B = (d[None, :] * cb[None, :] / (1.0 - cb[None, :] * b[:, None])).sum(axis=1)
    return A, B


def grad_W_complex(b, d):
    A, B = _AB(np.asarray(b, complex), np.asarray(d))
    return -2.0 * np.pi * np.asarray(d) * np.conj(A - B)


def grad_W(config: VortexConfig) -> np.ndarray:
    """Analytic gradient, one (d/dx, d/dy) row per vortex."""
    g = grad_W_complex(config.positions, config.degrees)
    return np.column_stack([g.real, g.imag])


def grad_W_fd(config: VortexConfig, h=1e-6) -> np.ndarray:
    """Central finite-difference gradient; kept as a test oracle."""
    b = config.positions.copy()
    d = config.degrees
    out = np.zeros((len(b), 2))
    for j in range(len(b)):
        for c, step in enumerate((h, 1j * h)):
            bp, bm = b.copy(), b.copy()
            bp[j] += step
            bm[j] -= step
            out[j, c] = (_energy(bp, d) - _energy(bm, d)) / (2 * h)
    return out


def momentum_J0(config: VortexConfig) -> float:
    return float(-0.5 * np.sum(config.degrees * np.abs(config.positions) ** 2))


def _rhs(b, d):
    A, B = _AB(b, d)
    return np.conj(2j * (A - B))


def pvf_rhs(config: VortexConfig) -> np.ndarray:
    """Velocities db/dt of the Hamiltonian flow generated by W."""
    return _rhs(config.positions, config.degrees)


@dataclass
class ConservedReport:
    t: float
    W: float
    J0: float


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray          # (n_samples, N) complex
    degrees: np.ndarray
    reports: list = field(default_factory=list)
    aborted: str | None = None
    dt: float = 0.0

    @property
    def W(self):
        return np.array([r.W for r in self.reports])

    @property
    def J0(self):
        return np.array([r.J0 for r in self.reports])

    def drift(self):
        """Max relative drift of (W, J0); absolute when the initial value is ~0."""
        out = []
        for q in (self.W, self.J0):
            scale = abs(q[0]) if abs(q[0]) > 1e-14 else 1.0
            out.append(float(np.max(np.abs(q - q[0])) / scale))
        return tuple(out)

    def final_config(self):
        return VortexConfig(self.positions[-1], self.degrees)

    def write_csv(self, path):
        N = self.positions.shape[1]
        header = ["t"]
        for j in range(N):
            header += [f"re_b{j + 1}", f"im_b{j + 1}"]
        header += ["W", "J0"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for t, b, rep in zip(self.times, self.positions, self.reports):
                row = [repr(float(t))]
                for z in b:
                    row += [repr(float(z.real)), repr(float(z.imag))]
                row += [repr(rep.W), repr(rep.J0)]
                w.writerow(row)


def _guard(b):
    if np.any(1.0 - np.abs(b) < BOUNDARY_TOL):
        return "exit-of-disc"
    if min_pair_distance(b) < COLLISION_TOL:
        return "near-collision"
    return None


def _run(config, t_end, dt, sample_every):
    b = config.positions.astype(complex).copy()
    d = config.degrees
    nsteps = int(np.ceil(t_end / dt - 1e-12))
    h = t_end / nsteps if nsteps else 0.0
    times, pos, reps = [0.0], [b.copy()], [ConservedReport(0.0, _energy(b, d), -0.5 * np.sum(d * abs(b) ** 2))]
    aborted = None
    for s in range(1, nsteps + 1):
        try:
            k1 = _rhs(b, d)
            k2 = _rhs(b + 0.5 * h * k1, d)
            k3 = _rhs(b + 0.5 * h * k2, d)
            k4 = _rhs(b + h * k3, d)
        except (DomainError, DegenerateConfigError):
            aborted = "exit-of-disc"
            break
        b = b + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        aborted = _guard(b)
        if aborted:
            break
        if s % sample_every == 0 or s == nsteps:
            t = s * h
            times.append(t)
            pos.append(b.copy())
            reps.append(ConservedReport(t, _energy(b, d), float(-0.5 * np.sum(d * abs(b) ** 2))))
    return Trajectory(np.array(times), np.array(pos), np.array(d), reps, aborted, h)


def integrate_pvf(config: VortexConfig, t_end: float, dt: float, sample_every=1,
                  drift_tol=None, max_halvings=0) -> Trajectory:
    """Classical RK4 with fixed step.

    If ``drift_tol`` is given the run is repeated with dt/2 (at most
    ``max_halvings`` times) while the conserved-quantity drift exceeds it.
    An abort returns the partial trajectory with ``aborted`` set.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    traj = _run(config, t_end, dt, sample_every)
    for _ in range(max_halvings):
        if drift_tol is None or traj.aborted or max(traj.drift()) <= drift_tol:
            break
        dt *= 0.5
        sample_every *= 2
        traj = _run(config, t_end, dt, sample_every)
    return traj


def staggered_radius(k: int) -> float:
    """r0(k) = (sqrt(4k^2+1) - 2k)^(1/2k), the equal-radius pair radius quoted for the printed flow."""
    return float((np.sqrt(4.0 * k * k + 1.0) - 2.0 * k) ** (1.0 / (2 * k)))


def staggered_pair_config(k: int, rho: float, inner_degree=1, rho2=None) -> VortexConfig:
    """k vortices of degree ``inner_degree`` at radius rho, k of opposite degree at rho2, offset pi/k."""
    rho2 = rho if rho2 is None else rho2
    beta = np.arange(k)
    z1 = rho * np.exp(2j * np.pi * beta / k)
    z2 = rho2 * np.exp(1j * np.pi / k + 2j * np.pi * beta / k)
    return VortexConfig(np.concatenate([z1, z2]), [inner_degree] * k + [-inner_degree] * k)


def polygon_config(n: int, rho: float, phase=0.0, degree=1) -> VortexConfig:
    return VortexConfig(rho * np.exp(1j * (phase + 2 * np.pi * np.arange(n) / n)), [degree] * n)
