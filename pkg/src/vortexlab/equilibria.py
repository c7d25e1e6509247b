"""Relative equilibria of the point vortex flow under a k-fold ring ansatz.

Ring r carries k vortices zeta_r e(2 pi beta / k) of degree d_r.  Writing
X_r = zeta_r (A - B) evaluated at the representative vortex, a rigid
rotation b(t) = b e(-w t) with w = omega0/m requires

    w rho_r^2 = 2 Re X_r,    Im X_r = 0,

and d_r (w rho_r^2 - 2 Re X_r) / rho_r is the radial derivative of
H = W/pi - (omega0/m) J0 at the representative vortex.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConfigError, DomainError, PreconditionError, SolverFailure
from .pvf import VortexConfig, grad_W_complex, momentum_J0, renormalized_energy, staggered_radius


@dataclass(frozen=True)
class RingFamily:
    k: int
    rings: tuple          # ((rho, phi, degree), ...)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        rings = tuple((float(r), float(p) % (2 * np.pi), int(d)) for r, p, d in self.rings)
        for rho, _, d in rings:
            if not 0.0 < rho < 1.0:
                raise DomainError(f"ring radius {rho} outside (0, 1)")
            if d not in (1, -1):
                raise ValueError("ring degrees must be +1 or -1")
        object.__setattr__(self, "rings", rings)

    @property
    def n(self):
        return self.k * sum(d for _, _, d in self.rings)

    @property
    def m(self):
        return self.n // self.k

    @property
    def m_eff(self):
        """m used in H and the period; the n = 0 families use m = 1."""
        return self.m if self.m != 0 else 1

    @property
    def zetas(self):
        return np.array([r * np.exp(1j * p) for r, p, _ in self.rings])

    @property
    def degrees(self):
        return np.array([d for _, _, d in self.rings])

    def expand(self) -> VortexConfig:
        w = np.exp(2j * np.pi * np.arange(self.k) / self.k)
        b = np.concatenate([z * w for z in self.zetas])
        d = np.repeat(self.degrees, self.k)
        return VortexConfig(b, d)

    def with_radii(self, radii):
        return RingFamily(self.k, tuple((r, p, d) for r, (_, p, d) in zip(radii, self.rings)))

    def rotated(self, theta):
        return RingFamily(self.k, tuple((r, p + theta, d) for r, p, d in self.rings))


@dataclass
class HessianReport:
    eigenvalues: np.ndarray
    null_count: int
    S: int
    negative_count: int
    positive_count: int
    tangent_alignment: float
    threshold: float

    def to_dict(self):
        return {"eigenvalues": [float(x) for x in self.eigenvalues], "S": self.S,
                "null_count": self.null_count, "negative_count": self.negative_count,
                "tangent_alignment": self.tangent_alignment}


@dataclass
class RelativeEquilibrium:
    family: RingFamily
    omega0: float
    m: int
    residual: float = 0.0
    grad_H: float = 0.0
    hessian: HessianReport | None = None
    notes: dict = field(default_factory=dict)

    @property
    def angular_speed(self):
        """w in b(t) = b e(-w t)."""
        return self.omega0 / self.m

    @property
    def period(self):
        if self.omega0 == 0.0:
            return np.inf
        return float(2 * np.pi * abs(self.m / self.omega0))

    def config(self):
        return self.family.expand()

    def to_dict(self):
        f = self.family
        return {"k": f.k, "m": f.m, "n": f.n,
                "rings": [{"rho": r, "phi": p, "degree": d} for r, p, d in f.rings],
                "omega0": self.omega0, "m_used": self.m,
                "period": self.period if np.isfinite(self.period) else None,
                "residual": self.residual, "grad_H": self.grad_H,
                "hessian": self.hessian.to_dict() if self.hessian else None}


def single_ring_omega(n: int, rho: float) -> float:
    """omega0 of the n-gon of degree +1 vortices at radius rho (m = 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < rho < 1.0:
        raise DomainError("rho must lie in (0, 1)")
    t = rho ** (2 * n)
    return (2.0 / rho ** 2) * ((n - 1) / 2.0 - n * t / (1.0 - t))


def ring_X(family: RingFamily) -> np.ndarray:
    k = family.k
    z = family.zetas
    d = family.degrees
    zk = z ** k
    out = np.empty(len(z), dtype=complex)
    for r in range(len(z)):
        t = abs(zk[r]) ** 2
        if abs(1.0 - t) < 1e-300:
            raise DegenerateConfigError("ring on the unit circle")
        x = d[r] * (k - 1) / 2.0 - d[r] * k * t / (1.0 - t)
        for s in range(len(z)):
            if s == r:
                continue
            den = zk[r] - zk[s]
            if den == 0:
                raise DegenerateConfigError("rings coincide")
            x += k * d[s] * zk[r] * (1.0 / den - np.conj(zk[s]) / (1.0 - np.conj(zk[s]) * zk[r]))
        out[r] = x
    return out


def ring_residual(family: RingFamily, omega0: float, m: int | None = None, imag_tol=1e-12) -> np.ndarray:
    """Per-ring radial derivative of H at the representative vortex.

    Imaginary parts of X_r (tangential force) above ``imag_tol`` are
    appended as extra components.
    """
    m = family.m_eff if m is None else m
    w = omega0 / m
    X = ring_X(family)
    rho = np.abs(family.zetas)
    d = family.degrees
    res = d * (w * rho ** 2 - 2.0 * X.real) / rho
    tang = 2.0 * d * X.imag / rho
    if np.any(np.abs(tang) > imag_tol):
        res = np.concatenate([res, tang])
    return res


def modified_energy_H(config: VortexConfig, omega0: float, m: int) -> float:
    if m == 0:
        raise PreconditionError("m must be nonzero")
    return renormalized_energy(config) / np.pi - (omega0 / m) * momentum_J0(config)


def grad_H_complex(config: VortexConfig, omega0: float, m: int) -> np.ndarray:
    b, d = config.positions, config.degrees
    return grad_W_complex(b, d) / np.pi + (omega0 / m) * d * b


def grad_H_fd(config: VortexConfig, omega0: float, m: int, h=1e-6) -> np.ndarray:
    b = config.positions
    g = np.zeros(len(b), dtype=complex)
    for j in range(len(b)):
        for step in (h, 1j * h):
            bp, bm = b.copy(), b.copy()
            bp[j] += step
            bm[j] -= step
            dH = (modified_energy_H(config.with_positions(bp), omega0, m)
                  - modified_energy_H(config.with_positions(bm), omega0, m)) / (2 * h)
            g[j] += dH if step == h else 1j * dH
    return g


def _newton(F, x0, tol=1e-13, maxit=60, fd_h=1e-7):
    x = np.array(x0, dtype=float)
    fx = F(x)
    for _ in range(maxit):
        nf = np.linalg.norm(fx)
        if nf <= tol:
            return x, nf
        J = np.empty((len(fx), len(x)))
        for i in range(len(x)):
            e = np.zeros_like(x)
            e[i] = fd_h * max(1.0, abs(x[i]))
            J[:, i] = (F(x + e) - F(x - e)) / (2 * e[i])
        dx = np.linalg.lstsq(J, -fx, rcond=None)[0]
        lam = 1.0
        while lam > 1e-6:
            try:
                xn = x + lam * dx
                fn = F(xn)
                if np.all(np.isfinite(fn)) and np.linalg.norm(fn) < (1 - 1e-4 * lam) * nf:
                    break
            except (DomainError, DegenerateConfigError, ValueError):
                pass
            lam *= 0.5
        else:
            raise SolverFailure("line search failed", last=x, residual=nf)
        x, fx = xn, fn
    nf = np.linalg.norm(fx)
    if nf <= tol * 10:
        return x, nf
    raise SolverFailure("Newton did not converge", last=x, residual=nf)


def _finish(family, omega0, m, notes=None):
    res = float(np.max(np.abs(ring_residual(family, omega0, m))))
    g = float(np.max(np.abs(grad_H_complex(family.expand(), omega0, m))))
    return RelativeEquilibrium(family, float(omega0), m, res, g, notes=notes or {})


def _staggered_scan(k, r, inner, ngrid=4001):
    """Sign-change scan of the equal-angular-speed condition in delta = (rho2 - rho1)/2."""
    lim = min(r, 1.0 - r) - 1e-4
    deltas = np.linspace(1e-5, lim, ngrid)
    vals = []
    for de in deltas:
        fam = RingFamily(k, ((r - de, 0.0, inner), (r + de, np.pi / k, -inner)))
        X = ring_X(fam).real
        rho = np.abs(fam.zetas)
        vals.append(X[0] / rho[0] ** 2 - X[1] / rho[1] ** 2)
    vals = np.array(vals)
    idx = np.where(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]
    return [0.5 * (deltas[i] + deltas[i + 1]) for i in idx]


def solve_equilibrium(template: RingFamily, mode: str, target: float, tol=1e-13) -> RelativeEquilibrium:
    k = template.k
    if mode == "single_ring_from_momentum":
        if len(template.rings) != 1 or template.degrees[0] != 1:
            raise ValueError("single ring template needs one ring of degree +1")
        n = k
        if not -n / 2.0 < target < 0.0:
            raise DomainError("momentum target must lie in (-n/2, 0)")
        rho = np.sqrt(-2.0 * target / n)
        fam = template.with_radii([rho])
        return _finish(fam, single_ring_omega(n, rho), 1)

    if mode == "aligned_multiring":
        R = len(template.rings)
        d = template.degrees
        m = template.m_eff
        phis = [p for _, p, _ in template.rings]
        if any(abs(np.sin(k * (p - phis[0]))) > 1e-12 for p in phis):
            raise ValueError("aligned template must have phase differences multiple of 2pi/k")

        def F(x):
            fam = template.with_radii(x[:R])
            res = ring_residual(fam, x[R] * m, m, imag_tol=np.inf)
            return np.append(res, -0.5 * k * np.dot(d, x[:R] ** 2) - target)

        rho0 = np.linspace(0.2, 0.8, R + 2)[1:-1] if R > 1 else np.array([0.5])
        # rescale the guess onto the momentum level set when the sign allows it
        s = -0.5 * k * np.dot(d, rho0 ** 2)
        if s * target > 0:
            rho0 = rho0 * np.sqrt(target / s)
        fam0 = template.with_radii(np.clip(rho0, 0.05, 0.95))
        X = ring_X(fam0).real
        w0 = np.dot(np.abs(fam0.zetas) ** 2, 2 * X) / np.sum(np.abs(fam0.zetas) ** 4)
        x, _ = _newton(F, np.append(np.abs(fam0.zetas), w0), tol=tol)
        rad = x[:R]
        if np.any(rad <= 0) or np.any(rad >= 1):
            raise SolverFailure("radii left (0, 1)", last=x)
        order = np.argsort(rad)
        fam = RingFamily(k, tuple(template.with_radii(rad).rings[i] for i in order))
        return _finish(fam, x[R] * m, m)

    if mode == "staggered_pair":
        r = float(target)
        if not 0.0 < r < 1.0:
            raise DomainError("target r must lie in (0, 1)")
        r0 = staggered_radius(k)
        if abs(r - r0) < 1e-12:
            raise DomainError("target r must differ from r0(k)")
        inner = 1 if r < r0 else -1
        roots = _staggered_scan(k, r, inner)
        if not roots:
            raise SolverFailure(f"no staggered relative equilibrium with mean radius {r} for k={k}")

        def F(x):
            de, w = x
            fam = RingFamily(k, ((r - de, 0.0, inner), (r + de, np.pi / k, -inner)))
            return ring_residual(fam, w, 1, imag_tol=np.inf)

        de0 = roots[0]
        fam0 = RingFamily(k, ((r - de0, 0.0, inner), (r + de0, np.pi / k, -inner)))
        w0 = 2 * ring_X(fam0).real[0] / (r - de0) ** 2
        x, _ = _newton(F, [de0, w0], tol=tol)
        fam = RingFamily(k, ((r - x[0], 0.0, inner), (r + x[0], np.pi / k, -inner)))
        return _finish(fam, x[1], 1, notes={"mean_radius": r})

    raise ValueError(f"unknown mode {mode!r}")


def _reduced_grad(a, k, d_rings, omega0, m):
    w = np.exp(2j * np.pi * np.arange(k) / k)
    b = np.concatenate([z * w for z in a])
    d = np.repeat(d_rings, k)
    g = grad_W_complex(b, d) / np.pi + (omega0 / m) * d * b
    g = g.reshape(len(a), k)
    return (np.conj(w)[None, :] * g).sum(axis=1)


def hessian_classify(config: VortexConfig, omega0: float, m: int, k: int, h=3e-4,
                     null_rel=1e-6) -> HessianReport:
    """Hessian of H restricted to k-fold symmetric configurations.

    Coordinates are the 2 N_R real components of one representative per
    ring (config must be ring-major, as produced by ``RingFamily.expand``).
    S follows the convention in which the rotational null direction is
    counted together with the negative ones.
    """
    if m == 0:
        raise PreconditionError("m must be nonzero")
    N = config.N
    if N % k:
        raise PreconditionError("config size not a multiple of k")
    if np.max(np.abs(grad_H_complex(config, omega0, m))) > 1e-6:
        raise PreconditionError("configuration is not critical for H")
    a = config.positions[::k].copy()
    d_r = config.degrees[::k]
    R = len(a)

    def g(x):
        gz = _reduced_grad(x[:R] + 1j * x[R:], k, d_r, omega0, m)
        return np.concatenate([gz.real, gz.imag])

    x0 = np.concatenate([a.real, a.imag])
    Hm = np.empty((2 * R, 2 * R))
    for j in range(2 * R):
        e = np.zeros(2 * R)
        e[j] = h
        # fourth-order central stencil
        Hm[:, j] = (8 * (g(x0 + e) - g(x0 - e)) - (g(x0 + 2 * e) - g(x0 - 2 * e))) / (12 * h)
    Hm = 0.5 * (Hm + Hm.T)
    lam, V = np.linalg.eigh(Hm)
    thr = null_rel * max(np.max(np.abs(lam)), 1e-300)
    null = np.abs(lam) <= thr
    neg = lam < -thr
    pos = lam > thr
    tang = np.concatenate([(1j * a).real, (1j * a).imag])
    tang /= np.linalg.norm(tang)
    i0 = int(np.argmin(np.abs(lam)))
    align = float(abs(V[:, i0] @ tang))
    return HessianReport(lam, int(null.sum()), int(null.sum() + neg.sum()), int(neg.sum()),
                         int(pos.sum()), align, float(thr))


def classify_equilibrium(eq: RelativeEquilibrium) -> HessianReport:
    eq.hessian = hessian_classify(eq.config(), eq.omega0, eq.m, eq.family.k)
    return eq.hessian


DEFAULT_CATALOG = (
    ("single_ring_from_momentum", 1, ((0.5, 0.0, 1),), -0.125),
    ("single_ring_from_momentum", 2, ((0.5, 0.0, 1),), -0.25),
    ("single_ring_from_momentum", 3, ((0.5, 0.0, 1),), -0.375),
    ("single_ring_from_momentum", 4, ((0.5, 0.0, 1),), -0.5),
    ("aligned_multiring", 2, ((0.3, 0.0, 1), (0.7, 0.0, 1)), -0.5),
    ("aligned_multiring", 3, ((0.3, 0.0, 1), (0.7, 0.0, 1)), -0.9),
    ("staggered_pair", 2, ((0.2, 0.0, 1), (0.4, np.pi / 2, -1)), 0.3),
    ("staggered_pair", 3, ((0.2, 0.0, 1), (0.4, np.pi / 3, -1)), 0.3),
    ("staggered_pair", 4, ((0.2, 0.0, 1), (0.4, np.pi / 4, -1)), 0.3),
)


def catalog(entries=DEFAULT_CATALOG, classify=True):
    """Solve every catalog entry; failures are recorded, not raised."""
    out, failures = [], []
    for mode, k, rings, target in entries:
        try:
            eq = solve_equilibrium(RingFamily(k, rings), mode, target)
            eq.notes.update({"mode": mode, "target": target})
            if classify:
                classify_equilibrium(eq)
            out.append(eq)
        except (SolverFailure, PreconditionError, DomainError) as exc:
            failures.append({"mode": mode, "k": k, "target": target, "error": str(exc)})
    return out, failures


def catalog_json(eqs, failures=(), indent=2):
    return json.dumps({"equilibria": [e.to_dict() for e in eqs], "failures": list(failures)},
                      indent=indent)
