"""Vortex extraction from polar fields and the field/point-vortex correspondence checks."""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from .errors import TrackingError
from .pvf import VortexConfig, grad_W_complex


@dataclass
class VortexObservation:
    position: complex
    degree: int
    localization_radius: float
    modulus_min: float

    def to_dict(self):
        d = asdict(self)
        d["position"] = [self.position.real, self.position.imag]
        return d


@dataclass
class TrackReport:
    theta_star: float
    deviations: list
    max_deviation: float
    angular_speed: float | None = None
    expected_speed: float | None = None

    def to_json(self):
        return json.dumps({"theta_star": self.theta_star, "deviations": list(map(float, self.deviations)),
                           "max_deviation": self.max_deviation, "angular_speed": self.angular_speed,
                           "expected_speed": self.expected_speed})


# ---------------------------------------------------------------- Jacobian

def jacobian_density(field):
    """Pointwise Ju = (1/r) Im(conj(u_r) u_theta) on the full-circle grid."""
    g = field.grid
    c = field.coeffs
    cr = np.gradient(c, g.r, axis=1, edge_order=2)
    ct = 1j * g.modes[:, None] * c
    ks = g.ks
    nt = ks * g.n_theta

    def phys(a):
        A = np.zeros((g.Nr, nt), dtype=complex)
        A[:, g.modes % nt] = a.T
        return np.fft.ifft(A, axis=1) * nt

    ur, ut = phys(cr), phys(ct)
    theta = 2 * np.pi * np.arange(nt) / nt
    return theta, (np.conj(ur) * ut).imag / g.r[:, None]


def jacobian_pairing(field, testfn):
    """int phi Ju over the disc; ``testfn`` is a callable phi(x, y) or an (Nr, n_full) array."""
    g = field.grid
    theta, J = jacobian_density(field)
    if callable(testfn):
        X = g.r[:, None] * np.cos(theta)[None, :]
        Y = g.r[:, None] * np.sin(theta)[None, :]
        phi = np.asarray(testfn(X, Y), dtype=float)
    else:
        phi = np.asarray(testfn, dtype=float)
    return float(2 * np.pi * np.sum(g.V[:, None] * phi * J) / len(theta))


def bump(center, radius):
    """Smooth bump exp(1 - 1/(1 - s^2)) supported in |x - center| < radius."""
    cx, cy = center.real, center.imag

    def phi(x, y):
        s2 = np.asarray(((x - cx) ** 2 + (y - cy) ** 2) / radius ** 2, dtype=float)
        out = np.zeros_like(s2)
        m = s2 < 1
        out[m] = np.exp(1.0 - 1.0 / (1.0 - s2[m]))
        return out

    return phi


# ---------------------------------------------------------------- detection

def winding_number(field, center, radius, n=128):
    z = center + radius * np.exp(2j * np.pi * np.arange(n + 1) / n)
    u = field.evaluate(z)
    dphi = np.angle(u[1:] / u[:-1])
    return int(np.rint(dphi.sum() / (2 * np.pi)))


def _refine_zero(field, z0, h, maxit=20):
    z = complex(z0)
    for _ in range(maxit):
        u, ux, uy = field.evaluate(np.array([z, z + h, z + 1j * h]))
        a = np.array([[(ux - u).real, (uy - u).real], [(ux - u).imag, (uy - u).imag]]) / h
        try:
            dz = np.linalg.solve(a, -np.array([u.real, u.imag]))
        except np.linalg.LinAlgError:
            break
        z += dz[0] + 1j * dz[1]
        if abs(dz[0] + 1j * dz[1]) < 1e-12:
            break
    return z


def detect_vortices(field, threshold=0.5, spacing=None, boundary_band=None, wind_factor=4.0):
    """Components of {|u| <= threshold} on a Cartesian raster, refined by Newton on u = 0."""
    eps = field.epsilon
    h = spacing or eps / 4
    band = boundary_band if boundary_band is not None else 2 * eps
    xs = np.arange(-1 + h / 2, 1, h)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    Z = X + 1j * Y
    inside = np.abs(Z) < 1 - band
    # bilinear interpolation of the polar physical grid
    theta, u = field.full_physical()
    g = field.grid
    nt = len(theta)
    rr = np.abs(Z[inside])
    tt = np.mod(np.angle(Z[inside]), 2 * np.pi) / (2 * np.pi / nt)
    i1 = np.clip(np.searchsorted(g.r, rr), 1, g.Nr - 1)
    i0 = i1 - 1
    wr = np.clip((rr - g.r[i0]) / (g.r[i1] - g.r[i0]), 0.0, 1.0)
    small = rr < g.r[0]
    wr[small] = 0.0
    i1[small] = 0
    i0[small] = 0
    j0 = np.floor(tt).astype(int) % nt
    j1 = (j0 + 1) % nt
    wt = tt - np.floor(tt)
    val = ((1 - wr) * ((1 - wt) * u[i0, j0] + wt * u[i0, j1]) + wr * ((1 - wt) * u[i1, j0] + wt * u[i1, j1]))
    if small.any():
        val[small] = field.evaluate(Z[inside][small])
    mod = np.full(Z.shape, np.inf)
    mod[inside] = np.abs(val)
    labels, nlab = ndimage.label(mod <= threshold)
    centers = []
    for lab in range(1, nlab + 1):
        mask = labels == lab
        w = np.maximum(threshold - mod[mask], 0) + 1e-12
        c0 = np.sum(Z[mask] * w) / np.sum(w)
        c = _refine_zero(field, c0, h * 1e-2)
        if abs(c - c0) > 2 * eps or abs(c) >= 1:
            c = c0
        area = mask.sum() * h * h
        centers.append((c, np.sqrt(area / np.pi)))
    out = []
    for idx, (c, rad) in enumerate(centers):
        R = wind_factor * eps
        for jdx, (c2, rad2) in enumerate(centers):
            if jdx != idx and abs(c2 - c) < R + rad2:
                warnings.warn("winding circle meets another vortex region: merged vortex", stacklevel=2)
        R = min(R, 0.999 - abs(c))
        deg = winding_number(field, c, R)
        mmin = float(abs(field.evaluate(np.array([c]))[0]))
        if deg != 0:
            out.append(VortexObservation(complex(c), deg, float(rad), mmin))
    return out


def detections_to_config(obs):
    return VortexConfig([o.position for o in obs], [int(np.sign(o.degree)) for o in obs])


def write_detections_csv(path, rows):
    """rows: iterable of (t, [VortexObservation, ...])."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re", "im", "degree", "radius"])
        for t, obs in rows:
            for o in obs:
                w.writerow([repr(float(t)), repr(o.position.real), repr(o.position.imag), o.degree,
                            repr(o.localization_radius)])


# ---------------------------------------------------------------- identities

def boundary_normal_derivative(grid, c):
    """c_j'(1) by the one-sided three-point formula on the last three nodes."""
    r0, r1, r2 = grid.r[-3], grid.r[-2], grid.r[-1]
    w0 = (r2 - r1) / ((r0 - r1) * (r0 - r2))
    w1 = (r2 - r0) / ((r1 - r0) * (r1 - r2))
    w2 = (2 * r2 - r0 - r1) / ((r2 - r0) * (r2 - r1))
    return w0 * c[:, -3] + w1 * c[:, -2] + w2 * c[:, -1]


def pohozaev_residual(field, params, omega=None):
    """|LHS - RHS| of
    (1/2) int_{dD} |dv/dnu|^2 - pi n^2 + int (1-|v|^2)^2/(2 eps^2)
        = omega k (pi - int |v|^2) - (omega/m) int |y|^2 Jv,
    with all five terms."""
    om = params.omega if omega is None else omega
    g = field.grid
    eps = field.epsilon
    n = field.n_bc
    k, m = params.k, params.m
    dv = boundary_normal_derivative(g, field.coeffs)
    t1 = 0.5 * 2 * np.pi * float(np.sum(np.abs(dv) ** 2))
    t2 = -np.pi * n * n
    u = field.physical()
    t3 = g.integrate((1 - np.abs(u) ** 2) ** 2) / (2 * eps ** 2)
    mass = 2 * np.pi * float(np.sum(g.V[None, :] * np.abs(field.coeffs) ** 2))
    t4 = om * k * (np.pi - mass)
    theta, J = jacobian_density(field)
    mom = float(2 * np.pi * np.sum(g.V[:, None] * g.r[:, None] ** 2 * J) / len(theta))
    t5 = -(om / m) * mom
    lhs = t1 + t2 + t3
    rhs = t4 + t5
    return abs(lhs - rhs), {"boundary": t1, "degree": t2, "potential": t3, "mass": t4,
                            "jacobian_moment": t5, "lhs": lhs, "rhs": rhs}


def vanishing_gradient_defects(config, omega0, m):
    """|grad_{b_j} W + d_j pi (omega0/m) b_j| per vortex."""
    b, d = config.positions, config.degrees
    return np.abs(grad_W_complex(b, d) + d * np.pi * (omega0 / m) * b)


def vanishing_gradient_check(field, params, omega=None, expected=None):
    om = params.omega if omega is None else omega
    obs = detect_vortices(field)
    if not obs:
        raise TrackingError("no vortices detected")
    if expected is not None and len(obs) != expected:
        raise TrackingError(f"detected {len(obs)} vortices, expected {expected}")
    cfg = detections_to_config(obs)
    m = params.m
    return vanishing_gradient_defects(cfg, om, m), cfg


# ---------------------------------------------------------------- tracking

def _match(detected, ref_pos, ref_deg):
    """Optimal assignment with degree as a hard constraint; returns mean distance and per-pair distances."""
    pos = np.array([o.position for o in detected])
    deg = np.array([o.degree for o in detected])
    if len(pos) != len(ref_pos):
        raise TrackingError(f"{len(pos)} detections vs {len(ref_pos)} reference vortices")
    D = np.abs(pos[:, None] - ref_pos[None, :])
    D = np.where(deg[:, None] == ref_deg[None, :], D, 1e6)
    ri, ci = linear_sum_assignment(D)
    dist = D[ri, ci]
    if np.any(dist >= 1e6):
        raise TrackingError("degree mismatch in assignment")
    return dist, ri, ci


def compare_to_pvf(snapshots, equilibrium, times=None, n_theta_scan=720):
    """Track detected vortices of ``snapshots`` against the rotating reference.

    ``snapshots`` is a list of fields or of detection lists; ``times`` the
    corresponding times (needed for the angular-speed estimate).  The
    reference is e(theta_*) a(t) with a(t) = a e(-omega0 t/m).
    """
    dets = [s if isinstance(s, list) else detect_vortices(s) for s in snapshots]
    cfg = equilibrium.config()
    a, da = cfg.positions, cfg.degrees
    w = equilibrium.angular_speed
    times = np.zeros(len(dets)) if times is None else np.asarray(times, dtype=float)
    # coarse scan then refinement of theta_*
    thetas = 2 * np.pi * np.arange(n_theta_scan) / n_theta_scan
    cost = [np.sum(_match(dets[0], a * np.exp(1j * th), da)[0] ** 2) for th in thetas]
    th = thetas[int(np.argmin(cost))]
    from scipy.optimize import minimize_scalar
    span = 2 * np.pi / n_theta_scan
    res = minimize_scalar(lambda x: np.sum(_match(dets[0], a * np.exp(1j * x), da)[0] ** 2),
                          bounds=(th - span, th + span), method="bounded",
                          options={"xatol": 1e-13})
    theta_star = float(np.mod(res.x, 2 * np.pi))
    devs = []
    phases = []
    for t, obs in zip(times, dets):
        ref = a * np.exp(1j * (theta_star - w * t))
        dist, ri, ci = _match(obs, ref, da)
        devs.append(float(np.max(dist)))
        pos = np.array([o.position for o in obs])[ri]
        phases.append(np.angle(np.sum(pos * np.conj(a[ci]))))
    speed = None
    if len(times) > 1 and np.ptp(times) > 0:
        ph = np.unwrap(np.array(phases))
        speed = float(-np.polyfit(times, ph, 1)[0])
    return TrackReport(theta_star, devs, float(max(devs)), speed, float(w))
