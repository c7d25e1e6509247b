"""Polar grids and fields stored as angular Fourier modes c_j(r_i).

Radial discretization is finite-volume: nodes r_1 < ... < r_N = 1, faces at
midpoints with f_{1/2} = 0, and a half cell at r = 1.  Cell volumes
V_i = (f_{i+1/2}^2 - f_{i-1/2}^2)/2 give the quadrature for int_0^1 g r dr;
it is exact for constants and second order otherwise.

When a field is k-fold symmetric only modes j = k q are stored and the
physical grid covers one sector [0, 2 pi / k).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline


def _good_size(n, multiple=12):
    """Smallest 5-smooth multiple of ``multiple`` that is >= n."""
    m = multiple * -(-n // multiple)
    while True:
        x = m
        for p in (2, 3, 5):
            while x % p == 0:
                x //= p
        if x == 1:
            return m
        m += multiple


class PolarGrid:
    def __init__(self, nodes, J_max, k_sym=0, n_theta=None):
        r = np.asarray(nodes, dtype=float)
        if r[-1] != 1.0 or np.any(np.diff(r) <= 0) or r[0] <= 0:
            raise ValueError("radial nodes must be increasing in (0, 1] with last node 1")
        self.r = r
        self.Nr = len(r)
        self.J_max = int(J_max)
        self.k_sym = int(k_sym)
        ks = self.ks
        self.modes = np.arange(-(self.J_max // ks), self.J_max // ks + 1) * ks
        faces = np.empty(self.Nr + 1)
        faces[0] = 0.0
        faces[1:-1] = 0.5 * (r[1:] + r[:-1])
        faces[-1] = 1.0
        self.faces = faces
        self.V = 0.5 * (faces[1:] ** 2 - faces[:-1] ** 2)
        self.dr = np.diff(r)
        q_max = self.J_max // ks
        self.n_theta = n_theta or _good_size(4 * q_max + 1)
        if self.n_theta < 2 * q_max + 1:
            raise ValueError("angular grid too coarse for the mode set")
        self.theta = 2 * np.pi * np.arange(self.n_theta) / (ks * self.n_theta)
        self._fft_idx = (self.modes // ks) % self.n_theta

    @property
    def ks(self):
        return self.k_sym if self.k_sym > 0 else 1

    @property
    def quadrature_weights(self):
        return self.V

    @property
    def n_modes(self):
        return len(self.modes)

    def mode_index(self, j):
        hits = np.nonzero(self.modes == j)[0]
        if len(hits) == 0:
            raise KeyError(f"mode {j} not represented")
        return int(hits[0])

    @classmethod
    def uniform(cls, Nr, J_max, k_sym=0, n_theta=None):
        h = 1.0 / (Nr - 0.5)
        r = (np.arange(1, Nr + 1) - 0.5) * h
        r[-1] = 1.0
        return cls(r, J_max, k_sym, n_theta)

    @classmethod
    def stretched(cls, Nr, J_max, k_sym=0, centers=(), width=0.05, strength=3.0,
                  edge_strength=1.0, n_theta=None):
        """Nodes clustered near the radii ``centers`` and near r = 1.

        The node density is 1 + strength * sum exp(-((r - c)/width)^2) plus an
        edge bump; nodes are the inverse CDF at staggered points, so the
        first node sits half a cell from the origin.
        """
        x = np.linspace(0.0, 1.0, 20001)
        dens = np.ones_like(x)
        for c in centers:
            dens += strength * np.exp(-((x - c) / width) ** 2)
        dens += edge_strength * np.exp(-((x - 1.0) / width) ** 2)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(x))])
        cdf /= cdf[-1]
        s = (np.arange(1, Nr + 1) - 0.5) / (Nr - 0.5)
        r = np.interp(s, cdf, x)
        r[-1] = 1.0
        return cls(r, J_max, k_sym, n_theta)

    def describe(self):
        return {"Nr": self.Nr, "J_max": self.J_max, "k_sym": self.k_sym, "n_theta": self.n_theta}

    # transforms -------------------------------------------------------
    def to_physical(self, coeffs):
        """(n_modes, Nr) -> (Nr, n_theta) samples on the sector grid."""
        C = np.zeros((self.Nr, self.n_theta), dtype=complex)
        C[:, self._fft_idx] = coeffs.T
        return np.fft.ifft(C, axis=1) * self.n_theta

    def to_modes(self, phys):
        F = np.fft.fft(phys, axis=1) / self.n_theta
        return F[:, self._fft_idx].T.copy()

    def integrate(self, phys):
        """int over the disc of a (Nr, n_theta) sample array."""
        return float(2 * np.pi * np.sum(self.V[:, None] * phys) / self.n_theta)


@dataclass
class PolarField:
    grid: PolarGrid
    coeffs: np.ndarray            # (n_modes, Nr) complex, mode-major
    epsilon: float
    n_bc: int
    k_sym: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.grid.n_modes, self.grid.Nr):
            raise ValueError("coefficient table does not match the grid")
        if self.k_sym and self.grid.k_sym and self.grid.k_sym != self.k_sym:
            raise ValueError("field symmetry differs from the grid sector")

    def copy(self, coeffs=None):
        return replace(self, coeffs=(self.coeffs if coeffs is None else coeffs).copy(),
                       meta=dict(self.meta))

    def set_boundary(self):
        self.coeffs[:, -1] = 0.0
        self.coeffs[self.grid.mode_index(self.n_bc), -1] = 1.0
        return self

    def boundary_exact(self):
        b = np.zeros(self.grid.n_modes, dtype=complex)
        b[self.grid.mode_index(self.n_bc)] = 1.0
        return bool(np.array_equal(self.coeffs[:, -1], b))

    def physical(self):
        return self.grid.to_physical(self.coeffs)

    def full_physical(self):
        """Samples on the full circle, theta_l = 2 pi l / (ks n_theta)."""
        g = self.grid
        ks = g.ks
        nt = ks * g.n_theta
        C = np.zeros((g.Nr, nt), dtype=complex)
        C[:, g.modes % nt] = self.coeffs.T
        theta = 2 * np.pi * np.arange(nt) / nt
        return theta, np.fft.ifft(C, axis=1) * nt

    def sector_norm(self, k):
        """max |c_j| over modes with k not dividing j."""
        mask = self.grid.modes % k != 0
        if not mask.any():
            return 0.0
        return float(np.max(np.abs(self.coeffs[mask])))

    def max_modulus(self):
        return float(np.max(np.abs(self.physical())))

    def spline(self):
        g = self.grid
        # even/odd extension through the origin keeps the spline regular there
        par = np.where(g.modes % 2 == 0, 1.0, -1.0)[:, None]
        rr = np.concatenate([-g.r[::-1], g.r])
        cc = np.concatenate([par * self.coeffs[:, ::-1], self.coeffs], axis=1)
        return CubicSpline(rr, cc, axis=1)

    def evaluate(self, z, chunk=4096):
        """u at arbitrary points z (complex array) via cubic splines in r."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(z.shape, dtype=complex)
        flat = z.ravel()
        res = out.ravel()
        sp = self.spline()
        j = self.grid.modes
        for s in range(0, len(flat), chunk):
            zz = flat[s:s + chunk]
            r = np.minimum(np.abs(zz), 1.0)
            c = sp(r)
            res[s:s + chunk] = np.sum(c * np.exp(1j * np.outer(j, np.angle(zz))), axis=0)
        return out

    def rotated(self, alpha):
        """v(e^{-i alpha} z), i.e. the field rotated by alpha."""
        ph = np.exp(-1j * self.grid.modes * alpha)[:, None]
        return self.copy(self.coeffs * ph)

    # IO ---------------------------------------------------------------
    def header(self):
        return {"Nr": self.grid.Nr, "modes": [int(j) for j in self.grid.modes],
                "epsilon": self.epsilon, "k_sym": self.k_sym, "n_bc": self.n_bc,
                "J_max": self.grid.J_max, "n_theta": self.grid.n_theta,
                "grid_k_sym": self.grid.k_sym, "radial_nodes": [float(x) for x in self.grid.r]}

    def save(self, path):
        head = json.dumps(self.header()).encode()
        payload = np.empty(self.coeffs.size * 2, dtype="<f8")
        payload[0::2] = self.coeffs.real.ravel()
        payload[1::2] = self.coeffs.imag.ravel()
        with open(path, "wb") as fh:
            fh.write(len(head).to_bytes(8, "little"))
            fh.write(head)
            fh.write(payload.tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            nh = int.from_bytes(fh.read(8), "little")
            head = json.loads(fh.read(nh))
            data = np.frombuffer(fh.read(), dtype="<f8")
        grid = PolarGrid(head["radial_nodes"], head["J_max"], head["grid_k_sym"], head["n_theta"])
        c = (data[0::2] + 1j * data[1::2]).reshape(len(head["modes"]), head["Nr"])
        return cls(grid, c, head["epsilon"], head["n_bc"], head["k_sym"])

    def export_raster_csv(self, path, n_r=64, n_theta=128):
        """|u| and phase on a uniform polar raster, for plotting."""
        rr = (np.arange(n_r) + 0.5) / n_r
        tt = 2 * np.pi * np.arange(n_theta) / n_theta
        R, T = np.meshgrid(rr, tt, indexing="ij")
        u = self.evaluate(R * np.exp(1j * T))
        with open(path, "w") as fh:
            fh.write("r,theta,modulus,phase\n")
            for a, b, c, d in zip(R.ravel(), T.ravel(), np.abs(u).ravel(), np.angle(u).ravel()):
                fh.write(f"{a:.6f},{b:.6f},{c:.10g},{d:.10g}\n")


def zero_field(grid, epsilon, n_bc, k_sym=0):
    f = PolarField(grid, np.zeros((grid.n_modes, grid.Nr), dtype=complex), epsilon, n_bc, k_sym)
    return f.set_boundary()


def field_from_function(fn, grid, epsilon, n_bc, k_sym=0):
    """Project fn(z) onto the grid's modes; boundary set exactly."""
    Z = grid.r[:, None] * np.exp(1j * grid.theta[None, :])
    c = grid.to_modes(fn(Z))
    return PolarField(grid, c, epsilon, n_bc, k_sym).set_boundary()
