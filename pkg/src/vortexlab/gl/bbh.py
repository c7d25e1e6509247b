"""Well-prepared initial data with prescribed vortices.

The phase is that of prod_i [(z - b_i)(1 - conj(b_i) z)]^{d_i}, the harmonic
conjugate of Phi_0(z) = sum_i d_i log|(b_i - z)(1 - conj(b_i) z)|; on |z| = 1 it
equals z^n.  The modulus is prod_i f(|z - b_i|/eps) with the C^1 core
profile f(s) = s - s^2/4 for s <= 2 and 1 beyond.
"""
from __future__ import annotations

import warnings

import numpy as np

from ..errors import ConstructionError
from ..pvf import VortexConfig, min_pair_distance
from .grid import PolarField, PolarGrid


def core_profile(s):
    s = np.asarray(s, dtype=float)
    return np.where(s < 2.0, s - 0.25 * s * s, 1.0)


def bbh_function(config: VortexConfig, epsilon: float):
    b = config.positions
    d = config.degrees

    def w(z):
        z = np.asarray(z, dtype=complex)
        out = np.ones(z.shape, dtype=complex)
        for bi, di in zip(b, d):
            q = (z - bi) * (1.0 - np.conj(bi) * z)
            aq = np.abs(q)
            ph = np.where(aq > 0, q / np.where(aq > 0, aq, 1.0), 1.0)
            ph = ph if di > 0 else np.conj(ph)
            out *= core_profile(np.abs(z - bi) / epsilon) * ph
        return out

    return w


def bbh_initial_data(config: VortexConfig, epsilon: float, grid: PolarGrid,
                     k_sym: int | None = None, check_resolution=True) -> PolarField:
    b = config.positions
    if config.N:
        if min_pair_distance(b) <= 4 * epsilon or np.any(1.0 - np.abs(b) <= 4 * epsilon):
            raise ConstructionError("vortices closer than 4*eps to each other or to the boundary")
    if k_sym is None:
        k_sym = grid.k_sym
    if grid.k_sym > 1:
        rot = set(np.round(b * np.exp(2j * np.pi / grid.k_sym), 12))
        if rot != set(np.round(b, 12)):
            raise ConstructionError("configuration lacks the grid's k-fold symmetry")
    if check_resolution and config.N:
        for rad in np.unique(np.round(np.abs(b), 12)):
            i = np.clip(np.searchsorted(grid.r, rad), 1, grid.Nr - 1)
            if grid.r[i] - grid.r[i - 1] > epsilon / 4 + 1e-15:
                warnings.warn(f"radial spacing near r={rad:.3f} exceeds eps/4", stacklevel=2)
    w = bbh_function(config, epsilon)
    Z = grid.r[:, None] * np.exp(1j * grid.theta[None, :])
    c = grid.to_modes(w(Z))
    f = PolarField(grid, c, epsilon, config.n, k_sym)
    f.set_boundary()
    f.meta["vortices"] = {"positions": [complex(x) for x in b], "degrees": [int(x) for x in config.degrees]}
    return f
