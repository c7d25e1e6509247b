"""The core-energy constant gamma = lim_{t->0} (I(t) + pi log t).

I(t) is the minimal energy of the degree-one radial profile u = f(r) e^{i theta}
on the unit disc with eps = t:

    I = pi int_0^1 (f'^2 + f^2/r^2) r dr + pi/(2 t^2) int_0^1 (1 - f^2)^2 r dr,

f(0) = 0, f(1) = 1.  The profile is P1 on a grid r = sinh(a s)/sinh(a)
that clusters nodes in the core; integrals use the element midpoint, so the
Hessian is tridiagonal and Newton uses a banded solve.  Richardson
extrapolation is applied in h and then in t.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from ..errors import ResolutionError, SolverFailure


def _grid(n, t):
    a = max(np.arcsinh(1.0 / (0.2 * t)), 1.0)      # cluster so the core spans many cells
    s = np.linspace(0.0, 1.0, n + 1)
    return np.sinh(a * s) / np.sinh(a)


def profile_energy(f, r, t):
    dr = np.diff(r)
    rm = 0.5 * (r[1:] + r[:-1])
    fm = 0.5 * (f[1:] + f[:-1])
    df = np.diff(f) / dr
    return float(np.pi * np.sum(dr * (df ** 2 * rm + fm ** 2 / rm))
                 + np.pi / (2 * t * t) * np.sum(dr * rm * (1 - fm ** 2) ** 2))


def _grad_hess(f, r, t):
    dr = np.diff(r)
    rm = 0.5 * (r[1:] + r[:-1])
    fm = 0.5 * (f[1:] + f[:-1])
    df = np.diff(f) / dr
    c = np.pi / (2 * t * t)
    # element contributions: d/dfm and d2/dfm2 of the midpoint terms
    g_m = np.pi * dr * 2 * fm / rm + c * dr * rm * (-4 * fm * (1 - fm ** 2))
    h_m = np.pi * dr * 2 / rm + c * dr * rm * (-4 * (1 - fm ** 2) + 8 * fm ** 2)
    g_d = np.pi * 2 * df * rm           # d/d(f_{i+1}-f_i) of dr*df^2*rm
    h_d = np.pi * 2 * rm / dr
    n = len(f)
    g = np.zeros(n)
    g[:-1] += 0.5 * g_m - g_d
    g[1:] += 0.5 * g_m + g_d
    diag = np.zeros(n)
    diag[:-1] += 0.25 * h_m + h_d
    diag[1:] += 0.25 * h_m + h_d
    off = 0.25 * h_m - h_d
    return g, diag, off


def minimize_profile(t, n=2000, tol=1e-12, maxit=100):
    r = _grid(n, t)
    f = np.tanh(r / t) / np.tanh(1.0 / t)
    f[0], f[-1] = 0.0, 1.0
    for _ in range(maxit):
        g, diag, off = _grad_hess(f, r, t)
        gi = g[1:-1]
        if np.max(np.abs(gi)) < tol:
            return f, r, profile_energy(f, r, t)
        ab = np.zeros((3, len(gi)))
        ab[0, 1:] = off[1:-1]
        ab[1] = diag[1:-1]
        ab[2, :-1] = off[1:-1]
        step = solve_banded((1, 1), ab, -gi)
        E0 = profile_energy(f, r, t)
        lam = 1.0
        while lam > 1e-8:
            fn = f.copy()
            fn[1:-1] += lam * step
            if profile_energy(fn, r, t) <= E0 + 1e-14 * abs(E0):
                break
            lam *= 0.5
        f = fn
    g, _, _ = _grad_hess(f, r, t)
    if np.max(np.abs(g[1:-1])) < 1e-8:
        return f, r, profile_energy(f, r, t)
    raise SolverFailure("profile Newton did not converge")


def I_of_t(t, n=2000, richardson=True):
    """I(t) with one Richardson step in the grid size (second order)."""
    e1 = minimize_profile(t, n)[2]
    if not richardson:
        return e1
    e2 = minimize_profile(t, 2 * n)[2]
    return (4 * e2 - e1) / 3


def I_eps_R(eps, R, n=2000):
    """I(eps, R) computed directly on B_R (the profile problem rescaled by hand)."""
    r = _grid(n, eps / R) * R
    f = minimize_profile(eps / R, n)[0]
    # energy is invariant in 2-D under x -> x/R with eps -> eps/R
    dr = np.diff(r)
    rm = 0.5 * (r[1:] + r[:-1])
    fm = 0.5 * (f[1:] + f[:-1])
    df = np.diff(f) / dr
    return float(np.pi * np.sum(dr * (df ** 2 * rm + fm ** 2 / rm))
                 + np.pi / (2 * eps * eps) * np.sum(dr * rm * (1 - fm ** 2) ** 2))


def gamma_sequence(epsilon_list, n=2000):
    eps = np.asarray(epsilon_list, dtype=float)
    return eps, np.array([I_of_t(t, n) + np.pi * np.log(t) for t in eps])


def estimate_gamma(epsilon_list, grid=None, n=None, return_details=False):
    """Extrapolated gamma from a decreasing list of eps.

    ``grid`` may be a PolarGrid (its Nr sets the base resolution) or None.
    Each value I(t) + pi log t is grid-extrapolated; the sequence is then
    extrapolated in t assuming an O(t^2) remainder, using the two smallest t.
    """
    eps = np.asarray(epsilon_list, dtype=float)
    if len(eps) < 2 or np.any(np.diff(eps) >= 0):
        raise ValueError("epsilon_list must be strictly decreasing with at least two entries")
    if n is None:
        n = max(2000, 4 * getattr(grid, "Nr", 0))
    _, vals = gamma_sequence(eps, n)
    # I(t) + pi log t must be non-decreasing in t (i.e. along decreasing t it cannot increase)
    if np.any(np.diff(vals) > 1e-9):
        raise ResolutionError("I(t) + pi log t not monotone: grid under-resolved")
    pair = []
    for a, b, va, vb in zip(eps[:-1], eps[1:], vals[:-1], vals[1:]):
        q = (a / b) ** 2
        pair.append((q * vb - va) / (q - 1))
    g = pair[-1]
    if return_details:
        return g, {"epsilon": eps.tolist(), "values": vals.tolist(), "pairwise": pair}
    return g
