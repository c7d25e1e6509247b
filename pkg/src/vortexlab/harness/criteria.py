"""The acceptance battery: sixteen criteria, each returning value and tolerance used."""
from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..equilibria import (DEFAULT_CATALOG, RingFamily, catalog, grad_H_fd, ring_residual,
                          single_ring_omega, solve_equilibrium)
from ..errors import VortexLabError
from ..gl import functionals as F
from ..gl.bbh import bbh_initial_data
from ..gl.flow import constrained_relax, reconstruct_time_periodic, relax_to_critical
from ..gl.functionals import SolverParams
from ..gl.grid import PolarGrid
from ..pvf import (VortexConfig, grad_W, integrate_pvf, momentum_J0, polygon_config,
                   renormalized_energy, staggered_pair_config, staggered_radius)
from ..tracker import bump, compare_to_pvf, detect_vortices, jacobian_pairing
from . import runner


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    value: object
    tolerance: object
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.id:2d} {self.name}: value={_fmt(self.value)} tol={_fmt(self.tolerance)}"

    def to_dict(self):
        return runner._jsonable({"id": self.id, "name": self.name, "passed": bool(self.passed),
                                 "value": self.value, "tolerance": self.tolerance,
                                 "details": self.details, "seconds": self.seconds})


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.3e}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    return str(x)


def _decreasing(xs):
    return all(b < a for a, b in zip(xs, xs[1:]))


SWEEP_EPS = (0.1, 0.05, 0.025)
SWEEP_NUMERICS = {"residual_tol": 1e-7, "max_steps": 20000, "symmetric": True}


@functools.lru_cache(maxsize=None)
def n1_equilibrium():
    return solve_equilibrium(RingFamily(1, ((0.5, 0.0, 1),)), "single_ring_from_momentum", -0.125)


@functools.lru_cache(maxsize=None)
def n1_sweep():
    """Constrained n = 1 relaxations shared by several criteria."""
    eq = n1_equilibrium()
    out = []
    for eps in SWEEP_EPS:
        res, params, info, obs = runner.relax_equilibrium(eq, eps, SWEEP_NUMERICS)
        out.append((eps, res, params, info, obs))
    return tuple(out)


@functools.lru_cache(maxsize=None)
def staggered_run(eps=0.05, extra_steps=100_000):
    eq = solve_equilibrium(RingFamily(2, ((0.3, 0.0, 1), (0.3, np.pi / 2, -1))), "staggered_pair", 0.3)
    res, params, info, obs = runner.relax_equilibrium(eq, eps, SWEEP_NUMERICS)
    p2 = SolverParams(omega=params.omega, k=params.k, m=params.m, dt=params.dt, residual_tol=0.0,
                      max_steps=extra_steps, real_modes=params.real_modes)
    long = constrained_relax(res.field, None, p2)
    return eq, res, long, info


_RELAX_HISTORIES = {}


def _record(name, result):
    _RELAX_HISTORIES[name] = result.max_action_increase()


# ------------------------------------------------------------------ criteria

def c01_pvf_conservation():
    cfg = polygon_config(3, 0.5)
    om = single_ring_omega(3, 0.5)
    T = 2 * np.pi / abs(om)
    traj = integrate_pvf(cfg, T, T / 4000)
    dW, dJ = traj.drift()
    v = max(dW, dJ)
    return v <= 1e-8, v, 1e-8, {"drift_W": dW, "drift_J0": dJ, "period": T, "aborted": traj.aborted}


def _measured_rate(n, rho):
    cfg = polygon_config(n, rho)
    om = single_ring_omega(n, rho)
    T = 2 * np.pi / abs(om)
    traj = integrate_pvf(cfg, T / 4, T / 20000)
    ph = np.unwrap(np.angle(traj.positions[:, 0]))
    rate = -np.polyfit(traj.times, ph, 1)[0]
    return rate, om


def c02_closed_form_speeds():
    w1 = single_ring_omega(1, 0.5)
    w2 = single_ring_omega(2, 0.5)
    e1 = abs(w1 + 8 / 3)
    e2 = abs(w2 + 76 / 15)
    r1, _ = _measured_rate(1, 0.5)
    r2, _ = _measured_rate(2, 0.5)
    m1, m2 = abs(r1 - w1), abs(r2 - w2)
    ok = e1 <= 1e-12 and e2 <= 1e-12 and m1 <= 1e-6 and m2 <= 1e-6
    return ok, [e1, e2, m1, m2], [1e-12, 1e-12, 1e-6, 1e-6], {
        "omega_n1": w1, "omega_n2": w2, "expected_n2": -76 / 15, "measured_n1": r1, "measured_n2": r2}


def c03_staggered_criticality():
    at, off = [], []
    for k in (1, 2, 3, 4):
        r0 = staggered_radius(k)
        at.append(float(np.linalg.norm(grad_W(staggered_pair_config(k, r0)))))
        off.append(min(float(np.linalg.norm(grad_W(staggered_pair_config(k, r0 + s)))) for s in (-0.05, 0.05)))
    ok = max(at) <= 1e-10 and min(off) > 1e-3
    return ok, {"at_r0": at, "off_r0": off}, {"at_r0": 1e-10, "off_r0_min": 1e-3}, {}


def random_configs(count=16, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        N = int(rng.integers(1, 5))
        b = np.sqrt(rng.uniform(0, 0.8, N)) * np.exp(2j * np.pi * rng.uniform(size=N))
        d = rng.choice([-1, 1], N)
        if N == 1 or min(abs(x - y) for i, x in enumerate(b) for y in b[i + 1:]) > 0.05:
            out.append(VortexConfig(b, d))
    return out


def gradient_consistency(count=16, seed=0):
    """Max relative gap between the analytic grad_W and central differences of W."""
    from .. import pvf
    worst = 0.0
    for cfg in random_configs(count, seed):
        g = pvf.grad_W(cfg)
        fd = pvf.grad_W_fd(cfg)
        worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)))
    return worst


def c04_cross_validation():
    gc = gradient_consistency()
    eqs, fails = catalog(DEFAULT_CATALOG, classify=False)
    rr, gh = [], []
    for eq in eqs:
        rr.append(float(np.max(np.abs(ring_residual(eq.family, eq.omega0, eq.m)))))
        gh.append(float(np.linalg.norm(grad_H_fd(eq.config(), eq.omega0, eq.m))))
    ok = not fails and max(rr) <= 1e-10 and max(gh) <= 1e-8 and gc <= 1e-6
    return ok, [max(rr), max(gh), gc], [1e-10, 1e-8, 1e-6], {
        "entries": len(eqs), "failures": len(fails), "checks": ["ring_residual", "fd_grad_H", "grad_W_vs_fd"]}


def c05_assumption_a():
    from ..equilibria import classify_equilibrium
    nulls, aligns = [], []
    for n in (1, 2, 3, 4):
        eq = solve_equilibrium(RingFamily(n, ((0.5, 0.0, 1),)), "single_ring_from_momentum",
                               -0.5 * n * 0.25)
        rep = classify_equilibrium(eq)
        nulls.append(rep.null_count)
        aligns.append(rep.tangent_alignment)
    ok = all(c == 1 for c in nulls) and min(aligns) >= 0.999
    return ok, {"null_count": nulls, "alignment": aligns}, {"null_count": 1, "alignment_min": 0.999}, {}


BBH_EPS = (0.05, 0.02, 0.01)
CFG_P = VortexConfig([0.3, -0.3], [1, -1])
CFG_Q = VortexConfig([0.4j, -0.2 + 0.1j], [1, -1])
CFG_M = VortexConfig([0.3 + 0.1j, -0.45], [1, 1])     # nonzero momentum


def _bbh_grid(eps):
    return PolarGrid.uniform(int(math.ceil(4 / eps)) + 50, int(math.ceil(np.pi / eps)) + 8)


@functools.lru_cache(maxsize=None)
def _bbh_fields(eps):
    g = _bbh_grid(eps)
    return (bbh_initial_data(CFG_P, eps, g, check_resolution=False),
            bbh_initial_data(CFG_Q, eps, g, check_resolution=False))


def c06_bbh_energy():
    gaps = []
    dW = renormalized_energy(CFG_P) - renormalized_energy(CFG_Q)
    for eps in BBH_EPS:
        fp, fq = _bbh_fields(eps)
        gaps.append(abs(F.energy_E(fp) - F.energy_E(fq) - dW))
    ok = gaps[1] <= 0.1 and _decreasing(gaps)
    return ok, gaps, {"at_0.02": 0.1, "trend": "decreasing"}, {"epsilon": BBH_EPS}


def c07_bbh_momentum():
    gaps = []
    for eps in BBH_EPS:
        f = bbh_initial_data(CFG_M, eps, _bbh_grid(eps), check_resolution=False)
        gaps.append(abs(F.momentum_J(f, CFG_M.n, 1) - np.pi * momentum_J0(CFG_M)))
    ok = gaps[1] <= 0.05 and _decreasing(gaps)
    return ok, gaps, {"at_0.02": 0.05, "trend": "decreasing"}, {"epsilon": BBH_EPS}


def c08_symmetry_sector(steps=10_000):
    eps = 0.1
    g = PolarGrid.uniform(48, 24)                    # full circle, every mode present
    cfg = polygon_config(2, 0.5)
    f0 = bbh_initial_data(cfg, eps, g, k_sym=0, check_resolution=False)
    params = SolverParams(omega=single_ring_omega(2, 0.5), k=2, m=1, dt=2 * eps ** 2,
                          residual_tol=0.0, max_steps=steps)
    off = ~(g.modes % 2 == 0)
    worst = [float(np.max(np.abs(f0.coeffs[off])))]

    def cb(step, c, res):
        worst[0] = max(worst[0], float(np.max(np.abs(c[off]))))

    res = relax_to_critical(f0, params, callback=cb)
    _record("symmetry_sector", res)
    return worst[0] <= 1e-12, worst[0], 1e-12, {"steps": res.steps}


def c09_descent():
    for eps, res, *_ in n1_sweep():
        _record(f"n1_eps_{eps}", res)
    _, res, long, _ = staggered_run()
    _record("staggered", res)
    _record("staggered_long", long)
    if "symmetry_sector" not in _RELAX_HISTORIES:
        c08_symmetry_sector()
    v = max(_RELAX_HISTORIES.values())
    return v <= 1e-10, v, 1e-10, {"runs": dict(_RELAX_HISTORIES)}


def c10_maximum_principle():
    vals, tols = [], []
    for eps, res, params, info, obs in n1_sweep():
        vals.append(info["max_modulus"])
        tols.append(1 + 10 * eps ** 2)
    return all(v <= t for v, t in zip(vals, tols)), vals, tols, {"epsilon": SWEEP_EPS}


def c11_vortex_correspondence():
    devs, counts = [], []
    for eps, res, params, info, obs in n1_sweep():
        devs.append(info.get("circle_deviation", np.inf))
        counts.append((info["n_plus"], info["n_minus"]))
    i05 = SWEEP_EPS.index(0.05)
    ok = counts[i05] == (1, 0) and devs[i05] <= 0.05 and _decreasing(devs)
    return ok, devs, {"at_0.05": 0.05, "trend": "decreasing"}, {"counts": counts, "epsilon": SWEEP_EPS}


def c12_jacobian():
    eps = 0.02
    cfg = VortexConfig([0.3, -0.3], [1, 1])
    f = bbh_initial_data(cfg, eps, _bbh_grid(eps), check_resolution=False)
    tests = [bump(0.3, 0.2), bump(-0.3 + 0.05j, 0.25), bump(0.15, 0.6)]
    errs = []
    for phi in tests:
        got = jacobian_pairing(f, phi)
        want = np.pi * sum(d * float(phi(z.real, z.imag)) for z, d in zip(cfg.positions, cfg.degrees))
        errs.append(abs(got - want) / abs(want))
    return max(errs) <= 0.05, errs, 0.05, {}


def c13_pohozaev():
    vals, bounds, pots = [], [], []
    for eps, res, params, info, obs in n1_sweep():
        vals.append(info["pohozaev"])
        bounds.append(float(info["pohozaev_bound"]))
        pots.append(info["pohozaev_terms"]["potential"])
    pot_ok = max(pots) <= 1.25 * min(pots)
    ok = all(v <= b for v, b in zip(vals, bounds)) and pot_ok
    return ok, {"residual": vals, "potential": pots}, {"bound": bounds, "potential_max_over_min": 1.25}, {
        "bound_form": f"{runner.POHOZAEV_C_RES}*res/eps + {runner.POHOZAEV_C_H}*h^2/eps"}


def c14_vanishing_gradient():
    defs = []
    for eps, res, params, info, obs in n1_sweep():
        defs.append(max(info.get("vanishing_gradient") or [np.inf]))
    i05 = SWEEP_EPS.index(0.05)
    ok = defs[i05] <= 0.1 and _decreasing(defs)
    return ok, defs, {"at_0.05": 0.1, "trend": "decreasing"}, {"epsilon": SWEEP_EPS}


def c15_periodicity():
    eps, res, params, info, obs = n1_sweep()[SWEEP_EPS.index(0.05)]
    v = res.field
    p = SolverParams(omega=res.omega, k=params.k, m=params.m)
    T = 2 * np.pi * p.m / abs(p.omega)
    err = float(np.max(np.abs(reconstruct_time_periodic(v, p, T).coeffs - v.coeffs)))
    times = T * np.arange(4) / 16
    snaps = [detect_vortices(reconstruct_time_periodic(v, p, t)) for t in times]
    rep = compare_to_pvf(snaps, n1_equilibrium(), times)
    sp_err = abs(rep.angular_speed - p.omega / p.m)
    ok = err <= 1e-13 and sp_err <= 1e-3
    return ok, [err, sp_err], [1e-13, 1e-3], {
        "tracked_speed": rep.angular_speed, "omega_eps": p.omega,
        "omega0_pvf": n1_equilibrium().omega0,
        "gap_to_pvf_speed": abs(rep.angular_speed - n1_equilibrium().angular_speed)}


def c16_mixed_degree():
    eq, res, long, info = staggered_run()
    obs = detect_vortices(long.field)
    plus = sum(o.degree > 0 for o in obs)
    minus = sum(o.degree < 0 for o in obs)
    ok = plus == 2 and minus == 2 and len(obs) == 4
    return ok, {"plus": plus, "minus": minus}, {"plus": 2, "minus": 2}, {
        "relax_steps": res.steps, "extra_steps": long.steps, "omega_eps": long.omega,
        "positions": [[o.position.real, o.position.imag] for o in obs]}


CRITERIA = [
    (1, "pvf_conservation", c01_pvf_conservation),
    (2, "closed_form_speeds", c02_closed_form_speeds),
    (3, "staggered_criticality", c03_staggered_criticality),
    (4, "equilibrium_cross_validation", c04_cross_validation),
    (5, "assumption_a_audit", c05_assumption_a),
    (6, "bbh_energy_law", c06_bbh_energy),
    (7, "bbh_momentum_law", c07_bbh_momentum),
    (8, "symmetry_sector", c08_symmetry_sector),
    (9, "descent", c09_descent),
    (10, "maximum_principle", c10_maximum_principle),
    (11, "vortex_correspondence", c11_vortex_correspondence),
    (12, "jacobian_estimate", c12_jacobian),
    (13, "pohozaev", c13_pohozaev),
    (14, "vanishing_gradient", c14_vanishing_gradient),
    (15, "periodicity", c15_periodicity),
    (16, "mixed_degree_persistence", c16_mixed_degree),
]


def _selected(filt):
    if not filt:
        return CRITERIA
    keys = {s.strip() for s in str(filt).split(",")}
    return [c for c in CRITERIA if str(c[0]) in keys or c[1] in keys]


def run_criterion(cid):
    for i, name, fn in CRITERIA:
        if i == cid or name == cid:
            t0 = time.perf_counter()
            try:
                ok, val, tol, det = fn()
            except VortexLabError as exc:
                ok, val, tol, det = False, None, None, {"error": f"{type(exc).__name__}: {exc}"}
            return CriterionResult(i, name, bool(ok), val, tol, det, time.perf_counter() - t0)
    raise KeyError(cid)


def run_criteria(filt=None, **_):
    return [run_criterion(i) for i, _, _ in _selected(filt)]
