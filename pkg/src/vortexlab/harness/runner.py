"""Pipelines: equilibrium -> initial data -> relaxation -> tracking -> reports."""
from __future__ import annotations

import hashlib
import json
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..equilibria import RingFamily, catalog, catalog_json, classify_equilibrium, solve_equilibrium
from ..errors import ConfigError, VortexLabError
from ..gl import functionals as F
from ..gl.bbh import bbh_initial_data
from ..gl.flow import constrained_relax, relax_to_critical
from ..gl.functionals import SolverParams
from ..gl.grid import PolarGrid
from ..pvf import VortexConfig, integrate_pvf, momentum_J0, polygon_config, renormalized_energy
from ..tracker import compare_to_pvf, detect_vortices, detections_to_config, pohozaev_residual
from ..tracker import vanishing_gradient_defects, write_detections_csv
from .config import ExperimentConfig


@dataclass
class RunArtifacts:
    out_dir: Path
    summary: dict
    files: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    failed_predicates: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failed_predicates


def output_root(default="lab_output"):
    return Path(os.environ.get("LAB_OUTPUT_DIR", default))


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)


def write_manifest(out_dir, config_dict, summary_name="summary.json"):
    out_dir = Path(out_dir)
    files = sorted(p for p in out_dir.rglob("*") if p.is_file() and p.name != "manifest.json")
    manifest = {"config": config_dict, "package_version": __version__,
                "numpy": np.__version__, "python": platform.python_version(),
                "files": [{"path": str(p.relative_to(out_dir)), "sha256": _sha256(p),
                           "bytes": p.stat().st_size} for p in files]}
    write_json(out_dir / "manifest.json", manifest)
    return manifest


def verify_manifest(out_dir):
    out_dir = Path(out_dir)
    with open(out_dir / "manifest.json") as fh:
        man = json.load(fh)
    listed = {f["path"]: f["sha256"] for f in man["files"]}
    actual = {str(p.relative_to(out_dir)) for p in out_dir.rglob("*") if p.is_file() and p.name != "manifest.json"}
    if set(listed) != actual:
        return False
    return all(_sha256(out_dir / p) == s for p, s in listed.items())


def check_acceptance(summary, acceptance):
    """Each acceptance entry is metric -> upper bound (or {"min": x} / {"max": x})."""
    failed = []
    for key, bound in acceptance.items():
        val = summary
        for part in key.split("."):
            val = val.get(part) if isinstance(val, dict) else None
        if val is None:
            failed.append({"metric": key, "reason": "missing"})
            continue
        lo = bound.get("min") if isinstance(bound, dict) else None
        hi = bound.get("max") if isinstance(bound, dict) else bound
        v = np.max(np.abs(val)) if isinstance(val, (list, tuple)) else val
        if (hi is not None and not v <= hi) or (lo is not None and not v >= lo):
            failed.append({"metric": key, "value": v, "bound": bound})
    return failed


# ------------------------------------------------------------------ building blocks

def equilibrium_from_physics(ph):
    fam = RingFamily(int(ph["k"]), tuple(tuple(r) for r in ph["rings"]))
    eq = solve_equilibrium(fam, ph["equilibrium"], float(ph["target"]))
    return eq


def gl_setup(eq, eps, numerics):
    """Grid, params, momentum target and initial data for an equilibrium at eps."""
    sym = bool(numerics.get("symmetric", True))
    k = eq.family.k
    Nr = numerics.get("Nr") or int(math.ceil(4 / eps)) + 40
    J = numerics.get("J_max") or int(math.ceil(3 / eps)) + 8
    if sym and k > 1:
        J = k * int(math.ceil(J / k))
    grid = PolarGrid.uniform(Nr, J, k_sym=k if (sym and k > 1) else 0)
    if eq.family.n != 0:
        pk, pm = k, eq.family.m
    else:
        pk, pm = 0, 1
    dt = numerics.get("dt") or 2 * eps ** 2
    params = SolverParams(omega=eq.omega0, k=pk, m=pm, dt=dt,
                          residual_tol=numerics.get("residual_tol", 1e-6),
                          max_steps=int(numerics.get("max_steps", 50000)), real_modes=sym)
    cfg = eq.config()
    field0 = bbh_initial_data(cfg, eps, grid, k_sym=k if sym else 0, check_resolution=False)
    p_target = np.pi / pm * momentum_J0(cfg)
    return grid, params, p_target, field0


def analyse_field(v, eq, params, omega):
    """Detections plus every diagnostic the suite reports for a relaxed field."""
    out = {"max_modulus": v.max_modulus(), "energy": F.energy_E(v),
           "momentum": F.momentum_J(v, params.k, params.m),
           "residual": F.elliptic_residual(v, params, omega), "omega": omega}
    obs = detect_vortices(v)
    out["detections"] = [o.to_dict() for o in obs]
    out["degrees_sum"] = int(sum(o.degree for o in obs))
    out["n_plus"] = int(sum(o.degree > 0 for o in obs))
    out["n_minus"] = int(sum(o.degree < 0 for o in obs))
    poh, terms = pohozaev_residual(v, params, omega)
    out["pohozaev"] = poh
    out["pohozaev_terms"] = terms
    h = float(np.max(np.diff(np.concatenate([[0.0], v.grid.r]))))
    out["h_max"] = h
    out["pohozaev_bound"] = pohozaev_bound(out["residual"], v.epsilon, h)
    if obs:
        cfg = detections_to_config(obs)
        out["vanishing_gradient"] = vanishing_gradient_defects(cfg, omega, params.m).tolist()
        try:
            rep = compare_to_pvf([obs], eq)
            out["deviation"] = rep.max_deviation
        except VortexLabError as exc:
            out["deviation"] = None
            out["tracking_error"] = str(exc)
        rings = sorted({round(r, 12) for r, _, _ in eq.family.rings})
        out["circle_deviation"] = float(max(min(abs(abs(o.position) - r) for r in rings) for o in obs))
    return out, obs


POHOZAEV_C_RES = 10.0
POHOZAEV_C_H = 10.0


def pohozaev_bound(residual, eps, h):
    """Calibrated bound: solver residual amplified by 1/eps plus O(h^2/eps) truncation."""
    return POHOZAEV_C_RES * residual / eps + POHOZAEV_C_H * h * h / eps


def relax_equilibrium(eq, eps, numerics, constrained=True):
    grid, params, p_target, f0 = gl_setup(eq, eps, numerics)
    t0 = time.perf_counter()
    if constrained:
        res = constrained_relax(f0, p_target, params)
        omega = res.omega
    else:
        res = relax_to_critical(f0, params)
        omega = params.omega
    info, obs = analyse_field(res.field, eq, params, omega)
    info.update({"epsilon": eps, "steps": res.steps, "converged": res.converged,
                 "max_action_increase": res.max_action_increase(), "p_target": p_target,
                 "momentum_drift": res.momentum_drift, "seconds": time.perf_counter() - t0,
                 "grid": grid.describe()})
    return res, params, info, obs


# ------------------------------------------------------------------ modes

def _pvf_run(cfg, out):
    ph = cfg.physics
    if "polygon" in ph:
        conf = polygon_config(int(ph["polygon"]["n"]), float(ph["polygon"]["rho"]))
    else:
        conf = VortexConfig([complex(*p) for p in ph["positions"]], ph["degrees"])
    dt = cfg.numerics.get("dt") or 1e-3
    traj = integrate_pvf(conf, float(ph["t_end"]), dt)
    if cfg.outputs.get("trajectory", True):
        traj.write_csv(out / "trajectory.csv")
    dW, dJ = traj.drift()
    return {"drift_W": dW, "drift_J0": dJ, "aborted": traj.aborted, "steps": len(traj.times) - 1,
            "W0": renormalized_energy(conf), "J0": momentum_J0(conf)}


def _eq_find(cfg, out):
    eq = equilibrium_from_physics(cfg.physics)
    classify_equilibrium(eq)
    with open(out / "catalog.json", "w") as fh:
        fh.write(catalog_json([eq]))
    return {"residual": eq.residual, "grad_H": eq.grad_H, "omega0": eq.omega0, "period": eq.period,
            "radii": [r for r, _, _ in eq.family.rings]}


def _gl(cfg, out, constrained):
    eq = equilibrium_from_physics(cfg.physics)
    eps = float(cfg.numerics["epsilon"])
    res, params, info, obs = relax_equilibrium(eq, eps, cfg.numerics, constrained)
    if cfg.outputs.get("snapshot", True):
        res.field.save(out / "field.bin")
    if cfg.outputs.get("raster", False):
        res.field.export_raster_csv(out / "raster.csv")
    write_detections_csv(out / "detections.csv", [(0.0, obs)])
    np.savetxt(out / "action_history.csv", res.action_history, header="action", comments="")
    info["omega0_pvf"] = eq.omega0
    return info


def _monotone_decreasing(xs):
    xs = [x for x in xs if x is not None]
    return len(xs) >= 2 and all(b < a for a, b in zip(xs, xs[1:]))


def sweep_epsilon(cfg, out_dir=None, threads=1):
    """Per-eps relaxation and tracking with trend verdicts."""
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    if cfg.mode != "epsilon_sweep":
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "mode": "epsilon_sweep"})
    return run_experiment(cfg, out_dir, threads=threads)


def _sweep(cfg, out, threads=1):
    eq = equilibrium_from_physics(cfg.physics)
    eps_list = [float(e) for e in cfg.numerics["epsilon_list"]]
    constrained = cfg.physics.get("constrained", True)
    # energy-law reference configuration (second config shifted radially)
    cfgp = eq.config()
    shift = float(cfg.physics.get("energy_shift", 0.9))
    cfgq = VortexConfig(cfgp.positions * shift, cfgp.degrees)

    def one(eps):
        row = {"epsilon": eps}
        try:
            res, params, info, obs = relax_equilibrium(eq, eps, cfg.numerics, constrained)
            row.update(info)
            sub = out / f"eps_{eps:g}"
            sub.mkdir(exist_ok=True)
            write_detections_csv(sub / "detections.csv", [(0.0, obs)])
            g, _, _, fp = gl_setup(eq, eps, cfg.numerics)
            fq = bbh_initial_data(cfgq, eps, g, k_sym=fp.k_sym, check_resolution=False)
            dE = F.energy_E(fp) - F.energy_E(fq)
            dW = renormalized_energy(cfgp) - renormalized_energy(cfgq)
            row["energy_gap"] = abs(dE - dW)
            row["momentum_gap"] = abs(F.momentum_J(fp, params.k, params.m)
                                      - np.pi / params.m * momentum_J0(cfgp))
            row["vg_max"] = max(row.get("vanishing_gradient") or [np.nan])
        except VortexLabError as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(one, eps_list))
    else:
        rows = [one(e) for e in eps_list]
    with open(out / "trend.csv", "w") as fh:
        cols = ["epsilon", "energy_gap", "momentum_gap", "circle_deviation", "vg_max", "residual",
                "max_modulus", "pohozaev", "steps"]
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join("" if r.get(c) is None else repr(float(r[c])) for c in cols) + "\n")
    verdicts = {key: _monotone_decreasing([r.get(key) for r in rows])
                for key in ("energy_gap", "momentum_gap", "circle_deviation", "vg_max")}
    return {"rows": rows, "trends": verdicts, "failures": [r for r in rows if "error" in r]}


def _verify(cfg, out, threads=1):
    from .criteria import run_criteria
    results = run_criteria(cfg.physics.get("filter"))
    matrix = [r.to_dict() for r in results]
    write_json(out / "verify_matrix.json", matrix)
    return {"criteria": matrix, "passed": sum(r.passed for r in results), "total": len(results),
            "all_passed": all(r.passed for r in results)}


def run_experiment(config, out_dir=None, threads=1):
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    config.validate()
    out = Path(out_dir) if out_dir else output_root() / config.name
    out.mkdir(parents=True, exist_ok=True)
    try:
        if config.mode == "pvf_run":
            summary = _pvf_run(config, out)
        elif config.mode == "eq_find":
            summary = _eq_find(config, out)
        elif config.mode == "gl_relax":
            summary = _gl(config, out, constrained=False)
        elif config.mode == "gl_constrained":
            summary = _gl(config, out, constrained=True)
        elif config.mode == "epsilon_sweep":
            summary = _sweep(config, out, threads)
        elif config.mode == "verify_suite":
            summary = _verify(config, out, threads)
        else:
            raise ConfigError("unknown mode", ["mode"])
    except VortexLabError as exc:
        mod = type(exc).__module__
        summary = {"error": f"{type(exc).__name__}: {exc}", "module": mod}
    failed = check_acceptance(summary, config.acceptance)
    if "error" in summary:
        failed.append({"metric": "error", "reason": summary["error"]})
    if config.mode == "verify_suite" and not summary.get("all_passed", False):
        failed.append({"metric": "criteria", "reason": "one or more criteria failed"})
    summary_out = {"mode": config.mode, "summary": summary, "acceptance_failures": failed}
    write_json(out / "summary.json", summary_out)
    manifest = write_manifest(out, config.to_dict())
    files = [f["path"] for f in manifest["files"]]
    return RunArtifacts(out, summary, files, manifest, failed)


def catalog_text():
    eqs, fails = catalog()
    return catalog_json(eqs, fails)
