"""Experiment configuration: JSON with an explicit schema version.

Lengths are fractions of the unit disc radius; times are PVF time units.

Example::

    {"schema_version": 1, "mode": "gl_constrained",
     "physics": {"k": 1, "rings": [[0.5, 0.0, 1]], "equilibrium": "single_ring_from_momentum",
                 "target": -0.125},
     "numerics": {"Nr": 200, "J_max": 64, "epsilon": 0.05, "dt": 0.0025, "residual_tol": 1e-6},
     "outputs": {"snapshot": true},
     "acceptance": {"residual": 1e-6}}
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

from ..errors import ConfigError

SCHEMA_VERSION = 1
MODES = ("pvf_run", "eq_find", "gl_relax", "gl_constrained", "epsilon_sweep", "verify_suite")
EQ_MODES = ("single_ring_from_momentum", "aligned_multiring", "staggered_pair")

DEFAULT_NUMERICS = {
    "dt": None,              # GL: eps^2 when None; PVF: 1e-3
    "Nr": None,              # GL: ceil(4/eps) + 40 when None
    "J_max": None,           # GL: ceil(3/eps) + 8 when None
    "residual_tol": 1e-6,
    "max_steps": 50000,
    "symmetric": True,       # store only the k-fold sector and impose real modes
}


@dataclass
class ExperimentConfig:
    mode: str
    physics: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    acceptance: dict = field(default_factory=dict)
    name: str = "run"
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, d):
        d = copy.deepcopy(d)
        bad = []
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object", ["<root>"])
        if d.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            bad.append("schema_version")
        known = {"mode", "physics", "numerics", "outputs", "acceptance", "name", "schema_version"}
        bad += [f"unknown field {x}" for x in d if x not in known]
        if bad:
            raise ConfigError("invalid config: " + ", ".join(bad), bad)
        num = dict(DEFAULT_NUMERICS)
        num.update(d.get("numerics", {}))
        cfg = cls(mode=d.get("mode"), physics=d.get("physics", {}), numerics=num,
                  outputs=d.get("outputs", {}), acceptance=d.get("acceptance", {}),
                  name=d.get("name", "run"))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {"schema_version": self.schema_version, "name": self.name, "mode": self.mode,
                "physics": self.physics, "numerics": self.numerics, "outputs": self.outputs,
                "acceptance": self.acceptance}

    def validate(self):
        bad = []
        ph, nu = self.physics, self.numerics
        if self.mode not in MODES:
            bad.append("mode")
        k = ph.get("k")
        if k is not None and (not isinstance(k, int) or k < 0):
            bad.append("physics.k")
        if k and "n" in ph and "m" in ph and ph["n"] != k * ph["m"]:
            bad.append("physics.n (must equal k*m)")
        if self.mode == "pvf_run":
            if "positions" not in ph and "polygon" not in ph:
                bad.append("physics.positions or physics.polygon")
            if "positions" in ph and len(ph.get("degrees", [])) != len(ph["positions"]):
                bad.append("physics.degrees")
            if ph.get("t_end", 0) <= 0:
                bad.append("physics.t_end")
        if self.mode in ("eq_find", "gl_relax", "gl_constrained", "epsilon_sweep"):
            if ph.get("equilibrium") not in EQ_MODES:
                bad.append("physics.equilibrium")
            if not ph.get("rings"):
                bad.append("physics.rings")
            if "target" not in ph:
                bad.append("physics.target")
            if not k:
                bad.append("physics.k")
        if self.mode in ("gl_relax", "gl_constrained"):
            eps = nu.get("epsilon")
            if not isinstance(eps, (int, float)) or eps <= 0:
                bad.append("numerics.epsilon")
        if self.mode == "epsilon_sweep":
            el = nu.get("epsilon_list")
            if not el or len(el) < 3:
                bad.append("numerics.epsilon_list (need >= 3 entries)")
            elif any(b >= a for a, b in zip(el, el[1:])) or min(el) <= 0:
                bad.append("numerics.epsilon_list (must be strictly decreasing and positive)")
        if nu.get("dt") is not None and nu["dt"] <= 0:
            bad.append("numerics.dt")
        if not isinstance(self.acceptance, dict):
            bad.append("acceptance")
        if bad:
            raise ConfigError("invalid config: " + ", ".join(bad), bad)
        return self
