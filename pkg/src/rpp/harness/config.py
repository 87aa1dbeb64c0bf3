"""Experiment configuration: JSON files, defaults, validation and hashing."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import jsonschema

from ..errors import DomainError

SCHEMA_VERSION = 1

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "experiment": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
        "params": {"type": "object"},
    },
    "additionalProperties": False,
}

EPS_SCHEDULE = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "identity-suite": {"n_random": 50, "h": 1 / 256},
    "constants": {"d": 3, "p": 1.5, "theta": 1.0, "kappa": 0.5},
    "field-suite": {"n_fields": 100000, "chunk": 4096},
    "potential-suite": {"p": 0.75, "R": 20.0},
    "fk-suite": {"confinement_paths": 100000, "confinement_t": [2.0, 4.0], "r": 1.0,
                 "p": 0.75, "theta": 0.5, "t": 1.0, "dt": 1 / 64, "R": 20.0,
                 "n_pairs": 4000, "n_reduced": 1000},
    "fk-bounds": {"n_potentials": 20, "n_paths": 10000, "t": 1.0, "delta": 0.5, "alpha": 2.0,
                  "dt": 1 / 256, "h": 1 / 256},
    "ldp-mgf": {"cases": [[3, 2.0, 1.0, 1.0], [2, 1.5, 2.0, 0.5]], "eps": EPS_SCHEDULE},
    "ldp-count": {"d": 3, "p": 1.5, "gamma": 1.0, "eps": EPS_SCHEDULE},
    "ldp-zeta": {"p": 0.75, "gamma": 0.2, "eps": [0.9, 0.7, 0.5, 0.3], "n_fields": 2000,
                 "R": 20.0, "n_dict": 32},
    "maxcount-table": {"t": [1e2, 1e3, 1e4, 1e6, 1e9], "delta": 0.5, "d": 1,
                       "mc_cells": 1000000, "mc_reps": 100},
    "report": {"manifest": ""},
}


class ConfigError(DomainError):
    """A configuration file or parameter set is malformed or out of range."""


def _num(name: str, lo=None, hi=None, integer=False, lo_open=True, hi_open=True):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and int(v) != v):
            raise ConfigError(f"params.{name}: expected {'an integer' if integer else 'a number'}, got {v!r}")
        if not math.isfinite(v):
            raise ConfigError(f"params.{name}: must be finite")
        if lo is not None and (v <= lo if lo_open else v < lo):
            raise ConfigError(f"params.{name}: must be {'>' if lo_open else '>='} {lo}, got {v}")
        if hi is not None and (v >= hi if hi_open else v > hi):
            raise ConfigError(f"params.{name}: must be {'<' if hi_open else '<='} {hi}, got {v}")
    return check


def _eps_list(name: str):
    def check(v):
        if not isinstance(v, list) or not v:
            raise ConfigError(f"params.{name}: expected a nonempty list")
        for x in v:
            _num(name, 0, 1)(x)
        if any(b >= a for a, b in zip(v[:-1], v[1:])):
            raise ConfigError(f"params.{name}: must be strictly decreasing")
    return check


def _pos_list(name: str, lo: float = 0.0):
    def check(v):
        if not isinstance(v, list) or not v:
            raise ConfigError(f"params.{name}: expected a nonempty list")
        for x in v:
            _num(name, lo)(x)
    return check


def _riesz(d, p, where="params"):
    if not (d / 2 < p < d):
        raise ConfigError(f"{where}: p must satisfy d/2 < p < d (renormalized potential finite), "
                          f"got d={d}, p={p}")


def _sub2(d, p, where="params"):
    if not (0 < p < min(2, d)):
        raise ConfigError(f"{where}: p must satisfy 0 < p < min(2, d) (interpolation constant "
                          f"finite), got d={d}, p={p}")


def _check_constants(pr):
    _num("d", 0, integer=True)(pr["d"])
    _num("p")(pr["p"])
    _sub2(pr["d"], pr["p"])
    _num("theta", 0)(pr["theta"])
    _num("kappa", 0)(pr["kappa"])


def _check_fk_suite(pr):
    _riesz(1, pr["p"])
    for k in ("theta", "t", "dt", "R", "r"):
        _num(k, 0)(pr[k])
    _pos_list("confinement_t")(pr["confinement_t"])
    for k in ("confinement_paths", "n_pairs", "n_reduced"):
        _num(k, 1, integer=True)(pr[k])
    if pr["dt"] > pr["t"]:
        raise ConfigError("params.dt: must not exceed t")
    n = round(pr["t"] / pr["dt"])
    if abs(n * pr["dt"] - pr["t"]) > 1e-9 * pr["t"]:
        raise ConfigError(f"params.dt: t = {pr['t']} must be an integer multiple of dt = {pr['dt']}")


def _check_fk_bounds(pr):
    _num("n_potentials", 0, integer=True)(pr["n_potentials"])
    _num("n_paths", 1, integer=True)(pr["n_paths"])
    _num("t", 0)(pr["t"])
    _num("delta", 0, pr["t"])(pr["delta"])
    _num("alpha", 1)(pr["alpha"])
    _num("dt", 0, pr["t"], hi_open=False)(pr["dt"])
    _num("h", 0, 1)(pr["h"])


def _check_ldp_mgf(pr):
    cases = pr["cases"]
    if not isinstance(cases, list) or not cases:
        raise ConfigError("params.cases: expected a nonempty list of [d, p, a, theta]")
    for i, c in enumerate(cases):
        if not (isinstance(c, list) and len(c) == 4):
            raise ConfigError(f"params.cases[{i}]: expected [d, p, a, theta]")
        _num(f"cases[{i}].d", 0, integer=True)(c[0])
        _riesz(c[0], c[1], f"params.cases[{i}]")
        _num(f"cases[{i}].a", 0)(c[2])
        _num(f"cases[{i}].theta", 0, lo_open=False)(c[3])
    _eps_list("eps")(pr["eps"])


def _check_ldp_count(pr):
    _num("d", 0, integer=True)(pr["d"])
    _sub2(pr["d"], pr["p"])
    _num("gamma", 0)(pr["gamma"])
    _eps_list("eps")(pr["eps"])


def _check_ldp_zeta(pr):
    if not 0.5 < pr["p"] < 1:
        raise ConfigError("params.p: the zeta experiment runs in d = 1 and needs 1/2 < p < 1")
    _num("gamma", 0)(pr["gamma"])
    _eps_list("eps")(pr["eps"])
    _num("n_fields", 1, integer=True)(pr["n_fields"])
    _num("R", 0)(pr["R"])
    _num("n_dict", 0, integer=True)(pr["n_dict"])


def _check_maxcount(pr):
    _pos_list("t", math.e)(pr["t"])
    _num("delta", 0)(pr["delta"])
    _num("d", 0, integer=True)(pr["d"])
    _num("mc_cells", 0, integer=True)(pr["mc_cells"])
    _num("mc_reps", 1, integer=True)(pr["mc_reps"])


def _check_counts(*keys):
    def check(pr):
        for k in keys:
            _num(k, 0, integer=True)(pr[k])
    return check


def _check_potential(pr):
    _riesz(1, pr["p"])
    _num("R", 0)(pr["R"])


def _check_identity(pr):
    _num("n_random", 0, integer=True)(pr["n_random"])
    _num("h", 0, 1)(pr["h"])


VALIDATORS: Dict[str, Callable[[dict], None]] = {
    "identity-suite": _check_identity,
    "constants": _check_constants,
    "field-suite": _check_counts("n_fields", "chunk"),
    "potential-suite": _check_potential,
    "fk-suite": _check_fk_suite,
    "fk-bounds": _check_fk_bounds,
    "ldp-mgf": _check_ldp_mgf,
    "ldp-count": _check_ldp_count,
    "ldp-zeta": _check_ldp_zeta,
    "maxcount-table": _check_maxcount,
    "report": lambda pr: None,
}

EXPERIMENTS = tuple(DEFAULTS)


@dataclass
class ExperimentConfig:
    experiment: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    out: str = "out"
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in DEFAULTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; available: {', '.join(EXPERIMENTS)}")
        unknown = sorted(set(self.params) - set(DEFAULTS[self.experiment]))
        if unknown:
            raise ConfigError(f"params.{unknown[0]}: unknown parameter for {self.experiment}; "
                              f"allowed: {', '.join(sorted(DEFAULTS[self.experiment]))}")
        merged = copy.deepcopy(DEFAULTS[self.experiment])
        merged.update(self.params)
        self.params = merged
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed: expected a nonnegative integer, got {self.seed!r}")
        if isinstance(self.threads, bool) or not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigError(f"threads: expected a positive integer, got {self.threads!r}")
        VALIDATORS[self.experiment](self.params)

    def semantic(self) -> dict:
        """Fields that change results (output location and thread count excluded)."""
        return {"schema": SCHEMA_VERSION, "experiment": self.experiment, "seed": self.seed,
                "params": self.params}

    def hash(self) -> str:
        return config_hash(self.semantic())

    def to_dict(self) -> dict:
        d = self.semantic()
        d.update(out=self.out, threads=self.threads)
        return d


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def parse_config_text(text: str, source: str = "<config>") -> dict:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(x) for x in exc.absolute_path) or "<root>"
        raise ConfigError(f"{source}: field {where}: {exc.message}") from None
    return raw


def load_config(path: Optional[str], experiment: Optional[str] = None, seed: Optional[int] = None,
                out: Optional[str] = None, threads: Optional[int] = None) -> ExperimentConfig:
    """Read a JSON config (optional) and apply command-line overrides."""
    raw: dict = {}
    if path:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        raw = parse_config_text(text, path)
    name = experiment or raw.get("experiment")
    if name is None:
        raise ConfigError("no experiment given")
    if experiment and raw.get("experiment") not in (None, experiment):
        raise ConfigError(f"config names experiment {raw['experiment']!r} but {experiment!r} was requested")
    return ExperimentConfig(
        name, dict(raw.get("params", {})),
        seed if seed is not None else raw.get("seed", 0),
        out if out is not None else raw.get("out", "out"),
        threads if threads is not None else raw.get("threads", 1),
    )
