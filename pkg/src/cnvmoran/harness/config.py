"""Scenario configuration: one JSON document per run.

Example::

    {
      "experiment": "converge",
      "family": {"kind": "binomial-biased", "alpha": 0.0},
      "n_list": [50, 100, 200],
      "initial": {"kind": "iid-poisson", "z0": 1.0},
      "t_end": 1.0,
      "grid": {"step": 0.01},
      "replicates": 500,
      "master_seed": 20240601,
      "output_dir": "out/converge",
      "options": {"ks_repetitions": 9}
    }

``grid`` is either a list of times or ``{"step": h}`` (times h, 2h, ..., t_end).
Experiment-specific settings live in ``options``; unknown keys are rejected.
A file shared by several subcommands may add ``"per_experiment": {name: {...}}``,
whose entries replace top-level fields when that subcommand runs.
"""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..inheritance import KINDS, InheritanceFamily, load_custom_table, make_family

EXPERIMENTS = ("simulate", "converge", "verify-identities", "moments", "spectrum",
               "adjudicate-case2", "toy", "all-or-nothing")
INITIAL_KINDS = ("iid-poisson", "iid-negbin", "histogram", "fixed-point")
OUTPUT_ENV = "CNVMORAN_OUTPUT_DIR"

DEFAULT_OPTIONS = {
    "simulate": {"observers": ["phi", "rho2"]},
    "converge": {"tv_times": [0.25, 0.5, 1.0], "sde_paths": None, "sde_dt": 1e-4,
                 "ks_repetitions": 1, "ks_level": 0.01, "value_bins": 20,
                 "tv_threshold": None},
    "verify-identities": {"oracle_n": [20, 40, 80, 160], "oracle_states": 20,
                          "z_values": [0.5, 1.0, 3.0], "spectrum_n": [100, 1000, 10000]},
    "moments": {},
    "spectrum": {},
    "adjudicate-case2": {"qv_horizon": 0.05, "qv_step": 1e-3, "qv_replicates": 2000,
                         "qv_tolerance": 0.1, "repetitions": 9, "sde_paths": None,
                         "sde_dt": 1e-4, "control": True},
    "toy": {"x0": 0.0, "y0": 0.0},
    "all-or-nothing": {"count_at_zero": 0, "min_hits": None},
}

DEFAULTS = {
    "simulate": dict(family={"kind": "binomial-biased", "alpha": 0.0}, n_list=[100],
                     initial={"kind": "iid-poisson", "z0": 1.0}, t_end=1.0,
                     grid={"step": 0.01}, replicates=10),
    "converge": dict(family={"kind": "binomial-biased", "alpha": 0.0}, n_list=[50, 100, 200],
                     initial={"kind": "iid-poisson", "z0": 1.0}, t_end=1.0,
                     grid={"step": 0.01}, replicates=500),
    "verify-identities": dict(family={"kind": "binomial-biased", "alpha": 1.0}, n_list=[20],
                              initial={"kind": "iid-poisson", "z0": 1.0}, t_end=1.0,
                              grid={"step": 1.0}, replicates=1),
    "moments": dict(family={"kind": "binomial-biased", "alpha": 0.0}, n_list=[50],
                    initial={"kind": "iid-poisson", "z0": 1.0}, t_end=0.2,
                    grid=[0.05, 0.1, 0.2], replicates=2000),
    "spectrum": dict(family={"kind": "binomial-biased", "alpha": 0.0},
                     n_list=[100, 1000, 10000], initial={"kind": "iid-poisson", "z0": 1.0},
                     t_end=1.0, grid={"step": 1.0}, replicates=1),
    "adjudicate-case2": dict(family={"kind": "uniform", "alpha": 0.0}, n_list=[200],
                             initial={"kind": "fixed-point", "z0": 2.0}, t_end=1.0,
                             grid={"step": 0.01}, replicates=500),
    "toy": dict(family={"kind": "binomial-biased", "alpha": 0.0}, n_list=[100],
                initial={"kind": "iid-poisson", "z0": 0.0}, t_end=1.0,
                grid={"step": 0.01}, replicates=10000),
    "all-or-nothing": dict(family={"kind": "all-or-nothing", "alpha": 0.0}, n_list=[50],
                           initial={"kind": "iid-poisson", "z0": 0.0}, t_end=200.0,
                           grid={"step": 1.0}, replicates=100),
}


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


@dataclass
class ScenarioConfig:
    experiment: str
    family: dict
    n_list: list
    initial: dict
    t_end: float
    grid: list
    replicates: int
    master_seed: int
    output_dir: str
    options: dict = field(default_factory=dict)
    base_dir: str = "."

    def __post_init__(self):
        _validate(self)

    def build_family(self, n: int) -> InheritanceFamily:
        kind = self.family["kind"]
        table = None
        if kind == "custom-table":
            table = load_custom_table(Path(self.base_dir) / self.family["custom_table_path"])
        try:
            return make_family(kind, float(self.family.get("alpha", 0.0)), n, custom_probs=table)
        except ValueError as exc:
            raise ConfigError(f"family: {exc}") from exc

    def resolved(self) -> dict:
        """Plain-data view embedded in every report."""
        return {"experiment": self.experiment, "family": dict(self.family),
                "n_list": list(self.n_list), "initial": dict(self.initial),
                "t_end": self.t_end, "grid": list(self.grid), "replicates": self.replicates,
                "master_seed": self.master_seed, "options": copy.deepcopy(self.options)}


def _validate(cfg: ScenarioConfig) -> None:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; expected one of {EXPERIMENTS}")
    kind = cfg.family.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"family.kind must be one of {KINDS}, got {kind!r}")
    if kind == "custom-table" and not cfg.family.get("custom_table_path"):
        raise ConfigError("custom-table family needs custom_table_path")
    if not cfg.n_list or any(int(n) != n or n < 1 for n in cfg.n_list):
        raise ConfigError("n_list must be a non-empty list of positive integers")
    if any(b <= a for a, b in zip(cfg.n_list, cfg.n_list[1:])):
        raise ConfigError("n_list must be strictly increasing")
    if cfg.initial.get("kind") not in INITIAL_KINDS:
        raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}")
    if float(cfg.initial.get("z0", 0.0)) < 0:
        raise ConfigError("initial.z0 must be >= 0")
    if cfg.initial["kind"] == "histogram":
        hist = cfg.initial.get("histogram")
        if not hist or any(int(c) != c or c < 0 for c in hist):
            raise ConfigError("histogram initial spec needs nonnegative integer counts")
        if any(sum(hist) != n for n in cfg.n_list):
            raise ConfigError("histogram must sum to every N in n_list")
    if not cfg.t_end > 0:
        raise ConfigError("t_end must be > 0")
    if not cfg.grid or any(b <= a for a, b in zip(cfg.grid, cfg.grid[1:])):
        raise ConfigError("observation grid must be non-empty and strictly increasing")
    if cfg.grid[0] <= 0 or cfg.grid[-1] > cfg.t_end * (1 + 1e-12):
        raise ConfigError("observation grid must lie in (0, t_end]")
    if int(cfg.replicates) != cfg.replicates or cfg.replicates < 1:
        raise ConfigError("replicates must be an integer >= 1")
    if int(cfg.master_seed) != cfg.master_seed or not 0 <= cfg.master_seed < 2**64:
        raise ConfigError("master_seed must be an unsigned 64-bit integer")
    unknown = set(cfg.options) - set(DEFAULT_OPTIONS[cfg.experiment])
    if unknown:
        raise ConfigError(f"unknown options for {cfg.experiment}: {sorted(unknown)}")


def _resolve_grid(grid, t_end: float) -> list:
    if isinstance(grid, dict):
        if set(grid) != {"step"} or not float(grid["step"]) > 0:
            raise ConfigError("grid must be a list of times or {\"step\": h} with h > 0")
        h = float(grid["step"])
        n = int(np.floor(t_end / h + 1e-9))
        if n < 1:
            raise ConfigError("grid step exceeds t_end")
        # round to kill accumulated binary noise (0.1 * 3 -> 0.30000000000000004)
        return [float(np.round(h * i, 12)) for i in range(1, n + 1)]
    if not isinstance(grid, list):
        raise ConfigError("grid must be a list of times or {\"step\": h}")
    return [float(t) for t in grid]


def config_from_dict(data: dict, experiment: str | None = None, base_dir: str = ".",
                     seed: int | None = None, replicates: int | None = None,
                     output_dir: str | None = None) -> ScenarioConfig:
    """Fill defaults for ``experiment`` and apply command-line overrides.

    The output directory is taken from, in order: ``output_dir``, the
    environment variable CNVMORAN_OUTPUT_DIR, the document, ``out/<experiment>``.
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    exp = experiment or data.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; expected one of {EXPERIMENTS}")
    known = {"experiment", "family", "n_list", "initial", "t_end", "grid", "replicates",
             "master_seed", "output_dir", "options"}
    unknown = set(data) - known - {"per_experiment"}
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    per = data.get("per_experiment", {})
    if not isinstance(per, dict) or set(per) - set(EXPERIMENTS):
        raise ConfigError(f"per_experiment keys must be experiment names {EXPERIMENTS}")
    specific = per.get(exp, {})
    if set(specific) - known:
        raise ConfigError(f"unknown keys in per_experiment.{exp}: {sorted(set(specific) - known)}")
    data = {**{k: v for k, v in data.items() if k != "per_experiment"}, **specific}
    # top-level options belong to the file's own experiment
    if data.get("experiment", exp) != exp and "options" not in specific:
        data.pop("options", None)
    merged = copy.deepcopy(DEFAULTS[exp])
    merged.update({k: copy.deepcopy(v) for k, v in data.items() if k in known})
    opts = dict(data.get("options", {}))
    bad = set(opts) - set(DEFAULT_OPTIONS[exp])
    if bad:
        raise ConfigError(f"unknown options for {exp}: {sorted(bad)}")
    options = {**copy.deepcopy(DEFAULT_OPTIONS[exp]), **opts}
    out = output_dir or os.environ.get(OUTPUT_ENV) or merged.get("output_dir") or f"out/{exp}"
    try:
        family = dict(merged["family"])
        initial = dict(merged["initial"])
        t_end = float(merged["t_end"])
        cfg = ScenarioConfig(
            experiment=exp,
            family=family,
            n_list=[int(n) if float(n) == int(n) else float(n) for n in merged["n_list"]],
            initial=initial,
            t_end=t_end,
            grid=_resolve_grid(merged["grid"], t_end),
            replicates=int(replicates if replicates is not None else merged["replicates"]),
            master_seed=int(seed if seed is not None else merged.get("master_seed", 0)),
            output_dir=str(out),
            options=options,
            base_dir=str(base_dir),
        )
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    return cfg


def load_config(path, experiment: str | None = None, **overrides) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data, experiment, base_dir=str(path.parent), **overrides)
