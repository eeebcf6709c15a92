"""Run configuration: YAML file, environment, and CLI-flag layering.

Precedence, highest first: command-line flags, environment variables
(BRANCHPROB_SEED, BRANCHPROB_THREADS), the YAML file, built-in defaults.
Unknown keys are rejected with their full path so typos surface early.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from pathlib import Path

import yaml

ENV_SEED = "BRANCHPROB_SEED"
ENV_THREADS = "BRANCHPROB_THREADS"

# preset benchmark measurement counts per grid order, by model
PRESET_M = {
    "bds": {128: 25, 256: 33, 512: 45, 1024: 68, 2048: 101, 4096: 150},
    "hsc": {128: 43, 256: 65, 512: 99, 1024: 147, 2048: 217, 4096: 322},
}

DEFAULTS = {
    "model": {"name": "hsc", "rates": {}},
    "time": None,                 # None -> model default horizon
    "query": {"j": 1, "k": 0, "n": 64, "m": None},
    "solver": {
        "lam": None,              # None -> model rule (sqrt(log m) / log m)
        "step_init": 5e-6,
        "shrink": 0.5,
        "step_cap": 1.0,
        "warm_start": True,
        "prox_at_momentum": True,
        "max_iters": 5000,
        "stop_tol": 1e-8,
    },
    "ode": {"abs_tol": 1e-10, "rel_tol": 1e-8},
    "oracle": {"cap": 64, "reps": 100_000, "sink_bound": 1e-8},
    "bench": {
        "n_list": [128],
        "m_table": None,          # None -> preset table for the model
        "trials": 10,
        "rho_occ": 0.5,
        "use_symmetry": False,    # flat n^2 baseline counts for the report
    },
    "seed": 0,
    "threads": 1,
    "output": {"directory": "out", "figures": True},
}


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Layer defaults, an optional YAML file, env vars, and overrides."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        text = Path(path).read_text()
        data = yaml.safe_load(text)
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ValueError(f"{path}: top level must be a mapping")
        _merge(cfg, data, source=str(path))
    if os.environ.get(ENV_SEED):
        cfg["seed"] = int(os.environ[ENV_SEED])
    if os.environ.get(ENV_THREADS):
        cfg["threads"] = int(os.environ[ENV_THREADS])
    if overrides:
        _merge(cfg, overrides, source="overrides", allow_new=True)
    _validate(cfg)
    return cfg


def config_hash(cfg: dict) -> str:
    """Stable short digest of a configuration for report metadata."""
    canon = json.dumps(cfg, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _merge(dst: dict, src: dict, source: str, prefix: str = "",
           allow_new: bool = False) -> None:
    for key, value in src.items():
        path = f"{prefix}{key}"
        if key not in dst:
            if allow_new:
                dst[key] = value
                continue
            raise ValueError(f"{source}: unknown configuration key {path!r}")
        if isinstance(dst[key], dict) and isinstance(value, dict):
            _merge(dst[key], value, source, prefix=f"{path}.",
                   allow_new=allow_new or key in ("rates", "m_table"))
        else:
            dst[key] = value


def _validate(cfg: dict) -> None:
    name = cfg["model"]["name"]
    if name not in ("hsc", "bds"):
        raise ValueError(f"model.name must be 'hsc' or 'bds', got {name!r}")
    if cfg["time"] is not None and cfg["time"] < 0:
        raise ValueError("time must be >= 0")
    q = cfg["query"]
    if q["j"] < 0 or q["k"] < 0:
        raise ValueError("query.j and query.k must be >= 0")
    if q["n"] < 1:
        raise ValueError("query.n must be >= 1")
    b = cfg["bench"]
    if b["trials"] < 1:
        raise ValueError("bench.trials must be >= 1")
    if not 0 < b["rho_occ"] <= 1:
        raise ValueError("bench.rho_occ must lie in (0, 1]")
    if cfg["threads"] < 1:
        raise ValueError("threads must be >= 1")


def bench_m_for(cfg: dict, n: int) -> int:
    """Measurement count for grid order n: explicit table, else the preset."""
    table = cfg["bench"]["m_table"]
    if table is not None:
        if n in table:
            return int(table[n])
        # YAML keys may arrive as strings
        if str(n) in table:
            return int(table[str(n)])
        raise ValueError(f"bench.m_table has no entry for n = {n}")
    preset = PRESET_M[cfg["model"]["name"]]
    if n not in preset:
        raise ValueError(
            f"no preset measurement count for n = {n}; supply "
            f"bench.m_table (preset orders: {sorted(preset)})")
    return preset[n]
