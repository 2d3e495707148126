"""Experiment configuration: defaults, validation, hashing and output files.

An experiment file is TOML::

    seed = 7
    group = "H1"                 # preset name, path to a group file, or a table
    [set]
    kind = "half_space"
    normal = [1.0, 0.0, 0.0]
    [window]
    lo = [-1.0, -1.0, -1.0]
    hi = [1.0, 1.0, 1.0]
    [sampler]
    count = 10000
    h = 0.01

Missing keys are filled from ``DEFAULTS`` and the completed mapping is what
gets hashed and written next to every result.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from ._toml import load_toml
from .errors import ConfigError
from .lie_core import CarnotGroup, group_from_mapping, load_group

DEFAULTS = {
    "group": "H1",
    "seed": None,
    "set": {"kind": "half_space", "normal": None, "offset": 0.0},
    "window": {"lo": None, "hi": None},
    "sampler": {"count": 10000, "h": 0.01, "min_run": None, "T": None, "chunk": 2048},
    "monotone": {"noise": 0.01, "max_fraction": 0.01},
    "perimeter": {
        "mode": "estimate",
        "lam": 2.0,
        "n_sigma": 3.0,
        "perturbations": [],
        "random_perturbations": 0,
        "perturbation_radii": [0.1, 0.3],
    },
    "density": {
        "mode": "volume",
        "radii": [0.8, 0.4, 0.2, 0.1, 0.05, 0.025, 0.0125],
        "samples": 100000,
        "eps": 0.05,
        "r_min": 0.0,
        "point": None,
        "box": None,
        "grid_step": 0.2,
        "expected_slope_tolerance": 0.1,
    },
    "gamma": {"mode": "rank", "p": 2, "direction": None, "directions": 100, "p_max": 8,
              "step": 1e-5, "rtol": 1e-7},
}

STOCHASTIC = {"monotone-check", "perimeter", "density"}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "set":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    data = load_toml(path) if path is not None else {}
    if overrides:
        data = _merge(data, {k: v for k, v in overrides.items() if v is not None})
    unknown = set(data) - set(DEFAULTS) - {"experiment"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return _merge(DEFAULTS, data)


def resolve_group(cfg: dict, base_dir=None) -> CarnotGroup:
    defn = cfg["group"]
    if isinstance(defn, dict):
        return group_from_mapping(defn)
    path = Path(str(defn))
    if base_dir is not None and not path.is_absolute() and (Path(base_dir) / path).exists():
        path = Path(base_dir) / path
    return load_group(path if path.exists() else defn)


def complete_for_group(cfg: dict, g: CarnotGroup) -> dict:
    """Fill group-dependent defaults (window cube, normal e_1, density box)."""
    cfg = copy.deepcopy(cfg)
    w = cfg["window"]
    if w["lo"] is None:
        w["lo"] = [-1.0] * g.n
    if w["hi"] is None:
        w["hi"] = [1.0] * g.n
    if cfg["set"].get("kind") == "half_space" and cfg["set"].get("normal") is None:
        cfg["set"]["normal"] = [1.0] + [0.0] * (g.n - 1)
    d = cfg["density"]
    if d["point"] is None:
        d["point"] = [0.0] * g.n
    if d["box"] is None:
        d["box"] = {"lo": [-1.0] * g.n, "hi": [1.0] * g.n}
    if cfg["gamma"]["direction"] is None:
        cfg["gamma"]["direction"] = [1.0] + [0.0] * (g.r - 1)
    if cfg["sampler"]["min_run"] is None:
        cfg["sampler"]["min_run"] = 4 * cfg["sampler"]["h"]
    for key in ("lo", "hi"):
        if len(w[key]) != g.n:
            raise ConfigError(f"window.{key} must have length {g.n}")
    return cfg


def require_seed(cfg: dict, command: str):
    if command in STOCHASTIC and cfg.get("seed") is None:
        raise ConfigError(f"'{command}' is stochastic and needs an explicit seed (config 'seed' or --seed)")
    if cfg.get("seed") is not None and not (isinstance(cfg["seed"], int) and 0 <= cfg["seed"] < 2 ** 64):
        raise ConfigError("seed must be an integer in [0, 2**64)")


def config_hash(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def write_outputs(out_dir, name: str, cfg: dict, summary: dict, csv_rows=None) -> dict:
    """Write ``<name>.json`` (and ``<name>.csv`` when rows are given).

    Both carry the config hash and seed; the JSON also embeds the complete
    configuration.  Keys are sorted and no timestamps are written, so
    reruns are byte-identical.
    """
    h = config_hash(cfg)
    doc = {"config": cfg, "config_hash": h, "seed": cfg.get("seed"), "result": summary}
    paths = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        p = out / f"{name}.json"
        p.write_text(json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n", encoding="utf-8")
        paths["json"] = str(p)
        if csv_rows is not None:
            header, rows = csv_rows
            p = out / f"{name}.csv"
            with open(p, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(list(header) + ["config_hash", "seed"])
                for row in rows:
                    w.writerow(list(row) + [h, cfg.get("seed")])
            paths["csv"] = str(p)
    return {"doc": doc, "paths": paths}


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, default=_json_default)
