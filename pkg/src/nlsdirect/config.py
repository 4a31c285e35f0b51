"""Run configuration: JSON schema, defaults, presets and validation.

Schema (every field optional; defaults shown by `default_config()`):

    {
      "potential": {"model": "zero" | "soliton" | "multisoliton" | "table",
                    "params": {...}, "path": "table.txt"},
      "L": 15.0, "nx": 1200, "truncation_tol": 1e-12,
      "pencil": {"N": null, "stride": null, "order": null, "order_tol": 1e-8,
                 "cluster_eps": 1e-6, "match_tol": 1e-6},
      "lambda_grid": {"min": -5.0, "max": 5.0, "count": 201},
      "emit": {"kernels": false, "omega": true, "spectral": true, "scattering": true},
      "convergence": {"n_list": [300, 600, 900, 1200], "reference": "test2"},
      "out": "out"
    }

Soliton params: {"c", "a", "p"}. Multisoliton params: {"A", "b", "c",
"branch"}, where each array entry may be a number or {"re", "im"}.
"""
from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np

from .pencil import DEFAULT_CLUSTER_EPS, DEFAULT_ORDER_TOL
from .potential import DEFAULT_TRUNCATION_TOL, MultisolitonParams, SolitonParams


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def default_config() -> dict:
    return {
        "potential": {"model": "zero", "params": {}, "path": None},
        "L": 15.0,
        "nx": 1200,
        "truncation_tol": DEFAULT_TRUNCATION_TOL,
        "pencil": {
            "N": None,
            "stride": None,
            "order": None,
            "order_tol": DEFAULT_ORDER_TOL,
            "cluster_eps": DEFAULT_CLUSTER_EPS,
            "match_tol": 1e-6,
        },
        "lambda_grid": {"min": -5.0, "max": 5.0, "count": 201},
        "emit": {"kernels": False, "omega": True, "spectral": True, "scattering": True},
        "convergence": {"n_list": [300, 600, 900, 1200], "reference": "test2"},
        "out": "out",
    }


PRESETS = {
    "zero": {"model": "zero", "params": {}},
    "test1": {"model": "soliton", "params": {"c": 2.0, "a": 1.0, "p": 1.0}},
    "test2": {
        "model": "multisoliton",
        "params": {
            "A": [[1.0, 0, 0, 0], [0, 2.0, 0, 0], [0, 0, 3.0, 0], [0, 0, 0, 4.0]],
            "b": [1.0, 2.0, -2.0, -1.0],
            "c": [2.0, 1.0, 1.0, 2.0],
            "branch": "analytic",
        },
    },
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults, then the JSON file, then overrides; validated and resolved."""
    cfg = default_config()
    if path is not None:
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        preset = doc.pop("preset", None)
        if preset is not None:
            cfg = _merge(cfg, {"potential": preset_potential(preset)})
        table = doc.get("potential", {}).get("path")
        if table is not None and not Path(table).is_absolute():
            doc["potential"]["path"] = str(path.parent / table)
        cfg = _merge(cfg, doc)
    if overrides:
        cfg = _merge(cfg, overrides)
    validate(cfg)
    return cfg


def preset_potential(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])


def _positive(x, what):
    try:
        ok = float(x) > 0
    except (TypeError, ValueError):
        ok = False
    if not ok:
        raise ConfigError(f"{what} must be a positive number, got {x!r}")


def _posint(x, what, minimum=1):
    if not (isinstance(x, int) and not isinstance(x, bool) and x >= minimum):
        raise ConfigError(f"{what} must be an integer >= {minimum}, got {x!r}")


def validate(cfg: dict) -> None:
    _posint(cfg["nx"], "nx", 2)
    _positive(cfg["L"], "L")
    _positive(cfg["truncation_tol"], "truncation_tol")
    pc = cfg["pencil"]
    for key in ("order_tol", "cluster_eps", "match_tol"):
        _positive(pc[key], f"pencil.{key}")
    for key, lo in (("N", 2), ("stride", 1), ("order", 1)):
        if pc[key] is not None:
            _posint(pc[key], f"pencil.{key}", lo)
    lg = cfg["lambda_grid"]
    _posint(lg["count"], "lambda_grid.count")
    if lg["count"] > 1 and not float(lg["max"]) > float(lg["min"]):
        raise ConfigError("lambda_grid.max must exceed lambda_grid.min")
    nl = cfg["convergence"]["n_list"]
    if not isinstance(nl, list) or not nl:
        raise ConfigError("convergence.n_list must be a non-empty list")
    for n in nl:
        _posint(n, "convergence.n_list entry", 2)
    pot = cfg["potential"]
    model = pot.get("model")
    if model not in ("zero", "soliton", "multisoliton", "table"):
        raise ConfigError(f"unknown potential model {model!r}")
    if model == "table":
        if not pot.get("path") or not Path(pot["path"]).exists():
            raise ConfigError(f"table path does not exist: {pot.get('path')!r}")
    try:
        build_model(pot)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError, np.linalg.LinAlgError) as exc:
        raise ConfigError(f"invalid potential parameters: {exc}") from exc


def _array(v):
    if isinstance(v, dict):
        return np.asarray(v["re"], dtype=float) + 1j * np.asarray(v.get("im", 0.0), dtype=float)
    a = np.array(v, dtype=object)
    if a.dtype == object and any(isinstance(e, dict) for e in a.ravel()):
        return np.vectorize(lambda e: complex(e["re"], e.get("im", 0.0)) if isinstance(e, dict) else complex(e),
                            otypes=[complex])(a)
    return np.asarray(v, dtype=float)


def build_model(pot: dict):
    """Potential model object for `potential.tabulate`."""
    model = pot.get("model")
    params = pot.get("params") or {}
    if model == "zero":
        return None
    if model == "soliton":
        return SolitonParams(**{k: float(params[k]) for k in ("c", "a", "p") if k in params})
    if model == "multisoliton":
        return MultisolitonParams(A=_array(params["A"]), b=_array(params["b"]),
                                  c=_array(params["c"]), branch=params.get("branch", "analytic"))
    if model == "table":
        return str(pot["path"])
    raise ConfigError(f"unknown potential model {model!r}")
