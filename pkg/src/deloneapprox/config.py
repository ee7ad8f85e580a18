"""Experiment config files: parsing, precision policy and hashing.

A config is a single JSON object::

    {
      "name": "integer-lattice",
      "alpha": "2", "a": "0", "b": "1", "N_max": 200,
      "delone": {"variant": "integer-lattice", "scale": "1", "offset": "0"},
      "psi": {"variant": "power", "c": "1", "s": "1"},
      "precision": {"mode": "auto", "bits": null},
      "seed": 20240611,
      "point_budget": 2000000,
      "residue_budget": null,
      "pruning": true,
      "band_width": null,
      "runs": {"independence": {"N": 50}, ...}
    }

Numbers are strings: integers, decimals, ``"p/q"``, ``"phi"`` or
``"sqrt(k)"``. ``precision.mode`` is ``"auto"`` (exact unless some input
is irrational), ``"exact"`` or ``"big-float"``.
"""
from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import Any

from .construction import ExperimentConfig
from .delone import DEFAULT_POINT_BUDGET, build_delone
from .errors import ConfigError
from .numerics import Numbers, is_exact, required_precision
from .psi import build_psi

REQUIRED_KEYS = ("alpha", "a", "b", "N_max", "delone", "psi")
KNOWN_KEYS = set(REQUIRED_KEYS) | {
    "name",
    "precision",
    "seed",
    "point_budget",
    "residue_budget",
    "pruning",
    "band_width",
    "runs",
    "description",
}
BUNDLED = ("integer-lattice", "fibonacci-chain", "jittered-lattice")


def bundled_config_path(name: str) -> Path:
    return Path(str(resources.files("deloneapprox") / "configs" / f"{name.replace('-', '_')}.json"))


def read_config(path: str | Path) -> dict:
    """Load a JSON config; a bare bundled name such as ``integer-lattice`` also works."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_config_path(str(path))
    try:
        with open(p, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def config_hash(data: dict) -> str:
    """SHA-256 of the canonical JSON form; independent of key order."""
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def _int(data: dict, key: str, default: Any = None, minimum: int | None = None) -> int | None:
    value = data.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    try:
        value = int(value)
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from exc
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    return value


def _build(data: dict, numbers: Numbers, overrides: dict) -> ExperimentConfig:
    return ExperimentConfig(
        alpha=numbers.scalar(data["alpha"]),
        a=numbers.scalar(data["a"]),
        b=numbers.scalar(data["b"]),
        N_max=_int(data, "N_max", minimum=1),
        delone=build_delone(data["delone"], numbers),
        psi=build_psi(data["psi"], numbers),
        numbers=numbers,
        point_budget=overrides.get("point_budget") or _int(data, "point_budget", DEFAULT_POINT_BUDGET, 1),
        residue_budget=_int(data, "residue_budget", None, 1),
        pruning=bool(data.get("pruning", True)),
        band_width=overrides.get("band_width", _int(data, "band_width", None, 0)),
        seed=overrides.get("seed") if overrides.get("seed") is not None else _int(data, "seed", 0),
        name=str(data.get("name", "")),
        source=data,
    )


def _all_exact(cfg: ExperimentConfig) -> bool:
    return all(is_exact(v) for v in (cfg.alpha, cfg.a, cfg.b)) and cfg.delone.exact and cfg.psi.exact


def config_from_dict(
    data: dict,
    *,
    seed: int | None = None,
    precision_bits: int | None = None,
    point_budget: int | None = None,
    band_width: int | None = None,
) -> ExperimentConfig:
    """Validate ``data`` and build an :class:`ExperimentConfig`.

    Keyword arguments override the corresponding config entries.
    """
    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise ConfigError(f"config is missing required keys: {', '.join(missing)}")
    unknown = set(data) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    precision = data.get("precision") or {}
    if not isinstance(precision, dict):
        raise ConfigError("precision must be an object with 'mode' and optional 'bits'")
    mode = precision.get("mode", "auto")
    if mode not in ("auto", "exact", "big-float"):
        raise ConfigError(f"unknown precision mode {mode!r}")
    bits = precision_bits or _int(precision, "bits", None, 2)
    overrides = {"seed": seed, "point_budget": point_budget}
    if band_width is not None:
        overrides["band_width"] = band_width

    # A first pass at a provisional precision decides the mode and the bit budget.
    n_max = _int(data, "N_max", minimum=1)
    alpha = Numbers(exact=False, precision_bits=256).scalar(data["alpha"])
    needed = required_precision(n_max, alpha)
    exact = mode == "exact"
    if mode == "auto":
        probe = _build(data, Numbers(exact=False, precision_bits=max(bits or 0, needed)), overrides)
        exact = _all_exact(probe)
    numbers = Numbers(exact=exact, precision_bits=bits if bits is not None else needed)
    return _build(data, numbers, overrides)


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    return config_from_dict(read_config(path), **overrides)


def run_options(cfg: ExperimentConfig, subcommand: str) -> dict:
    runs = cfg.source.get("runs") or {}
    return dict(runs.get(subcommand.replace("-", "_"), {}))
