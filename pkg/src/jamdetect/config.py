"""Run configuration: built-in defaults < config file < command-line overrides.

A config file is YAML with the sections of ``DEFAULTS``; unknown keys are
rejected. Powers (``p``, ``q`` and the fig2 ``q_list``) are in dB relative to
the unit noise variance unless written with a ``lin`` suffix, e.g.
``q: -17`` or ``q: "-17 dB"`` versus ``q: "0.02 lin"``.

A CSV written by the CLI starts with ``# manifest: {...}``; passing such a
file as the config reuses the resolved configuration stored in it.
"""
from __future__ import annotations

import copy
import json
import re
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .errors import ConfigurationError

MANIFEST_PREFIX = "# manifest: "

DEFAULTS: dict[str, dict[str, Any]] = {
    "system": {
        "M_r": 100,
        "M_w": 4,
        "K": 8,
        "tau": 10,
        "L": 10,
        "p": "0 dB",
        "q": "-17 dB",
        "beta_users": None,
        "beta_w": 1.0,
        "T": None,
    },
    "detector": {
        "threshold_mu_prime": None,
        "target_pfa": 0.01,
        "mu_log": None,
        "variant": "consistent",
        "inversion": "exact",
    },
    "simulation": {
        "jammer_present": True,
        "n_trials": 100_000,
        "seed": 1,
        "pilot_hopping": False,
        "fixed_jammer": False,
        "threads": 1,
        "observations": None,
    },
    "fig1": {
        # grid points are a choice, not a published list
        "M_r_grid": [10, 20, 50, 100, 200, 300, 400, 500],
        "K_L": [[6, 1], [4, 1], [6, 10], [4, 10]],
    },
    "fig2": {
        "pfa_grid": [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5],
        "q_list": [-23, -20, -17, -14],
    },
    "analysis": {
        "mu_prime": None,
        "q_tilde": None,
        "rho": None,
        "varrho": None,
        "T": None,
        "weights": None,
    },
}

THRESHOLD_SOURCES = frozenset({"threshold_mu_prime", "target_pfa", "mu_log"})

_POWER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(db|lin)?\s*$", re.IGNORECASE)


def parse_power(value, field: str = "power") -> float:
    """Linear power from a dB number/string or a ``lin``-suffixed string."""
    if isinstance(value, bool):
        raise ConfigurationError(f"{field}: expected a power, got {value!r}")
    if isinstance(value, (int, float)):
        return 10.0 ** (float(value) / 10.0)
    match = _POWER.match(str(value))
    if not match:
        raise ConfigurationError(f"{field}: cannot parse power {value!r} (use e.g. '-17 dB' or '0.02 lin')")
    number, unit = float(match.group(1)), (match.group(2) or "db").lower()
    if unit == "lin":
        if number < 0:
            raise ConfigurationError(f"{field}: linear power must be nonnegative, got {number}")
        return number
    return 10.0 ** (number / 10.0)


def power_db(value, field: str = "power") -> float:
    """The same power expressed in dB (-inf for zero)."""
    import math

    lin = parse_power(value, field)
    return 10.0 * math.log10(lin) if lin > 0 else -math.inf


def _check_keys(data: Mapping, schema: Mapping, where: str) -> None:
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{where or 'config'}: expected a mapping, got {type(data).__name__}")
    for key, value in data.items():
        path = f"{where}.{key}" if where else str(key)
        if key not in schema:
            raise ConfigurationError(f"unknown config key '{path}'")
        if isinstance(schema[key], dict):
            _check_keys(value, schema[key], path)


def merge(base: dict, update: Mapping) -> dict:
    """Recursive merge; ``update`` wins on every leaf it names."""
    out = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def read_manifest(path: Path) -> Optional[dict]:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith(MANIFEST_PREFIX):
        return json.loads(first[len(MANIFEST_PREFIX):])
    return None


def load_file(path) -> dict:
    path = Path(path)
    try:
        manifest = read_manifest(path)
        if manifest is not None:
            return manifest["config"]
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except (yaml.YAMLError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from exc
    return data or {}


def parse_override(text: str) -> dict:
    """``section.key=value`` (value parsed as YAML) into a nested dict."""
    if "=" not in text:
        raise ConfigurationError(f"override {text!r} must look like section.key=value")
    dotted, raw = text.split("=", 1)
    keys = [k.strip() for k in dotted.split(".") if k.strip()]
    if not keys:
        raise ConfigurationError(f"override {text!r} has an empty key")
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse override value in {text!r}: {exc}") from exc
    out: dict = {}
    cur = out
    for key in keys[:-1]:
        cur = cur.setdefault(key, {})
    cur[keys[-1]] = value
    return out


def resolve(file_data: Optional[Mapping] = None, overrides: Optional[list[Mapping]] = None) -> dict:
    """Defaults, then file, then each override in order; keys are validated."""
    cfg = copy.deepcopy(DEFAULTS)
    for layer in ([file_data] if file_data else []) + list(overrides or []):
        _check_keys(layer, DEFAULTS, "")
        # a layer naming one threshold source replaces the sources set below it
        named = {k for k, v in layer.get("detector", {}).items() if k in THRESHOLD_SOURCES and v is not None}
        if named:
            for key in THRESHOLD_SOURCES - named:
                cfg["detector"][key] = None
        cfg = merge(cfg, layer)
    return cfg


def _int(section: Mapping, key: str, where: str) -> int:
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigurationError(f"{where}.{key}: expected an integer, got {value!r}")
    return value


def system_from(cfg: Mapping, **changes):
    """Build a SystemConfig from the resolved ``system`` section."""
    from .errors import InvalidArgument
    from .model import SystemConfig

    s = dict(cfg["system"])
    s.update(changes)
    kwargs = {k: _int(s, k, "system") for k in ("M_r", "M_w", "K", "tau", "L")}
    try:
        kwargs["p"] = parse_power(s["p"], "system.p")
        kwargs["q"] = parse_power(s["q"], "system.q")
        kwargs["beta_w"] = float(s["beta_w"])
        kwargs["beta_users"] = s["beta_users"]
        kwargs["T"] = None if s["T"] is None else _int(s, "T", "system")
        return SystemConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidArgument):
            raise
        raise ConfigurationError(f"system: {exc}") from exc


def detector_from(cfg: Mapping):
    from .analysis import as_variant
    from .detector import DetectorConfig

    d = cfg["detector"]
    try:
        variant = as_variant(d["variant"]).value
    except ValueError as exc:
        raise ConfigurationError(f"detector.variant: {exc}") from exc
    return DetectorConfig(
        threshold_mu_prime=d["threshold_mu_prime"],
        target_pfa=d["target_pfa"],
        mu_log=d["mu_log"],
        variant=variant,
        inversion=d["inversion"],
    )
