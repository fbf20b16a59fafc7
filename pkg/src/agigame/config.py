"""Strict JSON configuration: parsing, defaults and round-trip encoding."""

from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path

from .engine import SimulationConfig
from .errors import ConfigError, OutOfRange
from .mechanisms import MechanismConfig
from .model import Parameters, validate_parameters
from .strategies import StrategyKind, StrategySpec

SCHEMA_VERSION = 1

TOP_LEVEL = {
    "schema_version",
    "seed",
    "episodes",
    "params",
    "mechanisms",
    "strategy",
    "strategies",
    "entrant_strategy",
    "r_cooperate",
    "r_defect",
    "couple_defect_secrecy",
    "security_timing",
    "initial_capability",
    "founders",
    "expertise_range",
    "risk_range",
}
_STRATEGY_KEYS = {"kind", "r_cooperate", "r_defect", "parameters"}
_FOUNDER_KEYS = {"compute", "expertise", "risk_tolerance"}
_INT_FIELDS = {"horizon", "n_initial", "tau", "sanction_delay", "redemption_steps"}


def _strict(section: dict, allowed, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a JSON object", field=where)
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown field {where + '.' if where else ''}{key}", field=f"{where}.{key}" if where else key)


def _typed(cls, section: dict, where: str):
    names = {f.name for f in fields(cls)}
    _strict(section, names, where)
    kwargs = {}
    for k, v in section.items():
        if k in _INT_FIELDS:
            if isinstance(v, float) and v.is_integer():
                v = int(v)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{where}.{k} must be an integer", field=f"{where}.{k}")
        kwargs[k] = v
    return kwargs


def _strategy(raw, where, r_c, r_d, share_default) -> StrategySpec:
    _strict(raw, _STRATEGY_KEYS, where)
    kind = raw.get("kind", "GrimTrigger")
    try:
        kind = StrategyKind(kind)
    except ValueError:
        raise ConfigError(f"{where}.kind: unknown strategy {kind!r}", field=f"{where}.kind") from None
    params = dict(raw.get("parameters", {}))
    if share_default and "share_when_defecting" not in params:
        params["share_when_defecting"] = 1
    try:
        return StrategySpec(kind, float(raw.get("r_cooperate", r_c)), float(raw.get("r_defect", r_d)), params)
    except OutOfRange as exc:
        raise ConfigError(f"{where}: {exc}", field=f"{where}.{exc.field}") from None


def config_from_dict(raw: dict) -> SimulationConfig:
    """Validated SimulationConfig with every default filled in."""
    if "config" in raw and "manifest_version" in raw:  # a run manifest
        raw = raw["config"]
    _strict(raw, TOP_LEVEL, "")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}", field="schema_version")
    try:
        params = Parameters(**_typed(Parameters, raw.get("params", {}), "params"))
        validate_parameters(params)
        mech = MechanismConfig(**_typed(MechanismConfig, raw.get("mechanisms", {}), "mechanisms"))
    except OutOfRange as exc:
        raise ConfigError(f"validation failed: {exc}", field=exc.field) from None
    except TypeError as exc:
        raise ConfigError(str(exc)) from None

    r_c = float(raw.get("r_cooperate", 0.5))
    r_d = float(raw.get("r_defect", 1.0))
    share = not raw.get("couple_defect_secrecy", True)
    default = _strategy(raw.get("strategy", {}), "strategy", r_c, r_d, share)
    overrides = {}
    strategies = raw.get("strategies", {})
    if not isinstance(strategies, dict):
        raise ConfigError("strategies must map founder index to a strategy", field="strategies")
    for slot, spec in strategies.items():
        try:
            idx = int(slot)
        except ValueError:
            raise ConfigError(f"strategies key {slot!r} is not a founder index", field="strategies") from None
        overrides[idx] = _strategy(spec, f"strategies.{slot}", r_c, r_d, share)
    entrant = None
    if "entrant_strategy" in raw:
        entrant = _strategy(raw["entrant_strategy"], "entrant_strategy", r_c, r_d, share)
    founders = raw.get("founders", [])
    for k, f in enumerate(founders):
        _strict(f, _FOUNDER_KEYS, f"founders.{k}")
        if set(f) != _FOUNDER_KEYS:
            raise ConfigError(f"founders.{k} needs {sorted(_FOUNDER_KEYS)}", field=f"founders.{k}")
    seed = raw.get("seed", 0)
    episodes = raw.get("episodes", 1)
    for name, v in (("seed", seed), ("episodes", episodes)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{name} must be an integer", field=name)
    try:
        return SimulationConfig(
            params=params,
            mechanisms=mech,
            default_strategy=default,
            strategies=overrides,
            entrant_strategy=entrant,
            master_seed=seed,
            episodes=episodes,
            security_timing=raw.get("security_timing", "eq4"),
            initial_capability=float(raw.get("initial_capability", 0.0)),
            founders=tuple(dict(f) for f in founders),
            expertise_range=tuple(raw.get("expertise_range", (0.0, 1.0))),
            risk_range=tuple(raw.get("risk_range", (0.0, 1.0))),
        )
    except OutOfRange as exc:
        raise ConfigError(f"validation failed: {exc}", field=exc.field) from None


def parse_config(path) -> SimulationConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", line=exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(raw)


def config_to_dict(config: SimulationConfig) -> dict:
    """Fully resolved, re-parseable form of ``config``."""
    mech = {f.name: getattr(config.mechanisms, f.name) for f in fields(config.mechanisms)}
    out = {
        "schema_version": SCHEMA_VERSION,
        "seed": config.master_seed,
        "episodes": config.episodes,
        "params": config.params.to_dict(),
        "mechanisms": mech,
        "strategy": config.default_strategy.to_dict(),
        "strategies": {str(k): v.to_dict() for k, v in sorted(config.strategies.items())},
        "security_timing": config.security_timing,
        "initial_capability": config.initial_capability,
        "founders": [dict(f) for f in config.founders],
        "expertise_range": list(config.expertise_range),
        "risk_range": list(config.risk_range),
    }
    if config.entrant_strategy is not None:
        out["entrant_strategy"] = config.entrant_strategy.to_dict()
    return out
