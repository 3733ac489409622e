"""Flat dotted-key configuration: schema, defaults, parsing and validation.

A config file is a YAML mapping such as::

    scenario.k: 10
    qos.lambda: 4
    game.lambda_bs: 0.5

Nested mappings are flattened, so ``{qos: {lambda: 4}}`` is equivalent.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import yaml

from .channel import ChannelConfig, Fading
from .errors import ConfigurationError, LeaseGameError
from .experiments import ScenarioConfig
from .game import SCHEMES, GameParams, SecondaryParams
from .primary import N0_DEFAULT, PrimaryParams

__all__ = ["ConfigKey", "SCHEMA", "defaults", "load_config", "parse_override",
           "resolve", "build_scenario", "schema_table"]


def _as_float(value):
    if isinstance(value, bool):
        raise TypeError("boolean where a number is expected")
    return float(value)


def _as_int(value):
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise TypeError("expected an integer")
    return int(value)


def _as_bool(value):
    if not isinstance(value, bool):
        raise TypeError("expected true or false")
    return value


def _as_schemes(value):
    if isinstance(value, str):
        value = [v.strip() for v in value.split(",") if v.strip()]
    names = tuple(str(v) for v in value)
    unknown = [n for n in names if n not in SCHEMES]
    if unknown:
        raise TypeError(f"unknown scheme {unknown[0]!r}; choose from {sorted(SCHEMES)}")
    return names


def _as_optional_float(value):
    return None if value is None else _as_float(value)


def _one_of(*choices):
    def parse(value):
        if value not in choices:
            raise TypeError(f"expected one of {list(choices)}")
        return value
    return parse


@dataclass(frozen=True)
class ConfigKey:
    default: Any
    parse: Callable
    doc: str


SCHEMA: dict[str, ConfigKey] = {
    "scenario.k": ConfigKey(10, _as_int, "number of cognitive radios K"),
    "scenario.mode": ConfigKey("lease", _one_of("lease", "fixed"),
                               "lease: play the game; fixed: fixed (alpha, N) partition"),
    "scenario.alpha": ConfigKey(0.25, _as_float, "slot fraction for fixed mode / power-control"),
    "scenario.n_ccr": ConfigKey(10, _as_int, "CCR count for fixed mode / power-control"),
    "scenario.schemes": ConfigKey(("RR", "RS", "CP"), _as_schemes,
                                  "incomplete-information schemes to run"),
    "scenario.backward_induction": ConfigKey(False, _as_bool,
                                             "also solve the complete-information game"),
    "channel.a": ConfigKey(2.0, _as_float, "path-loss exponent a (h = r^-a)"),
    "channel.distance_unit_scale": ConfigKey(1.0, _as_float,
                                             "multiplier on km distances before path loss"),
    "channel.fading": ConfigKey("deterministic", _one_of("deterministic", "rayleigh"),
                                "fading law"),
    "channel.l_s": ConfigKey(2.0, _as_float, "secondary cell side (km)"),
    "channel.l_p": ConfigKey(1.0, _as_float, "primary placement square side (km)"),
    "noise.n0": ConfigKey(N0_DEFAULT, _as_float, "receiver noise power (W), -133 dBW"),
    "primary.p_p0": ConfigKey(0.6, _as_float, "primary power without leasing (W)"),
    "qos.lambda": ConfigKey(2.0, _as_float, "CCR compensation strength lambda_qos"),
    "qos.p_max": ConfigKey(0.6, _as_float, "maximum CR power (W)"),
    "game.lambda_bs": ConfigKey(0.5, _as_float, "BS weight on its own utility, in (0, 1)"),
    "game.c": ConfigKey(1.0, _as_float, "power cost weight in the BS utility"),
    "game.alpha_step": ConfigKey(0.005, _as_float, "backward-induction alpha grid step"),
    "game.eps_alpha": ConfigKey(0.01, _as_float, "slot fraction used for the N = K border"),
    "game.rs_power": ConfigKey(None, _as_optional_float,
                               "RS equal relay power guess (W); null means p_max / 2"),
    "power.tol": ConfigKey(1e-9, _as_float, "fixed-point relative sup-norm tolerance"),
    "power.max_iter": ConfigKey(1000, _as_int, "fixed-point iteration cap"),
    "mc.runs": ConfigKey(100, _as_int, "Monte Carlo runs"),
    "mc.seed": ConfigKey(0, _as_int, "master seed"),
    "mc.workers": ConfigKey(1, _as_int, "worker processes for monte-carlo"),
    "run.index": ConfigKey(0, _as_int, "run index used by single-scenario commands"),
}


def defaults() -> dict[str, Any]:
    return {key: spec.default for key, spec in SCHEMA.items()}


def _flatten(data: dict, prefix: str = "") -> dict[str, Any]:
    flat = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def load_config(path) -> dict[str, Any]:
    """Read a YAML config file into a flat ``{dotted.key: raw value}`` dict."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {str(path)!r} not found", key="config")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config is not valid YAML: {exc}", key="config") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a mapping of dotted keys", key="config")
    return _flatten(data)


def parse_override(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise ConfigurationError(f"override {text!r} is not key=value", key=text)
    key, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        value = raw
    return key.strip(), value


def resolve(*layers: dict[str, Any]) -> dict[str, Any]:
    """Merge raw layers over the defaults and type-check every key."""
    values = defaults()
    for layer in layers:
        for key, raw in layer.items():
            if key not in SCHEMA:
                raise ConfigurationError(f"unknown config key {key!r}", key=key)
            try:
                values[key] = SCHEMA[key].parse(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"bad value {raw!r} for {key}: {exc}", key=key) from exc
    return values


def build_scenario(values: dict[str, Any]) -> ScenarioConfig:
    """Construct the validated scenario; value errors name the offending key."""
    try:
        return ScenarioConfig(
            k=values["scenario.k"],
            l_s=values["channel.l_s"],
            l_p=values["channel.l_p"],
            channel=ChannelConfig(values["channel.a"], values["channel.distance_unit_scale"],
                                  Fading(values["channel.fading"])),
            primary=PrimaryParams(values["primary.p_p0"], values["noise.n0"]),
            secondary=SecondaryParams(values["qos.lambda"], values["qos.p_max"],
                                      values["noise.n0"]),
            game=GameParams(values["game.lambda_bs"], values["game.c"],
                            values["game.alpha_step"], values["game.eps_alpha"],
                            values["game.rs_power"], values["power.tol"],
                            values["power.max_iter"]),
            schemes=values["scenario.schemes"],
            backward_induction=values["scenario.backward_induction"],
            mode=values["scenario.mode"],
            fixed_alpha=values["scenario.alpha"],
            fixed_n_ccr=values["scenario.n_ccr"],
            seed=values["mc.seed"],
            runs=values["mc.runs"],
        )
    except ConfigurationError:
        raise
    except LeaseGameError as exc:
        raise ConfigurationError(str(exc)) from exc


def schema_table() -> str:
    """Markdown table of every key, its default and meaning."""
    lines = ["| key | default | meaning |", "|---|---|---|"]
    for key, spec in SCHEMA.items():
        default = spec.default
        if isinstance(default, tuple):
            default = ",".join(default)
        lines.append(f"| `{key}` | `{default}` | {spec.doc} |")
    return "\n".join(lines)
