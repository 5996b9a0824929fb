"""Experiment configuration: defaults, flat key=value files, and overrides.

Config files are plain text, one ``section.field=value`` per line, ``#``
comments allowed.  Every field has a default; the documented simulation
constants (aperture 8 wavelengths, minimum spacing 0.5, Rician factor 10,
reference path loss -2.14 dB, exponents 2.09, learning rate 5e-4, replay
capacity 1e4, batch 64, soft update 1e-3, discount 0.9) are the defaults.

``noise_var=auto`` derives the receiver noise so the per-user line-of-sight
receive SNR at the median distance is ``snr_target_db``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from ..agents import AgentConfig
from ..channel import RicianParams
from ..env import MobilityModel, RewardConfig

__all__ = [
    "ArrayConfig",
    "ConfigurationError",
    "ExperimentConfig",
    "FlBoundConfig",
    "PowerConfig",
    "RunConfig",
    "default_config",
    "load_config",
    "parse_overrides",
    "resolved_items",
]


class ConfigurationError(ValueError):
    """Invalid, unknown, or missing configuration input."""


@dataclass(frozen=True)
class ArrayConfig:
    n_antennas: int = 4
    aperture: float = 8.0
    min_spacing: float = 0.5


@dataclass(frozen=True)
class PowerConfig:
    """Transmit power budget and receiver noise; noise derives from the SNR
    target when left unset."""

    max_power: float = 1.0
    noise_var: Optional[float] = None
    snr_target_db: float = 10.0
    snr_ref_distance: float = 60.0

    def resolve_noise_var(self, channel: RicianParams) -> float:
        if self.noise_var is not None:
            return self.noise_var
        los_power = channel.los_gain(self.snr_ref_distance) ** 2
        return self.max_power * los_power / 10.0 ** (self.snr_target_db / 10.0)


@dataclass(frozen=True)
class FlBoundConfig:
    """Synthetic-task and bound-verification settings."""

    dim: int = 20
    samples_per_user: int = 30
    cond_number: float = 10.0
    rounds: int = 50
    heterogeneity: float = 0.0
    bound_seeds: int = 20


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "fa"
    agent: str = "rdpg"
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    episodes: int = 500
    horizon: int = 50
    n_users: int = 4
    antennas: tuple[int, ...] = (2, 4, 6)
    clients: tuple[int, ...] = (2, 6, 10)
    out_dir: str = "runs"
    oracle_budget: int = 2000
    oracle_states: int = 20
    oracle_draws: int = 32

    def __post_init__(self) -> None:
        if self.scenario not in ("fa", "fpa"):
            raise ConfigurationError("scenario must be 'fa' or 'fpa'")
        if self.agent not in ("rdpg", "ddpg", "oracle", "random"):
            raise ConfigurationError("agent must be rdpg|ddpg|oracle|random")


@dataclass(frozen=True)
class ExperimentConfig:
    channel: RicianParams = field(default_factory=RicianParams)
    array: ArrayConfig = field(default_factory=ArrayConfig)
    power: PowerConfig = field(default_factory=PowerConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    mobility: MobilityModel = field(default_factory=MobilityModel)
    agent: AgentConfig = field(default_factory=AgentConfig)
    fl: FlBoundConfig = field(default_factory=FlBoundConfig)
    run: RunConfig = field(default_factory=RunConfig)

    @property
    def noise_var(self) -> float:
        return self.power.resolve_noise_var(self.channel)


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def _coerce(raw: str, target_type, key: str):
    raw = raw.strip()
    origin = getattr(target_type, "__origin__", None)
    if target_type is Optional[float] or str(target_type) in (
        "typing.Optional[float]",
        "float | None",
    ):
        if raw.lower() in ("auto", "none", ""):
            return None
        return float(raw)
    if origin is tuple:
        if raw == "":
            return ()
        return tuple(int(part) for part in raw.split(","))
    if target_type is bool:
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigurationError(f"cannot parse boolean for {key}: {raw!r}")
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    if target_type is str:
        return raw
    raise ConfigurationError(f"unsupported field type for {key}")


def parse_overrides(cfg: ExperimentConfig, pairs: dict[str, str]) -> ExperimentConfig:
    """Apply dotted-key string overrides onto a config."""
    sections: dict[str, dict[str, object]] = {}
    section_fields = {f.name: f for f in fields(cfg)}
    for key, raw in pairs.items():
        if "." not in key:
            raise ConfigurationError(f"expected section.field, got {key!r}")
        section, name = key.split(".", 1)
        if section not in section_fields:
            raise ConfigurationError(f"unknown config section {section!r}")
        sub = getattr(cfg, section)
        sub_fields = {f.name: f for f in fields(sub)}
        if name not in sub_fields:
            raise ConfigurationError(f"unknown config key {key!r}")
        sections.setdefault(section, {})[name] = _coerce(raw, _field_type(sub, name), key)
    updates = {
        section: replace(getattr(cfg, section), **vals)
        for section, vals in sections.items()
    }
    return replace(cfg, **updates)


def _field_type(obj, name: str):
    hints = dataclasses.fields(obj)
    for f in hints:
        if f.name == name:
            # dataclass field types may be strings under future annotations
            t = f.type
            if isinstance(t, str):
                return {
                    "int": int,
                    "float": float,
                    "str": str,
                    "bool": bool,
                    "Optional[float]": Optional[float],
                    "float | None": Optional[float],
                    "tuple[int, ...]": tuple[int, ...],
                }.get(t, str)
            return t
    raise ConfigurationError(f"unknown field {name}")


def load_config(path_or_default: str) -> ExperimentConfig:
    """Load a config file, or the built-in defaults for the name 'default'."""
    cfg = default_config()
    if path_or_default == "default":
        return cfg
    path = Path(path_or_default)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value")
        key, raw = stripped.split("=", 1)
        pairs[key.strip()] = raw
    return parse_overrides(cfg, pairs)


def _format_value(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def resolved_items(cfg: ExperimentConfig) -> list[tuple[str, str]]:
    """Every config key with its resolved value, in stable order."""
    items: list[tuple[str, str]] = []
    for section_field in fields(cfg):
        sub = getattr(cfg, section_field.name)
        for f in fields(sub):
            items.append(
                (f"{section_field.name}.{f.name}", _format_value(getattr(sub, f.name)))
            )
    items.append(("derived.noise_var", repr(cfg.noise_var)))
    return items
