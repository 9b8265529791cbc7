"""
Scenario files.

A scenario is a flat text file of `key = value` lines; section keys are
dotted (`radio.range_m = 150`). Values are YAML scalars or flow lists
(`seeds = [1, 2, 3]`, `protocol = [loadng, aodv]`). `#` starts a comment.

Every field defaults to the evaluated deployment's value where one exists;
only `protocol` is required. Unknown keys, duplicate keys and out-of-range
values are reported as `ConfigError` naming the key and its line.
"""

from __future__ import annotations

import logging
from enum import StrEnum
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator

from llnroute.errors import ConfigError
from llnroute.netsim.engine import Protocol
from llnroute.netsim.radio import MacModel, RadioModel
from llnroute.netsim.topology import Placement
from llnroute.routing.common import TimerConfig
from llnroute.traffic import TrafficProfile

logger = logging.getLogger(__name__)

SECTIONS = ("radio", "mac", "traffic", "timers", "sweep")


class SweepAxis(StrEnum):
    NODES = "nodes"
    DISTANCE = "distance"


class SweepConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    axis: SweepAxis = Field(SweepAxis.NODES, description="Swept parameter")
    values: tuple[float, ...] = Field(..., min_length=1, description="Axis values, in run order")

    @field_validator("values")
    @classmethod
    def _positive(cls, values: tuple[float, ...]) -> tuple[float, ...]:
        if any(v <= 0 for v in values):
            raise ValueError("sweep values must be positive")
        return values


def _check_inside_field(dist: float | None, info: ValidationInfo) -> None:
    # the sink sits at the field center
    field_m = info.data.get("field_m")
    if dist is None or field_m is None:
        return
    half = min(field_m) / 2
    if dist > half:
        raise ValueError(f"distance {dist:g} m does not fit a field with half-extent {half:g} m")


class ScenarioConfig(BaseModel):
    """Fully resolved scenario; immutable once parsed."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    protocol: tuple[Protocol, ...] = Field(..., min_length=1, description="Protocols to compare")
    n_nodes: int = Field(50, ge=2, le=65_534, description="Routers including the sink")
    field_m: tuple[float, float] = Field((1000.0, 1000.0), description="Deployment area in meters")
    duration_s: float = Field(8 * 3600.0, gt=0, description="Simulated time per run")
    seeds: tuple[int, ...] = Field((1,), min_length=1, description="Master seeds, one run each")
    address_width: int = Field(2, ge=1, le=16, description="Address length in octets")
    dist_to_sink: float | None = Field(None, gt=0, description="Focus node distance for single runs")
    placement: Placement = Field(Placement.INCREMENTAL, description="Topology sampling mode")
    radio: RadioModel = RadioModel()
    mac: MacModel = MacModel()
    traffic: TrafficProfile = TrafficProfile()
    timers: TimerConfig = TimerConfig()
    sweep: SweepConfig | None = None

    @field_validator("protocol", mode="before")
    @classmethod
    def _one_or_many(cls, value: Any) -> Any:
        if isinstance(value, str):
            return (value,)
        return value

    @field_validator("field_m")
    @classmethod
    def _positive_field(cls, value: tuple[float, float]) -> tuple[float, float]:
        if value[0] <= 0 or value[1] <= 0:
            raise ValueError("field dimensions must be positive")
        return value

    @field_validator("dist_to_sink")
    @classmethod
    def _inside_field(cls, value: float | None, info: ValidationInfo) -> float | None:
        _check_inside_field(value, info)
        return value

    @field_validator("sweep")
    @classmethod
    def _sweep_inside_field(cls, value: SweepConfig | None, info: ValidationInfo) -> SweepConfig | None:
        if value is not None and value.axis is SweepAxis.DISTANCE:
            _check_inside_field(max(value.values), info)
        return value

    @field_validator("seeds")
    @classmethod
    def _unique_seeds(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if len(set(value)) != len(value):
            raise ValueError("seeds must be unique")
        if any(s < 0 for s in value):
            raise ValueError("seeds must be non-negative")
        return value


# --- parsing ---


def _read_lines(text: str) -> dict[str, tuple[Any, int]]:
    entries: dict[str, tuple[Any, int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(key or line, number, "expected `key = value`")
        if key.count(".") > 1:
            raise ConfigError(key, number, "keys have at most one section")
        if key in entries:
            raise ConfigError(key, number, f"duplicate key (first set on line {entries[key][1]})")
        try:
            parsed = yaml.safe_load(value.strip()) if value.strip() else None
        except yaml.YAMLError as exc:
            raise ConfigError(key, number, f"unreadable value: {exc}") from exc
        entries[key] = (parsed, number)
    return entries


def _nest(entries: dict[str, tuple[Any, int]]) -> dict[str, Any]:
    data: dict[str, Any] = {}
    for key, (value, number) in entries.items():
        section, dot, name = key.partition(".")
        if not dot:
            if isinstance(data.get(key), dict):
                raise ConfigError(key, number, "is a section, not a value")
            data[key] = value
            continue
        target = data.setdefault(section, {})
        if not isinstance(target, dict):
            raise ConfigError(key, number, f"{section} is a value, not a section")
        target[name] = value
    return data


def _line_of(entries: dict[str, tuple[Any, int]], key: str) -> int | None:
    if key in entries:
        return entries[key][1]
    prefixed = [n for k, (_, n) in entries.items() if k.startswith(key + ".")]
    return min(prefixed) if prefixed else None


def validate_config(text: str) -> ScenarioConfig:
    """Parse scenario text; raises ConfigError on the first problem found."""
    entries = _read_lines(text)
    data = _nest(entries)
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        error = exc.errors()[0]
        loc = [str(part) for part in error["loc"] if not isinstance(part, int)]
        key = ".".join(loc[:2]) if loc else "<scenario>"
        message = "unknown key" if error["type"] == "extra_forbidden" else error["msg"]
        if error["type"] == "missing":
            message = "required key is missing"
        raise ConfigError(key, _line_of(entries, key), message) from exc


def parse_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), None, f"cannot read scenario: {exc.strerror or exc}") from exc
    cfg = validate_config(text)
    logger.debug("parsed %s: protocols=%s", path, ",".join(cfg.protocol))
    return cfg


def with_seed_override(cfg: ScenarioConfig, seed: int | None) -> ScenarioConfig:
    """Replace the seed list with a single seed (LLNROUTE_SEED)."""
    if seed is None:
        return cfg
    logger.info("seed list replaced by %d from the environment", seed)
    return cfg.model_copy(update={"seeds": (seed,)})


# --- rendering ---


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, StrEnum):
        return value.value
    if isinstance(value, tuple | list):
        return "[" + ", ".join(_render(v) for v in value) + "]"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: ScenarioConfig) -> str:
    """Resolved scenario in the scenario-file format; parsing it gives `cfg` back."""
    lines = ["# resolved scenario", "# schema=1"]
    for name in ScenarioConfig.model_fields:
        value = getattr(cfg, name)
        if name in SECTIONS:
            if value is None:
                continue
            for sub in type(value).model_fields:
                lines.append(f"{name}.{sub} = {_render(getattr(value, sub))}")
        elif value is not None:
            lines.append(f"{name} = {_render(value)}")
    return "\n".join(lines) + "\n"
