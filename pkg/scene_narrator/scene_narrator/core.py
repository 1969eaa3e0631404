"""Shared domain types, configuration and validation."""

from __future__ import annotations

import dataclasses
import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Protocol


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class DomainError(ValueError):
    """A precondition of a domain operation was violated."""


class SequencingError(DomainError):
    """Frames were delivered out of frame_id order."""


class DuplicatePacketError(DomainError):
    """A packet id was buffered twice."""


class ConfigError(ValueError):
    """Configuration document or override is invalid."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


class ProviderError(ValueError):
    """An inference provider failed to produce a result."""


# ---------------------------------------------------------------------------
# Tiers
# ---------------------------------------------------------------------------


class Tier(str, Enum):
    LABEL = "label"
    GENERAL = "general"
    DETAILED = "detailed"


# Richest first; the order in which the buffer is scanned for the next utterance.
TIERS_BY_RICHNESS: tuple[Tier, ...] = (Tier.DETAILED, Tier.GENERAL, Tier.LABEL)

DEFAULT_TIER_LATENCIES: dict[Tier, float] = {
    Tier.LABEL: 0.1,
    Tier.GENERAL: 2.87,
    Tier.DETAILED: 8.78,
}


# ---------------------------------------------------------------------------
# Frames and compositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Detection:
    track_id: int
    class_label: str
    bbox: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    confidence: float = 1.0

    def __post_init__(self) -> None:
        x, y, w, h = self.bbox
        if min(x, y, w, h) < 0 or x + w > 1.0 or y + h > 1.0:
            raise DomainError(f"bbox {self.bbox} is not inside the unit square")
        if not 0.0 <= self.confidence <= 1.0:
            raise DomainError(f"confidence {self.confidence} is not in [0, 1]")


@dataclass(frozen=True, eq=False)
class Composition:
    """Set of (track_id, class_label) pairs; remembers first-seen order for phrasing."""

    members: tuple[tuple[int, str], ...] = ()

    @classmethod
    def of(cls, pairs: Iterable[tuple[int, str]]) -> Composition:
        seen: dict[tuple[int, str], None] = {}
        for track_id, label in pairs:
            seen.setdefault((int(track_id), str(label)), None)
        return cls(members=tuple(seen))

    def as_set(self) -> frozenset[tuple[int, str]]:
        return frozenset(self.members)

    def class_labels(self) -> list[str]:
        labels: dict[str, None] = {}
        for _, label in self.members:
            labels.setdefault(label, None)
        return list(labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Composition):
            return NotImplemented
        return self.as_set() == other.as_set()

    def __hash__(self) -> int:
        return hash(self.as_set())

    def __len__(self) -> int:
        return len(self.members)

    def __bool__(self) -> bool:
        return bool(self.members)

    def __contains__(self, pair: object) -> bool:
        return pair in self.as_set()


EMPTY_COMPOSITION = Composition()


@dataclass(frozen=True)
class FrameRecord:
    frame_id: int
    timestamp: float
    orientation_deg: float
    detections: tuple[Detection, ...] = ()
    feature_vector: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 <= self.orientation_deg < 360.0:
            raise DomainError(f"orientation_deg {self.orientation_deg} is not in [0, 360)")


# ---------------------------------------------------------------------------
# Engine configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EngineConfig:
    n: int = 5
    m: int = 3
    thres: float = 0.6
    orientation_unit_deg: float = 30.0
    sim_split_threshold: float = 0.2
    redundancy_threshold: float = 0.85
    spoken_history_window: int = 5
    speaking_rate_wps: float = 3.0
    volume_normal: float = 1.0
    volume_high: float = 1.5
    tier_latencies: Mapping[Tier, float] = field(
        default_factory=lambda: dict(DEFAULT_TIER_LATENCIES)
    )
    fps: float = 5.0
    min_sound_confidence: float = 0.0
    prioritization_latency: float = 0.0
    concise_streak: int = 2
    restrict_to_intent_classes: bool = False

    def latency(self, tier: Tier) -> float:
        return float(self.tier_latencies[tier])

    def with_overrides(self, overrides: Mapping[str, Any]) -> EngineConfig:
        known = {f.name: f for f in dataclasses.fields(self)}
        changes: dict[str, Any] = {}
        for key, raw in overrides.items():
            if key not in known:
                raise ConfigError(key, "unknown key")
            changes[key] = _coerce_config_value(key, raw, getattr(self, key))
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        data = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        data["tier_latencies"] = {
            tier.value: float(self.tier_latencies[tier]) for tier in Tier
        }
        return data


def _coerce_config_value(key: str, raw: Any, current: Any) -> Any:
    if key == "tier_latencies":
        if not isinstance(raw, Mapping):
            raise ConfigError(key, "expected an object keyed by tier name")
        merged = dict(current)
        for tier_name, seconds in raw.items():
            try:
                tier = Tier(tier_name)
            except ValueError as exc:
                raise ConfigError(key, f"unknown tier '{tier_name}'") from exc
            merged[tier] = _as_number(key, seconds)
        return merged
    if isinstance(current, bool):
        if isinstance(raw, bool):
            return raw
        if isinstance(raw, str) and raw.lower() in ("true", "false"):
            return raw.lower() == "true"
        raise ConfigError(key, f"expected a boolean, got {raw!r}")
    if isinstance(current, int):
        if isinstance(raw, bool) or not isinstance(raw, (int, str)):
            raise ConfigError(key, f"expected an integer, got {raw!r}")
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(key, f"expected an integer, got {raw!r}") from exc
    return _as_number(key, raw)


def _as_number(key: str, raw: Any) -> float:
    if isinstance(raw, bool):
        raise ConfigError(key, f"expected a number, got {raw!r}")
    try:
        value = float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"expected a number, got {raw!r}") from exc
    if not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got {raw!r}")
    return value


def load_config(path: Path, base: EngineConfig | None = None) -> EngineConfig:
    """Read a flat JSON config document and apply it over *base* (defaults if omitted)."""
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ConfigError("<document>", "config file must hold a JSON object")
    return (base or EngineConfig()).with_overrides(data)


@dataclass(frozen=True)
class Violation:
    field: str
    message: str


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def fields(self) -> list[str]:
        return [v.field for v in self.violations]


def validate_config(cfg: EngineConfig) -> ValidationResult:
    violations: list[Violation] = []

    def check(condition: bool, name: str, message: str) -> None:
        if not condition:
            violations.append(Violation(name, message))

    check(cfg.n >= 1, "n", "n ≥ 1")
    check(cfg.m >= 1, "m", "m ≥ 1")
    check(0.0 <= cfg.thres <= 1.0, "thres", "thres ∈ [0,1]")
    check(
        0.0 < cfg.orientation_unit_deg <= 180.0,
        "orientation_unit_deg",
        "orientation_unit_deg ∈ (0,180]",
    )
    check(
        -1.0 <= cfg.redundancy_threshold <= 1.0,
        "redundancy_threshold",
        "redundancy_threshold ∈ [-1,1]",
    )
    check(cfg.spoken_history_window >= 1, "spoken_history_window", "spoken_history_window ≥ 1")
    check(cfg.speaking_rate_wps > 0, "speaking_rate_wps", "speaking_rate_wps > 0")
    check(cfg.volume_normal > 0, "volume_normal", "volume_normal > 0")
    check(cfg.volume_high >= cfg.volume_normal, "volume_high", "volume_high ≥ volume_normal")
    check(cfg.fps > 0, "fps", "fps > 0")
    check(
        0.0 <= cfg.min_sound_confidence <= 1.0,
        "min_sound_confidence",
        "min_sound_confidence ∈ [0,1]",
    )
    check(cfg.prioritization_latency >= 0, "prioritization_latency", "prioritization_latency ≥ 0")
    check(cfg.concise_streak >= 1, "concise_streak", "concise_streak ≥ 1")
    missing = [tier.value for tier in Tier if tier not in cfg.tier_latencies]
    check(not missing, "tier_latencies", f"tier_latencies missing {missing}")
    negative = [t.value for t, s in cfg.tier_latencies.items() if float(s) < 0]
    check(not negative, "tier_latencies", f"tier_latencies negative for {negative}")
    return ValidationResult(tuple(violations))


# ---------------------------------------------------------------------------
# Event sink shared by the engine layers
# ---------------------------------------------------------------------------


class EventSink(Protocol):
    def record(self, kind: str, time: float, **fields: Any) -> None: ...
