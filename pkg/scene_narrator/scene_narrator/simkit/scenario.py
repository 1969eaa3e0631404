"""Scenario files: JSON Lines of typed records driving one simulated session."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from scene_narrator.core import (
    ConfigError,
    Detection,
    DomainError,
    EngineConfig,
    FrameRecord,
    Tier,
    validate_config,
)
from scene_narrator.intent import COCO_CLASSES, Attribute, IntentDecomposition, IntentKind
from scene_narrator.presenter import SoundAction, SoundEvent, SoundPhase, SoundPolicy
from scene_narrator.providers import ScriptedOutput


logger = logging.getLogger(__name__)


RECORD_KINDS: tuple[str, ...] = (
    "config",
    "classes",
    "frame",
    "output",
    "decomposition",
    "embedding",
    "intent",
    "sound",
    "policy",
    "annotation",
)


class ScenarioError(ValueError):
    """A scenario record is malformed or breaks a cross-record rule."""

    def __init__(self, line: int, field: str, message: str):
        super().__init__(f"line {line}: field '{field}': {message}")
        self.line = line
        self.field = field
        self.message = message


@dataclass(frozen=True)
class IntentCommand:
    """One user command: new intent text, an attribute level, class edits or a verbosity mode."""

    timestamp: float
    text: str | None = None
    attribute: str | None = None
    level: str | None = None
    add: tuple[str, ...] = ()
    remove: tuple[str, ...] = ()
    verbosity_mode: str | None = None

    @property
    def action(self) -> str:
        if self.text is not None:
            return "set_intent"
        if self.attribute is not None:
            return "attribute"
        if self.verbosity_mode is not None:
            return "verbosity_mode"
        return "classes"


@dataclass(frozen=True)
class Annotation:
    label: str
    visible_from: float
    visible_until: float


@dataclass
class Scenario:
    config_overrides: dict[str, Any] = field(default_factory=dict)
    dataset_classes: tuple[str, ...] = COCO_CLASSES
    frames: list[FrameRecord] = field(default_factory=list)
    outputs: dict[tuple[int, Tier], ScriptedOutput] = field(default_factory=dict)
    decompositions: dict[str, IntentDecomposition] = field(default_factory=dict)
    embeddings: dict[str, tuple[float, ...]] = field(default_factory=dict)
    intents: list[IntentCommand] = field(default_factory=list)
    sounds: list[SoundEvent] = field(default_factory=list)
    policy: SoundPolicy = field(default_factory=SoundPolicy)
    annotations: list[Annotation] = field(default_factory=list)

    @property
    def span(self) -> tuple[float, float] | None:
        if not self.frames:
            return None
        return self.frames[0].timestamp, self.frames[-1].timestamp

    def config(self, base: EngineConfig | None = None) -> EngineConfig:
        return (base or EngineConfig()).with_overrides(self.config_overrides)

    def to_records(self) -> list[dict[str, Any]]:
        """Canonical record list; loading it back yields an equal scenario."""
        records: list[dict[str, Any]] = []
        if self.config_overrides:
            records.append({"kind": "config", **self.config_overrides})
        if tuple(self.dataset_classes) != COCO_CLASSES:
            records.append({"kind": "classes", "classes": list(self.dataset_classes)})
        policy_rules = dict(self.policy.rules)
        default_rules = dict(SoundPolicy().rules)
        for label in sorted(set(policy_rules) | set(default_rules)):
            action = policy_rules.get(label)
            if action != default_rules.get(label):
                records.append(
                    {"kind": "policy", "label": label, "action": action.value if action else "none"}
                )
        for text, decomposition in self.decompositions.items():
            records.append(
                {
                    "kind": "decomposition",
                    "text": text,
                    "intent_kind": decomposition.kind.value,
                    "classes": list(decomposition.classes),
                    "verbose_attributes": [a.value for a in decomposition.verbose_attributes],
                }
            )
        for text, vector in self.embeddings.items():
            records.append({"kind": "embedding", "text": text, "vector": list(vector)})
        records.extend(_frame_record(frame) for frame in self.frames)
        for (frame_id, tier), output in self.outputs.items():
            record: dict[str, Any] = {
                "kind": "output",
                "frame_id": frame_id,
                "tier": tier.value,
                "sentences": list(output.sentences),
            }
            if output.latency is not None:
                record["latency"] = output.latency
            if tier is Tier.DETAILED:
                record["sim_scores"] = list(output.sim_scores)
                record["depth_scores"] = list(output.depth_scores)
            records.append(record)
        records.extend(_intent_record(command) for command in self.intents)
        for sound in self.sounds:
            records.append(
                {
                    "kind": "sound",
                    "timestamp": sound.timestamp,
                    "label": sound.label,
                    "phase": sound.phase.value,
                    "confidence": sound.confidence,
                }
            )
        for note in self.annotations:
            records.append(
                {
                    "kind": "annotation",
                    "label": note.label,
                    "visible_from": note.visible_from,
                    "visible_until": note.visible_until,
                }
            )
        return records

    def to_jsonl(self) -> str:
        lines = [json.dumps(record, sort_keys=True) for record in self.to_records()]
        return "".join(line + "\n" for line in lines)

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode("utf-8")).hexdigest()


def _frame_record(frame: FrameRecord) -> dict[str, Any]:
    return {
        "kind": "frame",
        "frame_id": frame.frame_id,
        "timestamp": frame.timestamp,
        "orientation_deg": frame.orientation_deg,
        "detections": [
            {
                "track_id": d.track_id,
                "class_label": d.class_label,
                "bbox": list(d.bbox),
                "confidence": d.confidence,
            }
            for d in frame.detections
        ],
        "feature_vector": list(frame.feature_vector),
    }


def _intent_record(command: IntentCommand) -> dict[str, Any]:
    record: dict[str, Any] = {"kind": "intent", "timestamp": command.timestamp}
    if command.text is not None:
        record["text"] = command.text
    if command.attribute is not None:
        record["attribute"] = command.attribute
        record["level"] = command.level
    if command.add:
        record["add"] = list(command.add)
    if command.remove:
        record["remove"] = list(command.remove)
    if command.verbosity_mode is not None:
        record["verbosity_mode"] = command.verbosity_mode
    return record


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def load_scenario(path: Path) -> Scenario:
    return parse_scenario(_decoded_lines(path.read_bytes()))


def _decoded_lines(data: bytes) -> Iterator[str]:
    for number, raw in enumerate(data.split(b"\n"), start=1):
        try:
            yield raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioError(number, "<record>", f"not valid UTF-8 ({exc.reason})") from exc


def write_scenario(scenario: Scenario, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(scenario.to_jsonl(), encoding="utf-8")


def parse_scenario(lines: Iterable[str]) -> Scenario:
    loader = _ScenarioLoader()
    for number, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ScenarioError(number, "<record>", f"invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise ScenarioError(number, "<record>", "expected a JSON object")
        loader.add(number, record)
    return loader.finish()


class _ScenarioLoader:
    def __init__(self) -> None:
        self.scenario = Scenario()
        self.output_lines: dict[tuple[int, Tier], int] = {}
        self.event_lines: list[tuple[int, float]] = []
        self.open_sounds: dict[str, bool] = {}
        self.dimension: int | None = None
        self.config_lines: dict[str, int] = {}

    def add(self, line: int, record: Mapping[str, Any]) -> None:
        kind = record.get("kind")
        if kind not in RECORD_KINDS:
            raise ScenarioError(line, "kind", f"unknown record kind {kind!r}")
        getattr(self, f"_add_{kind}")(line, _Fields(line, record))

    def _add_config(self, line: int, fields: _Fields) -> None:
        merged = dict(self.scenario.config_overrides)
        for key, value in fields.record.items():
            if key == "kind":
                continue
            earlier = merged.get(key)
            if isinstance(value, Mapping) and isinstance(earlier, Mapping):
                value = {**earlier, **value}
            merged[key] = value
            self.config_lines[key] = line
        try:
            EngineConfig().with_overrides(merged)
        except ConfigError as exc:
            raise ScenarioError(line, exc.key, str(exc)) from exc
        self.scenario.config_overrides = merged

    def _add_classes(self, line: int, fields: _Fields) -> None:
        classes = fields.strings("classes")
        if not classes:
            raise ScenarioError(line, "classes", "must not be empty")
        self.scenario.dataset_classes = tuple(classes)

    def _add_frame(self, line: int, fields: _Fields) -> None:
        frame_id = fields.integer("frame_id")
        frames = self.scenario.frames
        if frames and frame_id <= frames[-1].frame_id:
            raise ScenarioError(
                line, "frame_id", f"{frame_id} does not follow frame {frames[-1].frame_id}"
            )
        timestamp = fields.number("timestamp")
        if frames and timestamp < frames[-1].timestamp:
            raise ScenarioError(line, "timestamp", "frame timestamps must not decrease")
        vector = tuple(fields.numbers("feature_vector", default=[]))
        if vector:
            if self.dimension is None:
                self.dimension = len(vector)
            elif len(vector) != self.dimension:
                raise ScenarioError(
                    line, "feature_vector", f"expected {self.dimension} values, got {len(vector)}"
                )
        detections = [
            _detection(line, index, item)
            for index, item in enumerate(fields.get("detections", default=[], kind=list))
        ]
        try:
            frame = FrameRecord(
                frame_id=frame_id,
                timestamp=timestamp,
                orientation_deg=fields.number("orientation_deg"),
                detections=tuple(detections),
                feature_vector=vector,
            )
        except DomainError as exc:
            raise ScenarioError(line, "orientation_deg", str(exc)) from exc
        frames.append(frame)

    def _add_output(self, line: int, fields: _Fields) -> None:
        frame_id = fields.integer("frame_id")
        tier = fields.tier("tier")
        if tier is Tier.LABEL:
            raise ScenarioError(line, "tier", "label descriptions are derived from detections")
        if (frame_id, tier) in self.output_lines:
            raise ScenarioError(line, "tier", f"duplicate {tier.value} output for frame {frame_id}")
        sentences = fields.strings("sentences")
        if not sentences:
            raise ScenarioError(line, "sentences", "must not be empty")
        latency = fields.number("latency", default=None)
        if latency is not None and latency < 0:
            raise ScenarioError(line, "latency", "must not be negative")
        sims: list[float] = []
        depths: list[float] = []
        if tier is Tier.DETAILED:
            for name, values in (("sim_scores", sims), ("depth_scores", depths)):
                if name not in fields.record:
                    raise ScenarioError(line, name, "detailed outputs score every sentence")
                values.extend(fields.numbers(name))
                if len(values) != len(sentences):
                    raise ScenarioError(
                        line, name, f"expected {len(sentences)} values, got {len(values)}"
                    )
            if any(d < 0 for d in depths):
                raise ScenarioError(line, "depth_scores", "must not be negative")
        self.output_lines[(frame_id, tier)] = line
        self.scenario.outputs[(frame_id, tier)] = ScriptedOutput(
            sentences=tuple(sentences),
            latency=latency,
            sim_scores=tuple(sims),
            depth_scores=tuple(depths),
        )

    def _add_decomposition(self, line: int, fields: _Fields) -> None:
        text = fields.get("text", kind=str)
        try:
            decomposition = IntentDecomposition(
                kind=IntentKind(fields.get("intent_kind", kind=str)),
                classes=tuple(fields.strings("classes", default=[])),
                verbose_attributes=tuple(
                    Attribute(a) for a in fields.strings("verbose_attributes", default=[])
                ),
            )
        except (ValueError, DomainError) as exc:
            raise ScenarioError(line, "intent_kind", str(exc)) from exc
        self.scenario.decompositions[text] = decomposition

    def _add_embedding(self, line: int, fields: _Fields) -> None:
        self.scenario.embeddings[fields.get("text", kind=str)] = tuple(fields.numbers("vector"))

    def _add_intent(self, line: int, fields: _Fields) -> None:
        timestamp = fields.number("timestamp")
        command = IntentCommand(
            timestamp=timestamp,
            text=fields.get("text", default=None, kind=str),
            attribute=fields.get("attribute", default=None, kind=str),
            level=fields.get("level", default=None, kind=str),
            add=tuple(fields.strings("add", default=[])),
            remove=tuple(fields.strings("remove", default=[])),
            verbosity_mode=fields.get("verbosity_mode", default=None, kind=str),
        )
        if command.attribute is not None and command.level is None:
            raise ScenarioError(line, "level", "an attribute command needs a level")
        given = [command.text, command.attribute, command.verbosity_mode]
        if sum(v is not None for v in given) + bool(command.add or command.remove) != 1:
            raise ScenarioError(
                line, "text", "give exactly one of text, attribute, add/remove or verbosity_mode"
            )
        self.scenario.intents.append(command)
        self.event_lines.append((line, timestamp))

    def _add_sound(self, line: int, fields: _Fields) -> None:
        timestamp = fields.number("timestamp")
        label = fields.get("label", kind=str).lower()
        try:
            phase = SoundPhase(fields.get("phase", kind=str))
        except ValueError as exc:
            raise ScenarioError(line, "phase", "expected 'start' or 'end'") from exc
        confidence = fields.number("confidence", default=1.0)
        if not 0.0 <= confidence <= 1.0:
            raise ScenarioError(line, "confidence", "must be in [0, 1]")
        is_open = self.open_sounds.get(label, False)
        if phase is SoundPhase.START and is_open:
            raise ScenarioError(line, "phase", f"'{label}' started twice without an end")
        if phase is SoundPhase.END and not is_open:
            raise ScenarioError(line, "phase", f"'{label}' ended without a start")
        self.open_sounds[label] = phase is SoundPhase.START
        self.scenario.sounds.append(SoundEvent(label, phase, timestamp, confidence))
        self.event_lines.append((line, timestamp))

    def _add_policy(self, line: int, fields: _Fields) -> None:
        label = fields.get("label", kind=str)
        action_name = fields.get("action", kind=str)
        if action_name == "none":
            action = None
        else:
            try:
                action = SoundAction(action_name)
            except ValueError as exc:
                raise ScenarioError(line, "action", f"unknown action '{action_name}'") from exc
        self.scenario.policy = self.scenario.policy.with_rule(label, action)

    def _add_annotation(self, line: int, fields: _Fields) -> None:
        visible_from = fields.number("visible_from")
        visible_until = fields.number("visible_until")
        if visible_until < visible_from:
            raise ScenarioError(line, "visible_until", "window ends before it starts")
        self.scenario.annotations.append(
            Annotation(fields.get("label", kind=str), visible_from, visible_until)
        )

    def finish(self) -> Scenario:
        scenario = self.scenario
        cfg = scenario.config()
        result = validate_config(cfg)
        if not result.ok:
            first = result.violations[0]
            line = self.config_lines.get(first.field, max(self.config_lines.values(), default=0))
            raise ScenarioError(line, first.field, first.message)
        frame_ids = {frame.frame_id for frame in scenario.frames}
        for (frame_id, _), line in self.output_lines.items():
            if frame_id not in frame_ids:
                raise ScenarioError(line, "frame_id", f"no frame {frame_id} in this scenario")
        span = scenario.span
        for line, timestamp in self.event_lines:
            if span is None or not span[0] <= timestamp <= span[1]:
                raise ScenarioError(line, "timestamp", "event lies outside the frame stream")
        _warn_on_spacing(scenario.frames, cfg.fps)
        return scenario


def _warn_on_spacing(frames: Sequence[FrameRecord], fps: float) -> None:
    expected = 1.0 / fps
    for previous, frame in zip(frames, frames[1:]):
        gap = frame.timestamp - previous.timestamp
        if abs(gap - expected * (frame.frame_id - previous.frame_id)) > 1e-6:
            logger.warning(
                "frame %d follows frame %d after %.3fs; %.1f fps implies %.3fs",
                frame.frame_id,
                previous.frame_id,
                gap,
                fps,
                expected * (frame.frame_id - previous.frame_id),
            )
            return


def _detection(line: int, index: int, item: Any) -> Detection:
    name = f"detections[{index}]"
    if not isinstance(item, dict):
        raise ScenarioError(line, name, "expected an object")
    fields = _Fields(line, item, prefix=name + ".")
    try:
        return Detection(
            track_id=fields.integer("track_id"),
            class_label=fields.get("class_label", kind=str),
            bbox=tuple(fields.numbers("bbox", default=[0.0, 0.0, 1.0, 1.0])),  # type: ignore[arg-type]
            confidence=fields.number("confidence", default=1.0),
        )
    except (DomainError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(line, name, str(exc)) from exc


_MISSING = object()


class _Fields:
    """Typed field access that reports the offending line and field name."""

    def __init__(self, line: int, record: Mapping[str, Any], prefix: str = "") -> None:
        self.line = line
        self.record = record
        self.prefix = prefix

    def _fail(self, name: str, message: str) -> ScenarioError:
        return ScenarioError(self.line, self.prefix + name, message)

    def get(self, name: str, default: Any = _MISSING, kind: type = object) -> Any:
        if name not in self.record:
            if default is _MISSING:
                raise self._fail(name, "is required")
            return default
        value = self.record[name]
        if not isinstance(value, kind):
            raise self._fail(name, f"expected {kind.__name__}, got {type(value).__name__}")
        return value

    def integer(self, name: str) -> int:
        value = self.get(name)
        if isinstance(value, bool) or not isinstance(value, int):
            raise self._fail(name, "expected an integer")
        return value

    def number(self, name: str, default: Any = _MISSING) -> Any:
        value = self.get(name, default)
        if value is default and default is not _MISSING:
            return default
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self._fail(name, "expected a number")
        if not math.isfinite(value):
            raise self._fail(name, "expected a finite number")
        return float(value)

    def numbers(self, name: str, default: Any = _MISSING) -> list[float]:
        values = self.get(name, default, kind=list)
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values):
            raise self._fail(name, "expected a list of numbers")
        if not all(math.isfinite(v) for v in values):
            raise self._fail(name, "expected finite numbers")
        return [float(v) for v in values]

    def strings(self, name: str, default: Any = _MISSING) -> list[str]:
        values = self.get(name, default, kind=list)
        if any(not isinstance(v, str) for v in values):
            raise self._fail(name, "expected a list of strings")
        return list(values)

    def tier(self, name: str) -> Tier:
        value = self.get(name, kind=str)
        try:
            return Tier(value)
        except ValueError as exc:
            raise self._fail(name, f"unknown tier '{value}'") from exc
