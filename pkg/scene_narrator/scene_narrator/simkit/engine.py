"""Discrete-event simulation of a session on a virtual clock."""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Any

from scene_narrator.core import (
    ConfigError,
    DomainError,
    EngineConfig,
    FrameRecord,
    ProviderError,
    Tier,
    validate_config,
)
from scene_narrator.genpipe import (
    DescriptionBuffer,
    DescriptionPacket,
    DescriptionPipeline,
    on_result,
)
from scene_narrator.intent import (
    IntentProfile,
    apply_attribute_command,
    default_profile,
    merge_classes,
    set_intent,
    set_verbosity_mode,
)
from scene_narrator.keyframe import KeyframeState, composition_of, process_frame
from scene_narrator.presenter import (
    PlaybackState,
    PresenterEvent,
    SoundEvent,
    Utterance,
    abandon,
    complete_due,
    handle_sound,
    initial_state,
    tick,
)
from scene_narrator.providers import (
    DecomposerContext,
    ScriptedDescriber,
    ScriptedEmbedder,
    build_decomposer,
)
from scene_narrator.ranker import (
    FreshnessContext,
    ScriptedSentenceScorer,
    rank_sentences,
    select_next,
)
from scene_narrator.simkit.scenario import IntentCommand, Scenario
from scene_narrator.simkit.transcript import (
    TRANSCRIPT_FORMAT_VERSION,
    Transcript,
    TranscriptRecorder,
)


logger = logging.getLogger(__name__)


# Tie-break among events sharing a timestamp.
_FRAME, _COMPLETION, _INTENT, _SOUND = range(4)


@dataclass(frozen=True)
class _Wake:
    """Re-runs selection once a ranked packet becomes selectable."""

    packet_id: str


@dataclass
class _EventQueue:
    _heap: list[tuple[float, int, int, Any]] = field(default_factory=list)
    _seq: itertools.count = field(default_factory=itertools.count)

    def push(self, time: float, rank: int, payload: Any) -> None:
        heapq.heappush(self._heap, (time, rank, next(self._seq), payload))

    def peek_time(self) -> float | None:
        return self._heap[0][0] if self._heap else None

    def pop_at(self, time: float) -> list[Any]:
        due = []
        while self._heap and self._heap[0][0] <= time:
            due.append(heapq.heappop(self._heap)[3])
        return due


class Simulation:
    """Feeds scenario events through the engine layers in one deterministic loop."""

    def __init__(
        self, scenario: Scenario, cfg: EngineConfig, decomposer: str = "scripted"
    ) -> None:
        self.scenario = scenario
        self.cfg = cfg
        self.recorder = TranscriptRecorder()
        self.decomposer = build_decomposer(
            decomposer,
            DecomposerContext(
                script=scenario.decompositions, vocabulary=scenario.dataset_classes
            ),
        )
        self.pipeline = DescriptionPipeline(ScriptedDescriber(scenario.outputs), cfg)
        self.scorer = ScriptedSentenceScorer(scenario.outputs)
        self.embedder = ScriptedEmbedder(scenario.embeddings) if scenario.embeddings else None
        self.profile: IntentProfile = default_profile(scenario.dataset_classes)
        self.keyframes = KeyframeState()
        self.buffer = DescriptionBuffer(history_window=cfg.spoken_history_window)
        self.playback: PlaybackState = initial_state(cfg)
        self.context: FreshnessContext | None = None
        self.queue = _EventQueue()
        self.now = 0.0
        self._open_utterance: dict[str, Any] | None = None

    def run(self) -> Transcript:
        for frame in self.scenario.frames:
            self.queue.push(frame.timestamp, _FRAME, frame)
        for command in self.scenario.intents:
            self.queue.push(command.timestamp, _INTENT, command)
        for sound in self.scenario.sounds:
            self.queue.push(sound.timestamp, _SOUND, sound)

        while True:
            pending = [
                t for t in (self.queue.peek_time(), self.playback.finish_time()) if t is not None
            ]
            if not pending:
                # Nothing scheduled: one last chance to start a buffered utterance.
                self._tick(self.now)
                if self.playback.finish_time() is None:
                    break
                continue
            self.now = max(self.now, min(pending))
            self._complete(self.now)
            for payload in self.queue.pop_at(self.now):
                self._dispatch(payload)
            self._tick(self.now)

        self.playback, events = abandon(self.playback, self.now)
        self._record_playback(events)
        return self.recorder.to_transcript(self._header())

    def _header(self) -> dict[str, Any]:
        return {
            "format": TRANSCRIPT_FORMAT_VERSION,
            "scenario_fingerprint": self.scenario.fingerprint,
            "config": self.cfg.to_dict(),
        }

    # -- dispatch ---------------------------------------------------------

    def _dispatch(self, payload: Any) -> None:
        if isinstance(payload, FrameRecord):
            self._on_frame(payload)
        elif isinstance(payload, DescriptionPacket):
            self._on_packet(payload)
        elif isinstance(payload, IntentCommand):
            self._on_intent(payload)
        elif isinstance(payload, SoundEvent):
            self.playback, events = handle_sound(
                self.playback, payload, self.scenario.policy, self.cfg
            )
            self._record_playback(events)

    def _on_frame(self, frame: FrameRecord) -> None:
        if self.cfg.restrict_to_intent_classes:
            wanted = {c.lower() for c in self.profile.object_classes}
            kept = tuple(d for d in frame.detections if d.class_label.lower() in wanted)
            frame = replace(frame, detections=kept)
        self.context = FreshnessContext(
            current_composition=composition_of(frame.detections),
            current_orientation_deg=frame.orientation_deg,
            current_feature_vector=frame.feature_vector,
        )
        decision, self.keyframes = process_frame(self.keyframes, frame, self.cfg)
        if not decision.is_keyframe:
            return
        assert decision.reason is not None
        self.recorder.record(
            "keyframe",
            self.now,
            frame_id=frame.frame_id,
            reason=decision.reason.value,
            detail_trigger=decision.detail_trigger,
        )
        for packet in self.pipeline.on_keyframe(
            decision, frame, self.profile, self.now, sink=self.recorder
        ):
            self.queue.push(packet.ready_at, _COMPLETION, packet)

    def _on_packet(self, packet: DescriptionPacket) -> None:
        order = None
        available_at = packet.ready_at
        if packet.tier is Tier.DETAILED:
            ranked = rank_sentences(
                self.scorer.score(packet, self.profile), self.cfg.sim_split_threshold
            )
            order = [s.source_index for s in ranked]
            available_at += self.cfg.prioritization_latency
        on_result(self.buffer, packet, order, available_at)
        self.recorder.record(
            "packet",
            self.now,
            packet_id=packet.packet_id,
            tier=packet.tier.value,
            frame_id=packet.referenced_frame_id,
            requested_at=packet.requested_at,
            ready_at=packet.ready_at,
            sentences=len(packet.sentences),
            order=order,
            verbosity=packet.verbosity_used.value if packet.verbosity_used else None,
        )
        if available_at > self.now:
            self.queue.push(available_at, _COMPLETION, _Wake(packet.packet_id))

    def _on_intent(self, command: IntentCommand) -> None:
        try:
            self.profile = self._apply(command)
        except (DomainError, ProviderError) as exc:
            logger.warning("intent command at %.3f rejected: %s", command.timestamp, exc)
            self.recorder.record(
                "intent_error", self.now, action=command.action, error=str(exc)
            )
            return
        self.recorder.record(
            "intent",
            self.now,
            action=command.action,
            intent_kind=self.profile.kind.value,
            classes=list(self.profile.object_classes),
            verbosity_mode=self.profile.verbosity_mode.value,
        )

    def _apply(self, command: IntentCommand) -> IntentProfile:
        if command.text is not None:
            return set_intent(self.profile, command.text, self.decomposer)
        if command.attribute is not None:
            return apply_attribute_command(self.profile, command.attribute, command.level or "")
        if command.verbosity_mode is not None:
            return set_verbosity_mode(self.profile, command.verbosity_mode)
        return merge_classes(self.profile, add=command.add, remove=command.remove)

    # -- speech -----------------------------------------------------------

    def _complete(self, now: float) -> None:
        self.playback, events = complete_due(self.playback, now, self.cfg)
        self._record_playback(events)

    def _tick(self, now: float) -> None:
        self.playback, events = tick(self.playback, lambda: self._select(now), now, self.cfg)
        self._record_playback(events)

    def _select(self, now: float) -> Utterance | None:
        selection = select_next(
            self.buffer, self.context, now, self.cfg, self.embedder, sink=self.recorder
        )
        if selection is None:
            return None
        return Utterance(
            text=selection.text,
            tier=selection.tier,
            packet_id=selection.packet.packet_id,
            frame_id=selection.packet.referenced_frame_id,
            source_index=selection.source_index,
            requested_at=selection.packet.requested_at,
        )

    def _record_playback(self, events: list[PresenterEvent]) -> None:
        for event in events:
            if event.kind == "started":
                assert event.active is not None
                utterance = event.active.utterance
                self._open_utterance = self.recorder.open(
                    "utterance",
                    event.time,
                    text=utterance.text,
                    tier=utterance.tier.value,
                    packet_id=utterance.packet_id,
                    frame_id=utterance.frame_id,
                    source_index=utterance.source_index,
                    requested_at=utterance.requested_at,
                    start=event.time,
                )
            elif event.kind == "finished":
                assert event.active is not None and self._open_utterance is not None
                self._open_utterance.update(
                    end=event.time,
                    volume_profile=[list(segment) for segment in event.active.segments],
                    completed=event.completed,
                )
                self.buffer.remember_spoken(event.active.utterance.text)
                self._open_utterance = None
            else:
                fields: dict[str, Any] = {"label": event.label}
                if event.volume is not None:
                    fields["volume"] = event.volume
                self.recorder.record(event.kind, event.time, **fields)


def run(
    scenario: Scenario, cfg: EngineConfig | None = None, decomposer: str = "scripted"
) -> Transcript:
    """Simulate *scenario*; without *cfg* the scenario's own config records apply."""
    effective = cfg if cfg is not None else scenario.config()
    result = validate_config(effective)
    if not result.ok:
        first = result.violations[0]
        raise ConfigError(first.field, first.message)
    return Simulation(scenario, effective, decomposer).run()
