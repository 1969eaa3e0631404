"""Description generation: launch all tiers per keyframe and buffer what comes back."""

from __future__ import annotations

import bisect
import logging
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field

from scene_narrator.core import (
    Composition,
    DomainError,
    DuplicatePacketError,
    EngineConfig,
    EventSink,
    FrameRecord,
    Tier,
)
from scene_narrator.intent import (
    Attribute,
    AttributeLevel,
    IntentProfile,
    Verbosity,
    VerbosityMode,
)
from scene_narrator.keyframe import KeyframeDecision, composition_of
from scene_narrator.providers import Describer, DescriptionRequest


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DescriptionPacket:
    packet_id: str
    tier: Tier
    sentences: tuple[str, ...]
    referenced_frame_id: int
    referenced_orientation_deg: float
    referenced_composition: Composition
    referenced_feature_vector: tuple[float, ...]
    requested_at: float
    ready_at: float
    verbosity_used: Verbosity | None = None

    def __post_init__(self) -> None:
        if not self.sentences:
            raise DomainError(f"packet {self.packet_id} carries no sentences")
        if self.tier is not Tier.DETAILED and len(self.sentences) != 1:
            raise DomainError(f"{self.tier.value} packets carry exactly one sentence")
        if self.ready_at < self.requested_at:
            raise DomainError(f"packet {self.packet_id} is ready before it was requested")


def packet_id_for(frame_id: int, tier: Tier) -> str:
    return f"f{frame_id}-{tier.value}"


# ---------------------------------------------------------------------------
# Verbosity and prompt
# ---------------------------------------------------------------------------


def select_verbosity(
    profile: IntentProfile, trigger: bool, intent_hits_streak: int, concise_streak: int = 2
) -> Verbosity:
    if intent_hits_streak < 0:
        raise DomainError("intent_hits_streak must be non-negative")
    if profile.verbosity_mode is not VerbosityMode.ADAPTIVE:
        return Verbosity(profile.verbosity_mode.value)
    if trigger:
        return Verbosity.VERBOSE
    if intent_hits_streak >= concise_streak:
        return Verbosity.CONCISE
    return Verbosity.NORMAL


PROMPT_TEMPLATE = (
    "You are a helpful visual describer, who can see and describe for BVI people. "
    "You will not mention this is an image; just describe it, and also don't mention "
    "camera blur or motion. Please ensure you provide these adjectives to enrich the "
    "descriptions {attributes}, you should describe each object with ONLY ONE sentence "
    "at maximum. Don't use 'it' to refer to an object. Most importantly, each sentence "
    "should be {length}."
)

LENGTH_CONSTRAINTS: dict[Verbosity, str] = {
    Verbosity.VERBOSE: "over 15 words",
    Verbosity.NORMAL: "at least 10 words",
    Verbosity.CONCISE: "less than 5 words",
}

EXAMPLE_ADJECTIVES: dict[Attribute, str] = {
    Attribute.COLOR: "red, silver, pale blue",
    Attribute.TEXTURE: "smooth, glossy, knitted",
    Attribute.MATERIAL: "wooden, metallic, woven",
    Attribute.SHAPE: "round, rectangular, cylindrical",
    Attribute.SPATIAL: "left of, on top of, behind",
}


def build_prompt(profile: IntentProfile, verbosity: Verbosity) -> str:
    verbose = [a for a in Attribute if profile.level(a) is AttributeLevel.VERBOSE]
    normal = [a for a in Attribute if profile.level(a) is AttributeLevel.NORMAL]
    slots = [f"{a.value} (e.g., {EXAMPLE_ADJECTIVES[a]})" for a in verbose]
    slots.extend(a.value for a in normal)
    return PROMPT_TEMPLATE.format(
        attributes="[" + ", ".join(slots) + "]",
        length=LENGTH_CONSTRAINTS[verbosity],
    )


def format_label_phrase(comp: Composition) -> str:
    labels = comp.class_labels()
    if not labels:
        raise DomainError("cannot phrase an empty composition")
    items = [f"{_article(label)} {label}" for label in labels]
    phrase = items[0] if len(items) == 1 else ", ".join(items[:-1]) + ", and " + items[-1]
    return phrase[0].upper() + phrase[1:]


def _article(word: str) -> str:
    return "an" if word[:1].lower() in "aeiou" else "a"


# ---------------------------------------------------------------------------
# Keyframe dispatch
# ---------------------------------------------------------------------------


@dataclass
class DescriptionPipeline:
    """Issues the Label, General and Detailed requests for every keyframe."""

    describer: Describer
    cfg: EngineConfig
    intent_hits_streak: int = 0

    def on_keyframe(
        self,
        decision: KeyframeDecision,
        frame: FrameRecord,
        profile: IntentProfile,
        now: float,
        sink: EventSink | None = None,
    ) -> list[DescriptionPacket]:
        if not decision.is_keyframe:
            raise DomainError("on_keyframe requires a keyframe decision")

        composition = composition_of(frame.detections)
        relevant = set(profile.relevant_classes(composition.class_labels()))
        self.intent_hits_streak = self.intent_hits_streak + 1 if len(relevant) >= 2 else 0
        verbosity = select_verbosity(
            profile, decision.detail_trigger, self.intent_hits_streak, self.cfg.concise_streak
        )

        packets: list[DescriptionPacket] = []
        if composition:
            phrase = format_label_phrase(composition)
            latency = self.cfg.latency(Tier.LABEL)
            packets.append(self._packet(frame, Tier.LABEL, (phrase,), now, latency, None))
        else:
            self._refused(frame, Tier.LABEL, now, sink, "no detections to label")

        for tier in (Tier.GENERAL, Tier.DETAILED):
            detailed = tier is Tier.DETAILED
            request = DescriptionRequest(
                tier=tier,
                frame=frame,
                requested_at=now,
                prompt=build_prompt(profile, verbosity) if detailed else None,
                verbosity=verbosity if detailed else None,
            )
            result = self.describer.describe(request)
            if result is None or not result.sentences:
                self._refused(frame, tier, now, sink, "provider declined")
                continue
            sentences = result.sentences if detailed else (" ".join(result.sentences),)
            latency = self.cfg.latency(tier) if result.latency is None else result.latency
            packets.append(
                self._packet(
                    frame, tier, sentences, now, latency, verbosity if detailed else None
                )
            )
        return packets

    def _packet(
        self,
        frame: FrameRecord,
        tier: Tier,
        sentences: tuple[str, ...],
        now: float,
        latency: float,
        verbosity: Verbosity | None,
    ) -> DescriptionPacket:
        return DescriptionPacket(
            packet_id=packet_id_for(frame.frame_id, tier),
            tier=tier,
            sentences=sentences,
            referenced_frame_id=frame.frame_id,
            referenced_orientation_deg=frame.orientation_deg,
            referenced_composition=composition_of(frame.detections),
            referenced_feature_vector=frame.feature_vector,
            requested_at=now,
            ready_at=now + latency,
            verbosity_used=verbosity,
        )

    @staticmethod
    def _refused(
        frame: FrameRecord, tier: Tier, now: float, sink: EventSink | None, why: str
    ) -> None:
        logger.debug("frame %d: %s request dropped (%s)", frame.frame_id, tier.value, why)
        if sink is not None:
            sink.record("refusal", now, frame_id=frame.frame_id, tier=tier.value, reason=why)


# ---------------------------------------------------------------------------
# Buffer
# ---------------------------------------------------------------------------


@dataclass
class BufferEntry:
    """A buffered packet plus the sentences still waiting to be spoken, in speaking order."""

    packet: DescriptionPacket
    pending: list[tuple[int, str]]
    available_at: float

    @property
    def tier(self) -> Tier:
        return self.packet.tier

    @property
    def frame_id(self) -> int:
        return self.packet.referenced_frame_id


@dataclass
class DescriptionBuffer:
    history_window: int = 5
    entries: list[BufferEntry] = field(default_factory=list)
    spoken_history: deque[str] = field(init=False)

    def __post_init__(self) -> None:
        self.spoken_history = deque(maxlen=self.history_window)

    @property
    def packets(self) -> list[DescriptionPacket]:
        return [entry.packet for entry in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def remember_spoken(self, text: str) -> None:
        self.spoken_history.append(text)

    def remove(self, entry: BufferEntry) -> None:
        self.entries = [e for e in self.entries if e is not entry]

    def evict_older_than(self, entry: BufferEntry) -> list[str]:
        """Drop *entry* and every packet referencing an older frame; return the evicted ids."""
        evicted = [
            e.packet.packet_id
            for e in self.entries
            if e is entry or e.frame_id < entry.frame_id
        ]
        self.entries = [
            e for e in self.entries if e is not entry and e.frame_id >= entry.frame_id
        ]
        return evicted


def on_result(
    buffer: DescriptionBuffer,
    packet: DescriptionPacket,
    order: Sequence[int] | None = None,
    available_at: float | None = None,
) -> DescriptionBuffer:
    """Insert *packet* in ready_at order; *order* gives sentence indices in speaking order."""
    if any(e.packet.packet_id == packet.packet_id for e in buffer.entries):
        raise DuplicatePacketError(f"packet {packet.packet_id} is already buffered")
    indices = list(order) if order is not None else list(range(len(packet.sentences)))
    entry = BufferEntry(
        packet=packet,
        pending=[(i, packet.sentences[i]) for i in indices],
        available_at=packet.ready_at if available_at is None else available_at,
    )
    keys = [e.packet.ready_at for e in buffer.entries]
    buffer.entries.insert(bisect.bisect_right(keys, packet.ready_at), entry)
    return buffer
