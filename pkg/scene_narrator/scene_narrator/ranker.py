"""Prioritisation: order Detailed sentences and pick the next utterance from the buffer."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from scene_narrator.core import (
    TIERS_BY_RICHNESS,
    Composition,
    DomainError,
    EngineConfig,
    EventSink,
    Tier,
)
from scene_narrator.genpipe import BufferEntry, DescriptionBuffer, DescriptionPacket
from scene_narrator.intent import IntentProfile
from scene_narrator.keyframe import cosine_similarity, orientation_delta
from scene_narrator.providers import (
    DepthEstimator,
    Embedder,
    RegionLocator,
    ScriptedOutput,
    normalize_text,
)


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RankedSentence:
    text: str
    sim_score: float
    depth_score: float
    source_index: int

    def __post_init__(self) -> None:
        if self.depth_score < 0:
            raise DomainError(f"depth_score {self.depth_score} is negative")


@dataclass(frozen=True)
class FreshnessContext:
    current_composition: Composition
    current_orientation_deg: float
    current_feature_vector: tuple[float, ...]


@dataclass(frozen=True)
class DepthResult:
    value: float
    empty_mask: bool = False


def depth_score(
    mask: Iterable[tuple[int, int]], depth_map: Sequence[Sequence[float]]
) -> DepthResult:
    """Mean depth under *mask* (row, col); an empty mask scores 0, the farthest value."""
    grid = np.asarray(depth_map, dtype=float)
    cells = sorted(set(mask))
    if not cells:
        return DepthResult(0.0, empty_mask=True)
    rows, cols = zip(*cells)
    height, width = grid.shape
    if min(rows) < 0 or min(cols) < 0 or max(rows) >= height or max(cols) >= width:
        raise DomainError("mask reaches outside the depth map")
    return DepthResult(float(grid[list(rows), list(cols)].mean()))


def rank_sentences(sentences: Sequence[RankedSentence], threshold: float) -> list[RankedSentence]:
    """Intent-relevant sentences by similarity, then the rest nearest first."""
    relevant = [s for s in sentences if s.sim_score >= threshold]
    rest = [s for s in sentences if s.sim_score < threshold]
    relevant.sort(key=lambda s: (-s.sim_score, s.source_index))
    rest.sort(key=lambda s: (-s.depth_score, s.source_index))
    return relevant + rest


def is_up_to_date(
    packet: DescriptionPacket, ctx: FreshnessContext, cfg: EngineConfig
) -> bool:
    if packet.referenced_composition == ctx.current_composition:
        return True
    delta = orientation_delta(packet.referenced_orientation_deg, ctx.current_orientation_deg)
    if delta < cfg.orientation_unit_deg:
        return True
    try:
        similarity = cosine_similarity(
            packet.referenced_feature_vector, ctx.current_feature_vector
        )
    except DomainError:
        return False
    return similarity >= cfg.thres


def is_redundant(
    text: str,
    history: Iterable[str],
    embedder: Embedder | None = None,
    threshold: float = 0.85,
) -> bool:
    normalized = normalize_text(text)
    vector = embedder.embed(text) if embedder is not None else None
    for previous in history:
        if normalize_text(previous) == normalized:
            return True
        if vector is None or embedder is None:
            continue
        other = embedder.embed(previous)
        if other is None:
            continue
        try:
            if cosine_similarity(vector, other) >= threshold:
                return True
        except DomainError:
            continue
    return False


@dataclass(frozen=True)
class Selection:
    text: str
    packet: DescriptionPacket
    source_index: int

    @property
    def tier(self) -> Tier:
        return self.packet.tier


def select_next(
    buffer: DescriptionBuffer,
    ctx: FreshnessContext | None,
    now: float,
    cfg: EngineConfig,
    embedder: Embedder | None = None,
    sink: EventSink | None = None,
) -> Selection | None:
    """Richest tier first, newest frame first; stale candidates evict everything older."""
    if ctx is None:
        return None
    for tier in TIERS_BY_RICHNESS:
        candidates = sorted(
            (e for e in buffer.entries if e.tier is tier and e.available_at <= now),
            key=lambda e: -e.frame_id,
        )
        for entry in candidates:
            if not any(e is entry for e in buffer.entries):
                continue
            if not is_up_to_date(entry.packet, ctx, cfg):
                evicted = buffer.evict_older_than(entry)
                logger.debug("stale %s evicted %s", entry.packet.packet_id, evicted)
                if sink is not None:
                    sink.record(
                        "eviction", now, packet_id=entry.packet.packet_id, evicted=evicted
                    )
                continue
            selection = _next_sentence(buffer, entry, now, cfg, embedder, sink)
            if selection is not None:
                return selection
    return None


def _next_sentence(
    buffer: DescriptionBuffer,
    entry: BufferEntry,
    now: float,
    cfg: EngineConfig,
    embedder: Embedder | None,
    sink: EventSink | None,
) -> Selection | None:
    while entry.pending:
        index, text = entry.pending.pop(0)
        if is_redundant(text, buffer.spoken_history, embedder, cfg.redundancy_threshold):
            logger.debug("skipping redundant sentence from %s", entry.packet.packet_id)
            if sink is not None:
                sink.record(
                    "skip", now, packet_id=entry.packet.packet_id, source_index=index, text=text
                )
            continue
        if not entry.pending:
            buffer.remove(entry)
        return Selection(text=text, packet=entry.packet, source_index=index)
    buffer.remove(entry)
    return None


# ---------------------------------------------------------------------------
# Sentence scorers
# ---------------------------------------------------------------------------


@dataclass
class ScriptedSentenceScorer:
    """Serves (sim, depth) pairs scripted per Detailed output."""

    outputs: Mapping[tuple[int, Tier], ScriptedOutput] = field(default_factory=dict)

    def score(self, packet: DescriptionPacket, profile: IntentProfile) -> list[RankedSentence]:
        scripted = self.outputs.get((packet.referenced_frame_id, packet.tier))
        scored = []
        for i, text in enumerate(packet.sentences):
            if scripted is None or i >= len(scripted.sim_scores):
                sim, depth = 0.0, 0.0
            else:
                sim, depth = scripted.sim_scores[i], scripted.depth_scores[i]
            scored.append(RankedSentence(text, sim, depth, i))
        return scored


@dataclass
class ComputedSentenceScorer:
    """Similarity to the intent text by embedding, proximity by mean depth of the located region."""

    embedder: Embedder
    locator: RegionLocator
    depth: DepthEstimator

    def score(self, packet: DescriptionPacket, profile: IntentProfile) -> list[RankedSentence]:
        intent_vector = self.embedder.embed(profile.raw_text) if profile.raw_text else None
        depth_map = self.depth.depth_map(packet.referenced_frame_id)
        scored = []
        for i, text in enumerate(packet.sentences):
            sim = 0.0
            vector = self.embedder.embed(text)
            if intent_vector is not None and vector is not None:
                sim = cosine_similarity(vector, intent_vector)
            result = depth_score(self.locator.locate(text, packet.referenced_frame_id), depth_map)
            if result.empty_mask:
                logger.info("no region located for sentence %d of %s", i, packet.packet_id)
            scored.append(RankedSentence(text, sim, result.value, i))
        return scored
