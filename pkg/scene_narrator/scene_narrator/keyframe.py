"""Keyframe extraction: decide per frame whether it starts a round of descriptions."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from scene_narrator.core import (
    Composition,
    Detection,
    DomainError,
    EngineConfig,
    FrameRecord,
    SequencingError,
)


logger = logging.getLogger(__name__)


class KeyframeKind(str, Enum):
    NOT_KEYFRAME = "not_keyframe"
    KEYFRAME = "keyframe"


class KeyframeReason(str, Enum):
    """Rules in priority order; the first one that fires is recorded."""

    BOOTSTRAP = "bootstrap"
    ORIENTATION_SHIFT = "orientation_shift"
    STABLE_COMPOSITION = "stable_composition"
    EMPTY_FALLBACK = "empty_fallback"
    DRIFT_PERIODIC = "drift_periodic"


@dataclass(frozen=True)
class KeyframeDecision:
    kind: KeyframeKind
    reason: KeyframeReason | None = None
    detail_trigger: bool = False

    def __post_init__(self) -> None:
        if self.detail_trigger and self.kind is not KeyframeKind.KEYFRAME:
            raise DomainError("detail_trigger requires a keyframe")

    @property
    def is_keyframe(self) -> bool:
        return self.kind is KeyframeKind.KEYFRAME


NOT_KEYFRAME = KeyframeDecision(KeyframeKind.NOT_KEYFRAME)


@dataclass(frozen=True)
class KeyframeRef:
    frame_id: int
    orientation_deg: float
    composition: Composition
    feature_vector: tuple[float, ...]


@dataclass(frozen=True)
class KeyframeState:
    last_keyframe: KeyframeRef | None = None
    recent_compositions: tuple[Composition, ...] = ()
    keyframe_streak: int = 0
    frames_since_differing_check: int = 0
    previous_composition: Composition | None = None
    last_frame_id: int | None = None


def orientation_delta(a: float, b: float) -> float:
    """Minimal circular distance between two yaw angles, in [0, 180]."""
    for angle in (a, b):
        if not 0.0 <= angle < 360.0:
            raise DomainError(f"angle {angle} is not in [0, 360)")
    diff = abs(a - b) % 360.0
    return min(diff, 360.0 - diff)


def composition_of(detections: Sequence[Detection]) -> Composition:
    return Composition.of((d.track_id, d.class_label) for d in detections)


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    a = np.asarray(u, dtype=float)
    b = np.asarray(v, dtype=float)
    if a.ndim != 1 or a.shape != b.shape or a.size == 0:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise DomainError("cosine similarity of a zero vector is undefined")
    value = float(np.dot(a, b) / (norm_a * norm_b))
    return max(-1.0, min(1.0, value))


def process_frame(
    state: KeyframeState, frame: FrameRecord, cfg: EngineConfig
) -> tuple[KeyframeDecision, KeyframeState]:
    if state.last_frame_id is not None and frame.frame_id <= state.last_frame_id:
        raise SequencingError(
            f"frame {frame.frame_id} arrived after frame {state.last_frame_id}"
        )

    composition = composition_of(frame.detections)
    window = (*state.recent_compositions, composition)[-cfg.n :]
    drift_run = _extend_drift_run(state, composition)

    reason = _first_rule(state, frame, composition, window, drift_run, cfg)
    if reason is None:
        return NOT_KEYFRAME, replace(
            state,
            recent_compositions=window,
            frames_since_differing_check=drift_run,
            previous_composition=composition,
            last_frame_id=frame.frame_id,
        )

    last = state.last_keyframe
    if last is not None and last.composition == composition:
        streak = state.keyframe_streak + 1
    else:
        streak = 1
    trigger = streak >= cfg.m and bool(composition)
    decision = KeyframeDecision(KeyframeKind.KEYFRAME, reason, trigger)
    logger.debug(
        "frame %d keyframe (%s) streak=%d trigger=%s",
        frame.frame_id,
        reason.value,
        streak,
        trigger,
    )
    # Every keyframe re-anchors orientation and similarity and restarts both windows.
    new_state = KeyframeState(
        last_keyframe=KeyframeRef(
            frame_id=frame.frame_id,
            orientation_deg=frame.orientation_deg,
            composition=composition,
            feature_vector=frame.feature_vector,
        ),
        recent_compositions=(),
        keyframe_streak=streak,
        frames_since_differing_check=0,
        previous_composition=composition,
        last_frame_id=frame.frame_id,
    )
    return decision, new_state


def _extend_drift_run(state: KeyframeState, composition: Composition) -> int:
    if not composition:
        return 0
    previous = state.previous_composition
    if state.frames_since_differing_check == 0 or previous is None:
        return 1
    if composition != previous:
        return state.frames_since_differing_check + 1
    return 1


def _first_rule(
    state: KeyframeState,
    frame: FrameRecord,
    composition: Composition,
    window: tuple[Composition, ...],
    drift_run: int,
    cfg: EngineConfig,
) -> KeyframeReason | None:
    last = state.last_keyframe
    if last is None:
        return KeyframeReason.BOOTSTRAP

    if orientation_delta(last.orientation_deg, frame.orientation_deg) >= cfg.orientation_unit_deg:
        return KeyframeReason.ORIENTATION_SHIFT

    window_full = len(window) == cfg.n
    if window_full and composition and all(c == composition for c in window):
        return KeyframeReason.STABLE_COMPOSITION

    if window_full and not any(window):
        similarity = _similarity_or_none(frame.feature_vector, last.feature_vector)
        if similarity is None or similarity < cfg.thres:
            return KeyframeReason.EMPTY_FALLBACK

    if drift_run >= 2 * cfg.n:
        return KeyframeReason.DRIFT_PERIODIC
    return None


def _similarity_or_none(u: Sequence[float], v: Sequence[float]) -> float | None:
    # Missing or zero embeddings cannot prove the scene is unchanged.
    try:
        return cosine_similarity(u, v)
    except DomainError:
        return None
