"""Speech channel: one utterance at a time, paused or boosted by environmental sounds."""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field, replace
from enum import Enum

from scene_narrator.core import EngineConfig, Tier


logger = logging.getLogger(__name__)


class SoundPhase(str, Enum):
    START = "start"
    END = "end"


class SoundAction(str, Enum):
    PAUSE = "pause"
    VOLUME_HIGH = "volume_high"


@dataclass(frozen=True)
class SoundEvent:
    label: str
    phase: SoundPhase
    timestamp: float
    confidence: float = 1.0


DEFAULT_SOUND_RULES: dict[str, SoundAction] = {
    "speech": SoundAction.PAUSE,
    "typing": SoundAction.VOLUME_HIGH,
    "ringtone": SoundAction.VOLUME_HIGH,
}


@dataclass(frozen=True)
class SoundPolicy:
    rules: Mapping[str, SoundAction] = field(default_factory=lambda: dict(DEFAULT_SOUND_RULES))

    def action_for(self, label: str) -> SoundAction | None:
        return self.rules.get(label.lower())

    def with_rule(self, label: str, action: SoundAction | None) -> SoundPolicy:
        rules = dict(self.rules)
        if action is None:
            rules.pop(label.lower(), None)
        else:
            rules[label.lower()] = action
        return SoundPolicy(rules)


@dataclass(frozen=True)
class Utterance:
    text: str
    tier: Tier
    packet_id: str
    frame_id: int
    source_index: int
    requested_at: float

    @property
    def words(self) -> int:
        return max(1, len(self.text.split()))


@dataclass(frozen=True)
class ActiveUtterance:
    utterance: Utterance
    started_at: float
    seconds_remaining: float
    # Start of the audible stretch in progress; None while paused.
    segment_start: float | None
    segment_volume: float
    segments: tuple[tuple[float, float, float], ...] = ()


@dataclass(frozen=True)
class PlaybackState:
    current: ActiveUtterance | None = None
    paused_by: frozenset[str] = frozenset()
    boosted_by: frozenset[str] = frozenset()
    volume: float = 1.0

    @property
    def idle(self) -> bool:
        return self.current is None

    @property
    def paused(self) -> bool:
        return bool(self.paused_by)

    def finish_time(self) -> float | None:
        cur = self.current
        if cur is None or cur.segment_start is None:
            return None
        return cur.segment_start + cur.seconds_remaining


@dataclass(frozen=True)
class PresenterEvent:
    """Something the speech channel did; `active` is set for started/finished only."""

    kind: str
    time: float
    label: str | None = None
    volume: float | None = None
    active: ActiveUtterance | None = None
    completed: bool = True


def initial_state(cfg: EngineConfig) -> PlaybackState:
    return PlaybackState(volume=cfg.volume_normal)


def _close_segment(cur: ActiveUtterance, now: float) -> ActiveUtterance:
    if cur.segment_start is None:
        return cur
    played = now - cur.segment_start
    segments = cur.segments
    if played > 0:
        segments = (*segments, (cur.segment_start, now, cur.segment_volume))
    return replace(
        cur,
        seconds_remaining=max(0.0, cur.seconds_remaining - played),
        segment_start=None,
        segments=segments,
    )


def _open_segment(cur: ActiveUtterance, now: float, volume: float) -> ActiveUtterance:
    return replace(cur, segment_start=now, segment_volume=volume)


def handle_sound(
    state: PlaybackState,
    event: SoundEvent,
    policy: SoundPolicy,
    cfg: EngineConfig,
) -> tuple[PlaybackState, list[PresenterEvent]]:
    now = event.timestamp
    label = event.label.lower()
    action = policy.action_for(label)
    if action is None:
        return state, []
    if event.phase is SoundPhase.START and event.confidence < cfg.min_sound_confidence:
        logger.debug("ignoring low-confidence %s (%.2f)", label, event.confidence)
        return state, []

    active_set = state.paused_by if action is SoundAction.PAUSE else state.boosted_by
    if event.phase is SoundPhase.END and label not in active_set:
        logger.warning("sound '%s' ended at %.3f without a matching start", label, now)
        return state, []
    if event.phase is SoundPhase.START and label in active_set:
        return state, []

    if action is SoundAction.PAUSE:
        return _apply_pause(state, label, event.phase, now, cfg)
    return _apply_volume(state, label, event.phase, now, cfg)


def _apply_pause(
    state: PlaybackState, label: str, phase: SoundPhase, now: float, cfg: EngineConfig
) -> tuple[PlaybackState, list[PresenterEvent]]:
    was_paused = state.paused
    if phase is SoundPhase.START:
        paused_by = state.paused_by | {label}
    else:
        paused_by = state.paused_by - {label}
    new_state = replace(state, paused_by=paused_by)
    events: list[PresenterEvent] = []
    if not was_paused and new_state.paused:
        if new_state.current is not None:
            new_state = replace(new_state, current=_close_segment(new_state.current, now))
        events.append(PresenterEvent("pause", now, label=label))
    elif was_paused and not new_state.paused:
        if new_state.current is not None:
            opened = _open_segment(new_state.current, now, new_state.volume)
            new_state = replace(new_state, current=opened)
        events.append(PresenterEvent("resume", now, label=label))
    return new_state, events


def _apply_volume(
    state: PlaybackState, label: str, phase: SoundPhase, now: float, cfg: EngineConfig
) -> tuple[PlaybackState, list[PresenterEvent]]:
    if phase is SoundPhase.START:
        boosted_by = state.boosted_by | {label}
    else:
        boosted_by = state.boosted_by - {label}
    volume = cfg.volume_high if boosted_by else cfg.volume_normal
    new_state = replace(state, boosted_by=boosted_by, volume=volume)
    if volume == state.volume:
        return new_state, []
    cur = new_state.current
    if cur is not None and cur.segment_start is not None:
        cur = _open_segment(_close_segment(cur, now), now, volume)
        new_state = replace(new_state, current=cur)
    return new_state, [PresenterEvent("volume", now, label=label, volume=volume)]


def complete_due(
    state: PlaybackState, now: float, cfg: EngineConfig
) -> tuple[PlaybackState, list[PresenterEvent]]:
    """Finish the current utterance if its last word has been spoken by *now*."""
    finish = state.finish_time()
    if finish is None or finish > now:
        return state, []
    assert state.current is not None
    done = _close_segment(state.current, finish)
    return replace(state, current=None), [PresenterEvent("finished", finish, active=done)]


def tick(
    state: PlaybackState,
    select: Callable[[], Utterance | None],
    now: float,
    cfg: EngineConfig,
) -> tuple[PlaybackState, list[PresenterEvent]]:
    state, events = complete_due(state, now, cfg)
    if not state.idle or state.paused:
        return state, events
    utterance = select()
    if utterance is None:
        return state, events
    active = ActiveUtterance(
        utterance=utterance,
        started_at=now,
        seconds_remaining=utterance.words / cfg.speaking_rate_wps,
        segment_start=now,
        segment_volume=state.volume,
    )
    events.append(PresenterEvent("started", now, active=active))
    return replace(state, current=active), events


def abandon(state: PlaybackState, now: float) -> tuple[PlaybackState, list[PresenterEvent]]:
    """Close an utterance that can never finish (its pause outlived every input)."""
    if state.current is None:
        return state, []
    cut = _close_segment(state.current, now)
    return replace(state, current=None), [
        PresenterEvent("finished", now, active=cut, completed=False)
    ]
