"""Tests for the speech channel and the sound policy."""

from __future__ import annotations

import pytest
from scene_narrator.core import EngineConfig, Tier
from scene_narrator.presenter import (
    PlaybackState,
    SoundAction,
    SoundEvent,
    SoundPhase,
    SoundPolicy,
    Utterance,
    abandon,
    complete_due,
    handle_sound,
    initial_state,
    tick,
)


POLICY = SoundPolicy()


def _utterance(text: str = "one two three four five six") -> Utterance:
    return Utterance(text, Tier.LABEL, "f0-label", 0, 0, 0.0)


def _start(state: PlaybackState, now: float, cfg: EngineConfig, text: str = "one two three four five six"):
    state, events = tick(state, lambda: _utterance(text), now, cfg)
    assert events[-1].kind == "started"
    return state


def _sound(label: str, phase: SoundPhase, at: float, confidence: float = 1.0) -> SoundEvent:
    return SoundEvent(label, phase, at, confidence)


class TestSoundPolicy:
    """Test label lookup and overrides."""

    def test_defaults(self) -> None:
        """Test the default label actions."""
        assert POLICY.action_for("Speech") is SoundAction.PAUSE
        assert POLICY.action_for("typing") is SoundAction.VOLUME_HIGH
        assert POLICY.action_for("dog bark") is None

    def test_override(self) -> None:
        """Test adding and removing rules."""
        policy = POLICY.with_rule("Doorbell", SoundAction.PAUSE).with_rule("typing", None)
        assert policy.action_for("doorbell") is SoundAction.PAUSE
        assert policy.action_for("typing") is None


class TestTick:
    """Test starting and completing utterances."""

    def test_duration_from_rate(self, cfg: EngineConfig) -> None:
        """Test that six words at three words per second take two seconds."""
        state = _start(initial_state(cfg), 1.0, cfg)
        assert state.finish_time() == pytest.approx(3.0)
        state, events = complete_due(state, 3.0, cfg)
        assert state.idle
        assert events[0].active.segments == ((1.0, 3.0, 1.0),)

    def test_busy_channel_does_not_select(self, cfg: EngineConfig) -> None:
        """Test that selection is not consulted while speaking."""
        state = _start(initial_state(cfg), 0.0, cfg)
        calls = []
        tick(state, lambda: calls.append(1), 1.0, cfg)
        assert calls == []

    def test_nothing_to_say(self, cfg: EngineConfig) -> None:
        """Test an idle tick with an empty selection."""
        state, events = tick(initial_state(cfg), lambda: None, 0.0, cfg)
        assert state.idle and events == []


class TestPause:
    """Test pausing for speech in the room."""

    def test_pause_and_resume(self, cfg: EngineConfig) -> None:
        """Test that a pause stretches the utterance and splits its audio."""
        state = _start(initial_state(cfg), 0.0, cfg)
        state, events = handle_sound(state, _sound("speech", SoundPhase.START, 1.0), POLICY, cfg)
        assert [e.kind for e in events] == ["pause"]
        assert state.finish_time() is None
        state, events = handle_sound(state, _sound("speech", SoundPhase.END, 4.0), POLICY, cfg)
        assert [e.kind for e in events] == ["resume"]
        assert state.finish_time() == pytest.approx(5.0)
        state, events = complete_due(state, 5.0, cfg)
        assert events[0].active.segments == ((0.0, 1.0, 1.0), (4.0, 5.0, 1.0))

    def test_no_start_while_paused(self, cfg: EngineConfig) -> None:
        """Test that nothing starts while paused."""
        state, _ = handle_sound(initial_state(cfg), _sound("speech", SoundPhase.START, 0.0), POLICY, cfg)
        state, events = tick(state, _utterance, 1.0, cfg)
        assert state.idle and events == []

    def test_end_without_start(self, cfg: EngineConfig) -> None:
        """Test that an unmatched end is ignored."""
        state = initial_state(cfg)
        new_state, events = handle_sound(state, _sound("speech", SoundPhase.END, 1.0), POLICY, cfg)
        assert new_state == state and events == []

    def test_low_confidence_ignored(self, cfg: EngineConfig) -> None:
        """Test that starts below the confidence floor are ignored."""
        strict = EngineConfig(min_sound_confidence=0.5)
        state, events = handle_sound(
            initial_state(strict), _sound("speech", SoundPhase.START, 0.0, 0.3), POLICY, strict
        )
        assert not state.paused and events == []

    def test_abandon_while_paused(self, cfg: EngineConfig) -> None:
        """Test that an utterance paused forever closes incomplete."""
        state = _start(initial_state(cfg), 0.0, cfg)
        state, _ = handle_sound(state, _sound("speech", SoundPhase.START, 1.0), POLICY, cfg)
        state, events = abandon(state, 9.0)
        assert state.idle
        assert events[0].completed is False
        assert events[0].active.segments == ((0.0, 1.0, 1.0),)


class TestVolume:
    """Test raising the volume over background noise."""

    def test_boost_splits_segments(self, cfg: EngineConfig) -> None:
        """Test that the boosted stretch is recorded at 1.5."""
        state = _start(initial_state(cfg), 0.0, cfg)
        state, events = handle_sound(state, _sound("typing", SoundPhase.START, 0.5), POLICY, cfg)
        assert events[0].volume == 1.5
        state, _ = handle_sound(state, _sound("typing", SoundPhase.END, 1.5), POLICY, cfg)
        state, events = complete_due(state, 2.0, cfg)
        assert events[0].active.segments == ((0.0, 0.5, 1.0), (0.5, 1.5, 1.5), (1.5, 2.0, 1.0))

    def test_overlapping_boosts(self, cfg: EngineConfig) -> None:
        """Test that volume stays high until the last boosting sound ends."""
        state = initial_state(cfg)
        state, _ = handle_sound(state, _sound("typing", SoundPhase.START, 0.0), POLICY, cfg)
        state, _ = handle_sound(state, _sound("ringtone", SoundPhase.START, 1.0), POLICY, cfg)
        state, events = handle_sound(state, _sound("typing", SoundPhase.END, 2.0), POLICY, cfg)
        assert state.volume == 1.5 and events == []
        state, events = handle_sound(state, _sound("ringtone", SoundPhase.END, 3.0), POLICY, cfg)
        assert state.volume == 1.0 and events[0].volume == 1.0

    def test_boost_before_start(self, cfg: EngineConfig) -> None:
        """Test that an utterance starting during a boost starts loud."""
        state, _ = handle_sound(initial_state(cfg), _sound("ringtone", SoundPhase.START, 0.0), POLICY, cfg)
        state = _start(state, 1.0, cfg)
        state, events = complete_due(state, 3.0, cfg)
        assert events[0].active.segments == ((1.0, 3.0, 1.5),)
