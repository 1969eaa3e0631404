"""Tests for scenario loading and validation."""

from __future__ import annotations

import json
import logging
import tempfile
from pathlib import Path

import pytest
from scene_narrator.core import Tier
from scene_narrator.presenter import SoundAction, SoundPhase
from scene_narrator.simkit import ScenarioError, load_scenario, parse_scenario, write_scenario
from scene_narrator.simkit.library import reference_scenario, scan_then_static


def _frame(frame_id: int, timestamp: float | None = None, **extra) -> str:
    record = {
        "kind": "frame",
        "frame_id": frame_id,
        "timestamp": frame_id * 0.2 if timestamp is None else timestamp,
        "orientation_deg": 0.0,
        "detections": [{"track_id": 1, "class_label": "desk"}],
        "feature_vector": [1.0, 0.0],
    }
    record.update(extra)
    return json.dumps(record)


def _lines(*records) -> list[str]:
    return [r if isinstance(r, str) else json.dumps(r) for r in records]


class TestLoadScenario:
    """Test parsing well-formed scenarios."""

    def test_minimal(self) -> None:
        """Test a single frame with no events."""
        scenario = parse_scenario([_frame(0)])
        assert len(scenario.frames) == 1
        assert scenario.frames[0].detections[0].class_label == "desk"

    def test_all_record_kinds(self) -> None:
        """Test every record kind in one file."""
        scenario = parse_scenario(
            _lines(
                {"kind": "config", "n": 4, "tier_latencies": {"general": 2.0}},
                {"kind": "classes", "classes": ["desk", "cup"]},
                _frame(0),
                _frame(1),
                {"kind": "output", "frame_id": 0, "tier": "general", "sentences": ["A desk."]},
                {
                    "kind": "output",
                    "frame_id": 0,
                    "tier": "detailed",
                    "sentences": ["One.", "Two."],
                    "sim_scores": [0.3, 0.1],
                    "depth_scores": [10, 20],
                    "latency": 5.0,
                },
                {"kind": "decomposition", "text": "find a cup", "intent_kind": "specific", "classes": ["cup"]},
                {"kind": "embedding", "text": "One.", "vector": [1, 0]},
                {"kind": "intent", "timestamp": 0.1, "text": "find a cup"},
                {"kind": "intent", "timestamp": 0.2, "attribute": "color", "level": "verbose"},
                {"kind": "sound", "timestamp": 0.0, "label": "Speech", "phase": "start"},
                {"kind": "sound", "timestamp": 0.2, "label": "speech", "phase": "end"},
                {"kind": "policy", "label": "doorbell", "action": "pause"},
                {"kind": "annotation", "label": "desk", "visible_from": 0.0, "visible_until": 0.2},
            )
        )
        cfg = scenario.config()
        assert cfg.n == 4 and cfg.latency(Tier.GENERAL) == 2.0
        assert scenario.dataset_classes == ("desk", "cup")
        assert scenario.outputs[(0, Tier.DETAILED)].latency == 5.0
        assert [c.action for c in scenario.intents] == ["set_intent", "attribute"]
        assert [s.phase for s in scenario.sounds] == [SoundPhase.START, SoundPhase.END]
        assert scenario.policy.action_for("doorbell") is SoundAction.PAUSE
        assert scenario.annotations[0].label == "desk"

    def test_round_trip_keeps_fingerprint(self) -> None:
        """Test that writing and reloading a scenario keeps its identity."""
        scenario = scan_then_static()
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "scan.jsonl"
            write_scenario(scenario, path)
            loaded = load_scenario(path)
        assert loaded.fingerprint == scenario.fingerprint
        assert loaded.outputs == scenario.outputs

    def test_reference_scenario_is_valid(self) -> None:
        """Test that the bundled reference scenario passes validation."""
        scenario = parse_scenario(reference_scenario().to_jsonl().splitlines())
        assert len(scenario.annotations) == 64

    def test_config_records_merge_tier_latencies(self) -> None:
        """Test that a later tier_latencies object adds to an earlier one."""
        scenario = parse_scenario(
            _lines(
                {"kind": "config", "tier_latencies": {"detailed": 5.0}},
                {"kind": "config", "n": 4, "tier_latencies": {"general": 2.0}},
                _frame(0),
            )
        )
        cfg = scenario.config()
        assert cfg.latency(Tier.DETAILED) == 5.0
        assert cfg.latency(Tier.GENERAL) == 2.0
        assert cfg.latency(Tier.LABEL) == 0.1
        assert cfg.n == 4


class TestScenarioErrors:
    """Test diagnostics for broken scenarios."""

    def test_frame_id_regression(self) -> None:
        """Test that the error points at the offending line."""
        with pytest.raises(ScenarioError) as info:
            parse_scenario([_frame(0), _frame(2), _frame(1)])
        assert info.value.line == 3
        assert info.value.field == "frame_id"

    def test_missing_depth_scores(self) -> None:
        """Test that Detailed outputs must score every sentence."""
        lines = _lines(
            _frame(0),
            {"kind": "output", "frame_id": 0, "tier": "detailed", "sentences": ["a"], "sim_scores": [0.1]},
        )
        with pytest.raises(ScenarioError, match="depth_scores") as info:
            parse_scenario(lines)
        assert info.value.line == 2

    def test_score_count_mismatch(self) -> None:
        """Test that score lists must match the sentence count."""
        lines = _lines(
            _frame(0),
            {
                "kind": "output",
                "frame_id": 0,
                "tier": "detailed",
                "sentences": ["a", "b"],
                "sim_scores": [0.1],
                "depth_scores": [1, 2],
            },
        )
        with pytest.raises(ScenarioError, match="sim_scores"):
            parse_scenario(lines)

    def test_malformed_json(self) -> None:
        """Test that broken JSON reports its line."""
        with pytest.raises(ScenarioError, match="line 2"):
            parse_scenario([_frame(0), "{not json"])

    def test_unknown_kind(self) -> None:
        """Test that unknown record kinds are rejected."""
        with pytest.raises(ScenarioError, match="kind"):
            parse_scenario(_lines({"kind": "video"}))

    def test_event_outside_span(self) -> None:
        """Test that events must fall within the frame stream."""
        lines = _lines(_frame(0), _frame(1), {"kind": "intent", "timestamp": 5.0, "text": "hello"})
        with pytest.raises(ScenarioError) as info:
            parse_scenario(lines)
        assert info.value.line == 3

    def test_sound_must_alternate(self) -> None:
        """Test that a sound cannot end before it starts."""
        lines = _lines(_frame(0), {"kind": "sound", "timestamp": 0.0, "label": "speech", "phase": "end"})
        with pytest.raises(ScenarioError, match="without a start"):
            parse_scenario(lines)

    def test_bad_config_key(self) -> None:
        """Test that config errors name the key."""
        with pytest.raises(ScenarioError) as info:
            parse_scenario(_lines({"kind": "config", "speed": 2}))
        assert info.value.field == "speed"

    def test_output_for_unknown_frame(self) -> None:
        """Test that outputs must reference a frame."""
        lines = _lines(_frame(0), {"kind": "output", "frame_id": 9, "tier": "general", "sentences": ["x"]})
        with pytest.raises(ScenarioError, match="no frame 9"):
            parse_scenario(lines)

    def test_label_outputs_rejected(self) -> None:
        """Test that Label outputs cannot be scripted."""
        lines = _lines(_frame(0), {"kind": "output", "frame_id": 0, "tier": "label", "sentences": ["x"]})
        with pytest.raises(ScenarioError, match="derived"):
            parse_scenario(lines)

    def test_feature_dimension(self) -> None:
        """Test that feature vectors keep one dimension."""
        with pytest.raises(ScenarioError, match="feature_vector"):
            parse_scenario([_frame(0), _frame(1, feature_vector=[1.0, 0.0, 0.0])])

    def test_bad_detection(self) -> None:
        """Test that detection fields are checked."""
        with pytest.raises(ScenarioError, match=r"detections\[0\]"):
            parse_scenario([_frame(0, detections=[{"track_id": "one", "class_label": "desk"}])])

    def test_spacing_warning(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test that irregular frame spacing is only a warning."""
        with caplog.at_level(logging.WARNING):
            scenario = parse_scenario([_frame(0), _frame(1, timestamp=0.5)])
        assert len(scenario.frames) == 2
        assert "fps" in caplog.text

    def test_missing_file(self) -> None:
        """Test that a missing path raises an I/O error."""
        with pytest.raises(FileNotFoundError):
            load_scenario(Path("/nonexistent/scenario.jsonl"))

    def test_zero_fps(self) -> None:
        """Test that an fps of zero is reported against its config line."""
        lines = _lines(_frame(0), {"kind": "config", "fps": 0}, _frame(1))
        with pytest.raises(ScenarioError, match="fps > 0") as info:
            parse_scenario(lines)
        assert (info.value.line, info.value.field) == (2, "fps")

    def test_nan_timestamp(self) -> None:
        """Test that a NaN frame timestamp is rejected."""
        with pytest.raises(ScenarioError, match="finite") as info:
            parse_scenario([_frame(0), _frame(1, timestamp=float("nan"))])
        assert (info.value.line, info.value.field) == (2, "timestamp")

    def test_infinite_latency(self) -> None:
        """Test that an infinite scripted latency is rejected."""
        lines = _lines(
            _frame(0),
            {
                "kind": "output",
                "frame_id": 0,
                "tier": "general",
                "sentences": ["A desk."],
                "latency": float("inf"),
            },
        )
        assert "Infinity" in lines[1]
        with pytest.raises(ScenarioError, match="finite") as info:
            parse_scenario(lines)
        assert (info.value.line, info.value.field) == (2, "latency")

    def test_nan_config_value(self) -> None:
        """Test that a NaN config value names its key."""
        with pytest.raises(ScenarioError) as info:
            parse_scenario(_lines({"kind": "config", "thres": float("nan")}, _frame(0)))
        assert (info.value.line, info.value.field) == (1, "thres")

    def test_invalid_utf8(self) -> None:
        """Test that undecodable bytes are reported with their line."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "broken.jsonl"
            path.write_bytes(_frame(0).encode() + b"\n" + b'{"kind": "\xff\xfe"}\n')
            with pytest.raises(ScenarioError, match="UTF-8") as info:
                load_scenario(path)
        assert info.value.line == 2
