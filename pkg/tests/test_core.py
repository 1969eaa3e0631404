"""Tests for shared types, configuration and validation."""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scene_narrator.core import (
    ConfigError,
    Composition,
    Detection,
    DomainError,
    EngineConfig,
    FrameRecord,
    Tier,
    load_config,
    validate_config,
)

_PAIRS = st.tuples(st.integers(min_value=1, max_value=3), st.sampled_from(["desk", "cat"]))


class TestComposition:
    """Test composition equality and phrasing order."""

    def test_equality_ignores_order(self) -> None:
        """Test that compositions compare as sets."""
        a = Composition.of([(1, "desk"), (2, "cat")])
        b = Composition.of([(2, "cat"), (1, "desk")])
        assert a == b
        assert hash(a) == hash(b)

    def test_duplicates_collapse(self) -> None:
        """Test that repeated pairs are kept once, in first-seen order."""
        comp = Composition.of([(1, "desk"), (1, "desk"), (2, "cat")])
        assert len(comp) == 2
        assert comp.class_labels() == ["desk", "cat"]

    def test_track_id_matters(self) -> None:
        """Test that the same class on another track is a different composition."""
        assert Composition.of([(1, "cat")]) != Composition.of([(2, "cat")])

    def test_empty_is_falsy(self) -> None:
        """Test the empty composition."""
        assert not Composition()
        assert (1, "desk") in Composition.of([(1, "desk")])

    @given(st.lists(_PAIRS, max_size=4), st.lists(_PAIRS, max_size=4), st.randoms())
    def test_equality_is_transitive(self, pairs, other, rnd) -> None:
        """Test that equal compositions agree on equality with any third one."""
        reordered = list(pairs)
        rnd.shuffle(reordered)
        x, y, z = Composition.of(pairs), Composition.of(reordered), Composition.of(other)
        assert x == y
        assert (x == z) == (y == z)
        assert (z == x) == (x == z)

    @given(st.lists(_PAIRS, max_size=5), st.randoms())
    def test_shuffled_members_are_equal(self, pairs, rnd) -> None:
        """Test that any reordering of the same pairs gives an equal composition."""
        shuffled = list(pairs)
        rnd.shuffle(shuffled)
        assert Composition.of(pairs) == Composition.of(shuffled)
        assert Composition.of(pairs) == Composition.of(shuffled + pairs)


class TestFrameTypes:
    """Test frame and detection preconditions."""

    def test_orientation_out_of_range(self) -> None:
        """Test that 360 degrees is rejected."""
        with pytest.raises(DomainError):
            FrameRecord(frame_id=0, timestamp=0.0, orientation_deg=360.0)

    def test_bbox_outside_unit_square(self) -> None:
        """Test that boxes must fit in the frame."""
        with pytest.raises(DomainError):
            Detection(1, "cat", bbox=(0.5, 0.5, 0.6, 0.1))

    def test_confidence_range(self) -> None:
        """Test that confidence must lie in [0, 1]."""
        with pytest.raises(DomainError):
            Detection(1, "cat", confidence=1.2)


class TestEngineConfig:
    """Test config defaults, overrides and validation."""

    def test_defaults(self) -> None:
        """Test documented defaults."""
        cfg = EngineConfig()
        assert (cfg.n, cfg.m, cfg.thres) == (5, 3, 0.6)
        assert cfg.latency(Tier.LABEL) == 0.1
        assert cfg.latency(Tier.GENERAL) == 2.87
        assert cfg.latency(Tier.DETAILED) == 8.78
        assert validate_config(cfg).ok

    def test_with_overrides_coerces(self) -> None:
        """Test that string values are coerced to the field type."""
        cfg = EngineConfig().with_overrides(
            {"n": "7", "thres": 0.5, "restrict_to_intent_classes": "true"}
        )
        assert cfg.n == 7
        assert cfg.thres == 0.5
        assert cfg.restrict_to_intent_classes is True

    def test_tier_latency_override_merges(self) -> None:
        """Test that a partial tier_latencies object keeps the other tiers."""
        cfg = EngineConfig().with_overrides({"tier_latencies": {"detailed": 4.0}})
        assert cfg.latency(Tier.DETAILED) == 4.0
        assert cfg.latency(Tier.LABEL) == 0.1

    def test_unknown_key_names_the_key(self) -> None:
        """Test that unknown keys raise ConfigError naming the key."""
        with pytest.raises(ConfigError, match="bogus") as info:
            EngineConfig().with_overrides({"bogus": 1})
        assert info.value.key == "bogus"

    def test_wrong_type(self) -> None:
        """Test that a non-numeric value is rejected."""
        with pytest.raises(ConfigError, match="thres"):
            EngineConfig().with_overrides({"thres": "high"})

    @pytest.mark.parametrize(
        "overrides, key",
        [
            ({"thres": float("nan")}, "thres"),
            ({"fps": "inf"}, "fps"),
            ({"tier_latencies": {"detailed": float("inf")}}, "tier_latencies"),
        ],
    )
    def test_non_finite_rejected(self, overrides, key: str) -> None:
        """Test that NaN and infinite values are rejected with the key named."""
        with pytest.raises(ConfigError, match="finite") as info:
            EngineConfig().with_overrides(overrides)
        assert info.value.key == key

    def test_validate_reports_each_violation(self) -> None:
        """Test that validation lists every broken constraint."""
        cfg = EngineConfig().with_overrides({"n": 0, "thres": 1.5})
        result = validate_config(cfg)
        assert not result.ok
        assert result.fields() == ["n", "thres"]
        assert result.violations[0].message == "n ≥ 1"

    def test_volume_high_below_normal(self) -> None:
        """Test the volume ordering constraint."""
        result = validate_config(EngineConfig(volume_high=0.5))
        assert "volume_high" in result.fields()

    def test_to_dict_uses_tier_names(self) -> None:
        """Test that the dict form is JSON friendly."""
        data = EngineConfig().to_dict()
        assert data["tier_latencies"] == {"label": 0.1, "general": 2.87, "detailed": 8.78}
        json.dumps(data)


class TestLoadConfig:
    """Test reading config files."""

    def test_load_over_base(self) -> None:
        """Test that file values are applied over the given base."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "cfg.json"
            path.write_text(json.dumps({"m": 4}))
            cfg = load_config(path, base=EngineConfig(n=9))
        assert (cfg.n, cfg.m) == (9, 4)

    def test_non_object_document(self) -> None:
        """Test that a JSON list is rejected."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "cfg.json"
            path.write_text("[1, 2]")
            with pytest.raises(ConfigError):
                load_config(path)
