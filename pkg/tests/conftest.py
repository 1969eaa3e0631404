"""Pytest configuration and shared fixtures."""

from __future__ import annotations

import pytest
from scene_narrator.core import Detection, EngineConfig, FrameRecord
from scene_narrator.intent import COCO_CLASSES, IntentProfile, default_profile
from scene_narrator.simkit.transcript import TranscriptRecorder


@pytest.fixture
def cfg() -> EngineConfig:
    """Provide the default engine configuration."""
    return EngineConfig()


@pytest.fixture
def profile() -> IntentProfile:
    """Provide an intent profile with no intent set."""
    return default_profile(COCO_CLASSES)


@pytest.fixture
def recorder() -> TranscriptRecorder:
    """Provide a fresh TranscriptRecorder instance for each test."""
    return TranscriptRecorder()


def make_frame(
    frame_id: int,
    objects: tuple[tuple[int, str], ...] = ((1, "desk"),),
    orientation: float = 0.0,
    vector: tuple[float, ...] = (1.0, 0.0),
    fps: float = 5.0,
) -> FrameRecord:
    """Build a frame at the timestamp implied by *fps*."""
    return FrameRecord(
        frame_id=frame_id,
        timestamp=round(frame_id / fps, 6),
        orientation_deg=orientation,
        detections=tuple(Detection(track_id, label) for track_id, label in objects),
        feature_vector=vector,
    )
