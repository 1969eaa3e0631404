"""Bundled scenarios, built in code so their expected outcomes can be traced by hand."""

from __future__ import annotations

import random
from collections.abc import Callable, Sequence
from pathlib import Path

from scene_narrator.core import Detection, FrameRecord, Tier
from scene_narrator.presenter import SoundEvent, SoundPhase
from scene_narrator.providers import ScriptedOutput
from scene_narrator.simkit.scenario import Annotation, IntentCommand, Scenario, write_scenario


FPS = 5.0


def _timestamp(frame_id: int, fps: float = FPS) -> float:
    return round(frame_id / fps, 6)


def _one_hot(index: int, size: int = 4) -> tuple[float, ...]:
    return tuple(1.0 if i == index % size else 0.0 for i in range(size))


def _detections(objects: Sequence[tuple[int, str]]) -> tuple[Detection, ...]:
    return tuple(Detection(track_id, label) for track_id, label in objects)


# ---------------------------------------------------------------------------
# Quick scan, then a static view
# ---------------------------------------------------------------------------

SCAN_FRAMES = 15
STATIC_FRAMES = 40
SCAN_END = SCAN_FRAMES / FPS

_SCAN_SEGMENTS: tuple[tuple[tuple[int, str], ...], ...] = (
    ((1, "desk"), (2, "cat")),
    ((3, "chair"), (4, "lamp")),
    ((5, "shelf"), (6, "window")),
)
_STATIC_OBJECTS: tuple[tuple[int, str], ...] = ((11, "painting"), (12, "bench"), (13, "person"))

STATIC_DETAILED_SENTENCES: tuple[str, ...] = (
    "A person in a grey coat sits on the bench.",
    "The painting shows a stormy harbour at dusk.",
    "A wooden bench runs along the gallery wall.",
    "Soft lights hang from the high ceiling.",
)
STATIC_SIM_SCORES: tuple[float, ...] = (0.24, 0.18, 0.22, -0.02)
STATIC_DEPTH_SCORES: tuple[float, ...] = (220.0, 33.0, 200.0, 39.0)


def scan_then_static() -> Scenario:
    """Three seconds of fast turning across new objects, then eight seconds facing one wall."""
    scenario = Scenario()
    for frame_id in range(SCAN_FRAMES):
        segment = frame_id // 5
        scenario.frames.append(
            FrameRecord(
                frame_id=frame_id,
                timestamp=_timestamp(frame_id),
                orientation_deg=9.0 * frame_id,
                detections=_detections(_SCAN_SEGMENTS[segment]),
                feature_vector=_one_hot(segment),
            )
        )
    for frame_id in range(SCAN_FRAMES, SCAN_FRAMES + STATIC_FRAMES):
        scenario.frames.append(
            FrameRecord(
                frame_id=frame_id,
                timestamp=_timestamp(frame_id),
                orientation_deg=200.0,
                detections=_detections(_STATIC_OBJECTS),
                feature_vector=_one_hot(3),
            )
        )

    # Orientation keyframes: every fourth scan frame, then the first static frame.
    for frame_id in (0, 4, 8, 12):
        labels = " and ".join(label for _, label in _SCAN_SEGMENTS[frame_id // 5])
        scenario.outputs[(frame_id, Tier.GENERAL)] = ScriptedOutput(
            (f"A glimpse of a {labels} while turning.",)
        )
        scenario.outputs[(frame_id, Tier.DETAILED)] = ScriptedOutput(
            (f"The {labels} pass by quickly.", "The room is brightly lit."),
            sim_scores=(0.0, 0.0),
            depth_scores=(10.0, 5.0),
        )
    scenario.outputs[(SCAN_FRAMES, Tier.GENERAL)] = ScriptedOutput(
        ("A large painting hangs above a wooden bench where a person quietly sits.",)
    )
    scenario.outputs[(SCAN_FRAMES, Tier.DETAILED)] = ScriptedOutput(
        STATIC_DETAILED_SENTENCES, sim_scores=STATIC_SIM_SCORES, depth_scores=STATIC_DEPTH_SCORES
    )
    scenario.intents.append(IntentCommand(timestamp=0.0, text="Describe any person"))
    return scenario


# ---------------------------------------------------------------------------
# Metric reference scenario
# ---------------------------------------------------------------------------

EPISODE_FRAMES = 80
EPISODE_SECONDS = EPISODE_FRAMES / FPS

_PRESENT_OBJECTS: tuple[str, ...] = (
    "vase", "sofa", "piano", "mirror", "kettle", "blender", "toaster", "printer",
    "stapler", "monitor", "keyboard", "guitar", "cushion", "curtain", "radiator",
    "bookcase", "wardrobe", "dresser", "armchair", "stool", "ladder", "bucket", "broom",
    "doormat", "fireplace", "chandelier", "clock", "calendar", "poster", "whiteboard",
    "projector", "speaker", "microwave", "fridge", "dishwasher", "sink", "faucet",
    "bathtub", "shower", "towel", "pillow", "blanket", "backpack", "suitcase", "bicycle",
    "scooter", "helmet", "jacket", "sneaker", "beanie", "plant", "cactus", "aquarium",
    "birdcage", "telephone", "laptop", "tablet", "notebook",
)

# Annotated as visible but never named by any description.
_UNSPOKEN_OBJECTS: tuple[str, ...] = (
    "umbrella", "violin", "trumpet", "kayak", "saxophone", "telescope", "anchor",
    "lantern", "hammock", "compass", "easel", "globe", "harp", "accordion", "tuba",
    "sundial",
)

FULL_EPISODES = 5
SHORT_EPISODES = 1
SKIPPING_EPISODES = 23
SECOND_OBJECT_WINDOWS = 19

_SIMS_BY_RANK: tuple[float, ...] = (0.6, 0.5, 0.4, 0.1, 0.05)
_DEPTHS_BY_RANK: tuple[float, ...] = (50.0, 40.0, 30.0, 200.0, 100.0)


def _episode_sentences(first: str, second: str, count: int, repeat_top: bool) -> list[str]:
    by_rank = [
        f"The {first} looks glossy.",
        f"The {second} looks worn.",
        f"The {first} feels heavy.",
        f"The {second} seems new.",
        f"The {second} stands upright.",
    ][:count]
    if repeat_top:
        by_rank[3] = by_rank[0]
    return by_rank


def reference_scenario() -> Scenario:
    """Episodes of a new view every sixteen seconds, each described in full once.

    Full episodes speak all five Detailed sentences in ranked order. Skipping
    episodes script the fourth-ranked sentence as a repeat of the first, so it is
    dropped as redundant and the fifth is spoken while the fourth was still the
    better candidate. Every episode's first object is annotated, the second object
    of the early episodes too, and the earliest episodes also carry a window for an
    object nothing ever names.
    """
    scenario = Scenario()
    episodes = FULL_EPISODES + SHORT_EPISODES + SKIPPING_EPISODES
    for episode in range(episodes):
        first = _PRESENT_OBJECTS[2 * episode]
        second = _PRESENT_OBJECTS[2 * episode + 1]
        start_frame = episode * EPISODE_FRAMES
        objects = ((2 * episode + 1, first), (2 * episode + 2, second))
        for offset in range(EPISODE_FRAMES):
            frame_id = start_frame + offset
            scenario.frames.append(
                FrameRecord(
                    frame_id=frame_id,
                    timestamp=_timestamp(frame_id),
                    orientation_deg=float((episode * 90) % 360),
                    detections=_detections(objects),
                    feature_vector=_one_hot(episode),
                )
            )

        if episode < FULL_EPISODES:
            count, repeat_top = 5, False
        elif episode < FULL_EPISODES + SHORT_EPISODES:
            count, repeat_top = 3, False
        else:
            count, repeat_top = 5, True
        by_rank = _episode_sentences(first, second, count, repeat_top)
        # Sentences arrive in reverse rank order so ranking has work to do.
        source = list(reversed(range(count)))
        scenario.outputs[(start_frame, Tier.GENERAL)] = ScriptedOutput(
            (f"The {first} stands beside the {second} in this room.",)
        )
        scenario.outputs[(start_frame, Tier.DETAILED)] = ScriptedOutput(
            tuple(by_rank[r] for r in source),
            sim_scores=tuple(_SIMS_BY_RANK[r] for r in source),
            depth_scores=tuple(_DEPTHS_BY_RANK[r] for r in source),
        )

        window = (episode * EPISODE_SECONDS, (episode + 1) * EPISODE_SECONDS)
        scenario.annotations.append(Annotation(first, *window))
        if episode < SECOND_OBJECT_WINDOWS:
            scenario.annotations.append(Annotation(second, *window))
        if episode < len(_UNSPOKEN_OBJECTS):
            scenario.annotations.append(Annotation(_UNSPOKEN_OBJECTS[episode], *window))
    return scenario


# ---------------------------------------------------------------------------
# Random sound schedules
# ---------------------------------------------------------------------------

SOUND_LABELS: tuple[str, ...] = ("speech", "typing", "ringtone")


def random_sound_scenario(seed: int, seconds: float = 12.0, max_intervals: int = 4) -> Scenario:
    """A static, talkative scene overlaid with random start/end pairs per sound label."""
    rng = random.Random(seed)
    scenario = Scenario()
    objects = ((1, "desk"), (2, "lamp"), (3, "laptop"))
    frame_count = int(seconds * FPS)
    for frame_id in range(frame_count):
        scenario.frames.append(
            FrameRecord(
                frame_id=frame_id,
                timestamp=_timestamp(frame_id),
                orientation_deg=45.0,
                detections=_detections(objects),
                feature_vector=_one_hot(0),
            )
        )
    for frame_id in range(0, frame_count, 5):
        scenario.outputs[(frame_id, Tier.GENERAL)] = ScriptedOutput(
            (f"View {frame_id} shows a desk with a lamp and a laptop.",)
        )
        scenario.outputs[(frame_id, Tier.DETAILED)] = ScriptedOutput(
            (
                f"The desk in view {frame_id} is oak.",
                f"The lamp in view {frame_id} glows warmly.",
                f"The laptop in view {frame_id} is open.",
            ),
            sim_scores=(0.1, 0.3, 0.0),
            depth_scores=(120.0, 80.0, 60.0),
        )

    last = scenario.frames[-1].timestamp
    steps = int(last * 100)
    events: list[SoundEvent] = []
    for label in SOUND_LABELS:
        intervals = rng.randint(0, max_intervals)
        cuts = sorted(rng.sample(range(steps + 1), 2 * intervals))
        for i, cut in enumerate(cuts):
            phase = SoundPhase.START if i % 2 == 0 else SoundPhase.END
            events.append(SoundEvent(label, phase, cut / 100))
    scenario.sounds = sorted(events, key=lambda e: e.timestamp)
    return scenario


BUNDLED_SCENARIOS: dict[str, Callable[[], Scenario]] = {
    "scan_then_static": scan_then_static,
    "reference": reference_scenario,
}


def write_bundled(directory: Path) -> list[Path]:
    written = []
    for name, build in BUNDLED_SCENARIOS.items():
        path = directory / f"{name}.jsonl"
        write_scenario(build(), path)
        written.append(path)
    return written
