"""Evaluation metrics computed from a transcript and the scenario that produced it."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from typing import Any

import pandas as pd

from scene_narrator.core import EngineConfig, Tier
from scene_narrator.providers import normalize_text
from scene_narrator.simkit.scenario import Annotation, Scenario
from scene_narrator.simkit.transcript import Transcript


METRIC_NAMES: tuple[str, ...] = ("coverage", "priority", "latency")


class MismatchError(ValueError):
    """The transcript was not produced from the given scenario."""


def check_pair(transcript: Transcript, scenario: Scenario) -> None:
    expected = scenario.fingerprint
    actual = transcript.scenario_fingerprint
    if actual != expected:
        raise MismatchError(
            f"transcript was recorded for scenario {actual or '<unknown>'}, "
            f"not {expected}"
        )


# ---------------------------------------------------------------------------
# Coverage
# ---------------------------------------------------------------------------


@dataclass
class CoverageReport:
    windows: pd.DataFrame
    covered: int
    total: int

    @property
    def ratio(self) -> float | None:
        return self.covered / self.total if self.total else None


def metrics_coverage(transcript: Transcript, annotations: Sequence[Annotation]) -> CoverageReport:
    """A window is covered when an utterance overlapping it mentions the label."""
    spoken = [
        (u["start"], u["end"], normalize_text(u["text"]))
        for u in transcript.utterances()
        if u.get("end") is not None
    ]
    rows = []
    for note in annotations:
        needle = normalize_text(note.label)
        covered = any(
            start < note.visible_until and end > note.visible_from and needle in text
            for start, end, text in spoken
        )
        rows.append(
            {
                "label": note.label,
                "visible_from": note.visible_from,
                "visible_until": note.visible_until,
                "covered": covered,
            }
        )
    windows = pd.DataFrame(rows, columns=["label", "visible_from", "visible_until", "covered"])
    covered_count = int(windows["covered"].sum()) if len(windows) else 0
    return CoverageReport(windows=windows, covered=covered_count, total=len(windows))


# ---------------------------------------------------------------------------
# Priority
# ---------------------------------------------------------------------------


@dataclass
class PriorityReport:
    correct: int
    total: int
    sentences: list[dict[str, Any]] = field(default_factory=list)

    @property
    def ratio(self) -> float | None:
        return self.correct / self.total if self.total else None


def metrics_priority(transcript: Transcript, scenario: Scenario) -> PriorityReport:
    """Check each spoken Detailed sentence against the unspoken rest of its packet."""
    threshold = float(
        transcript.header.get("config", {}).get(
            "sim_split_threshold", EngineConfig().sim_split_threshold
        )
    )
    spoken: dict[str, set[int]] = {}
    judged: list[dict[str, Any]] = []
    for utterance in transcript.utterances():
        if utterance["tier"] != Tier.DETAILED.value:
            continue
        output = scenario.outputs.get((utterance["frame_id"], Tier.DETAILED))
        if output is None:
            continue
        already = spoken.setdefault(utterance["packet_id"], set())
        index = utterance["source_index"]
        candidates = [i for i in range(len(output.sentences)) if i not in already]
        sims, depths = output.sim_scores, output.depth_scores
        relevant = [i for i in candidates if sims[i] >= threshold]
        if sims[index] >= threshold:
            correct = sims[index] >= max(sims[i] for i in relevant)
        else:
            correct = not relevant and depths[index] >= max(depths[i] for i in candidates)
        already.add(index)
        judged.append(
            {
                "packet_id": utterance["packet_id"],
                "source_index": index,
                "sim_score": sims[index],
                "depth_score": depths[index],
                "correct": correct,
            }
        )
    return PriorityReport(
        correct=sum(1 for row in judged if row["correct"]), total=len(judged), sentences=judged
    )


# ---------------------------------------------------------------------------
# Latency
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LatencyStats:
    count: int
    mean: float
    min: float
    max: float


@dataclass
class LatencyReport:
    per_tier: dict[str, LatencyStats] = field(default_factory=dict)
    overall: LatencyStats | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_tier": {tier: asdict(stats) for tier, stats in self.per_tier.items()},
            "overall": asdict(self.overall) if self.overall is not None else None,
        }


def _stats(values: pd.Series) -> LatencyStats:
    return LatencyStats(
        count=int(values.count()),
        mean=float(values.mean()),
        min=float(values.min()),
        max=float(values.max()),
    )


def metrics_latency(transcript: Transcript) -> LatencyReport:
    """Provider latency per tier, and keyframe-to-speech latency over all utterances."""
    report = LatencyReport()
    packets = transcript.to_frame("packet")
    if len(packets):
        packets["latency"] = packets["ready_at"] - packets["requested_at"]
        for tier in Tier:
            values = packets.loc[packets["tier"] == tier.value, "latency"]
            if len(values):
                report.per_tier[tier.value] = _stats(values)
    utterances = transcript.to_frame("utterance")
    if len(utterances):
        report.overall = _stats(utterances["start"] - utterances["requested_at"])
    return report


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _percent(ratio: float | None) -> str:
    return "N/A" if ratio is None else f"{ratio * 100:.2f}%"


def render_report(
    coverage: CoverageReport | None = None,
    priority: PriorityReport | None = None,
    latency: LatencyReport | None = None,
) -> str:
    lines: list[str] = []
    if coverage is not None:
        lines.append(
            f"coverage: {_percent(coverage.ratio)} ({coverage.covered}/{coverage.total} windows)"
        )
    if priority is not None:
        lines.append(
            f"priority: {_percent(priority.ratio)} "
            f"({priority.correct}/{priority.total} detailed sentences)"
        )
    if latency is not None:
        lines.append("latency:")
        if not latency.per_tier and latency.overall is None:
            lines.append("  (no packets)")
        rows = list(latency.per_tier.items())
        if latency.overall is not None:
            rows.append(("overall", latency.overall))
        for name, stats in rows:
            lines.append(
                f"  {name:<9} n={stats.count:<4} mean={stats.mean:.3f}s "
                f"min={stats.min:.3f}s max={stats.max:.3f}s"
            )
    return "\n".join(lines)


def report_document(
    coverage: CoverageReport | None = None,
    priority: PriorityReport | None = None,
    latency: LatencyReport | None = None,
) -> dict[str, Any]:
    document: dict[str, Any] = {}
    if coverage is not None:
        document["coverage"] = {
            "ratio": coverage.ratio,
            "covered": coverage.covered,
            "total": coverage.total,
        }
    if priority is not None:
        document["priority"] = {
            "ratio": priority.ratio,
            "correct": priority.correct,
            "total": priority.total,
        }
    if latency is not None:
        document["latency"] = latency.to_dict()
    return document
