"""Deterministic simulation: scenarios in, transcripts and metrics out."""

from scene_narrator.simkit.engine import Simulation, run
from scene_narrator.simkit.metrics import (
    CoverageReport,
    LatencyReport,
    LatencyStats,
    MismatchError,
    PriorityReport,
    check_pair,
    metrics_coverage,
    metrics_latency,
    metrics_priority,
    render_report,
    report_document,
)
from scene_narrator.simkit.scenario import (
    Annotation,
    IntentCommand,
    Scenario,
    ScenarioError,
    load_scenario,
    parse_scenario,
    write_scenario,
)
from scene_narrator.simkit.transcript import Transcript, TranscriptRecorder


__all__ = [
    "Annotation",
    "CoverageReport",
    "IntentCommand",
    "LatencyReport",
    "LatencyStats",
    "MismatchError",
    "PriorityReport",
    "Scenario",
    "ScenarioError",
    "Simulation",
    "Transcript",
    "TranscriptRecorder",
    "check_pair",
    "load_scenario",
    "metrics_coverage",
    "metrics_latency",
    "metrics_priority",
    "parse_scenario",
    "render_report",
    "report_document",
    "run",
    "write_scenario",
]
