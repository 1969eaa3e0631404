"""Transcript recording: accumulates engine records and serialises them as JSON Lines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd


TRANSCRIPT_FORMAT_VERSION = 1


class TranscriptRecorder:
    """Accumulates records reported by the engine layers, in the order they happen."""

    def __init__(self) -> None:
        self._records: list[dict[str, Any]] = []

    def record(self, kind: str, time: float, **fields: Any) -> None:
        self.open(kind, time, **fields)

    def open(self, kind: str, time: float, **fields: Any) -> dict[str, Any]:
        """Record now and return the record so fields known only later can be filled in."""
        entry: dict[str, Any] = {"kind": kind, "time": time, **fields}
        self._records.append(entry)
        return entry

    def to_transcript(self, header: dict[str, Any]) -> Transcript:
        # Stable sort keeps emission order among records sharing a timestamp.
        ordered = sorted(self._records, key=lambda r: r["time"])
        return Transcript(header=dict(header), records=[_plain(r) for r in ordered])


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "value") and isinstance(value.value, str):
        return value.value
    return value


@dataclass
class Transcript:
    header: dict[str, Any] = field(default_factory=dict)
    records: list[dict[str, Any]] = field(default_factory=list)

    def of_kind(self, kind: str) -> list[dict[str, Any]]:
        return [r for r in self.records if r["kind"] == kind]

    def utterances(self) -> list[dict[str, Any]]:
        return self.of_kind("utterance")

    @property
    def scenario_fingerprint(self) -> str | None:
        return self.header.get("scenario_fingerprint")

    def to_jsonl(self) -> str:
        lines = [json.dumps({"kind": "header", **self.header}, sort_keys=True)]
        lines.extend(json.dumps(r, sort_keys=True) for r in self.records)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> Transcript:
        header: dict[str, Any] = {}
        records: list[dict[str, Any]] = []
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"transcript line {number}: {exc.msg}") from exc
            if not isinstance(data, dict) or "kind" not in data:
                raise ValueError(f"transcript line {number}: expected a record with a kind")
            if data["kind"] == "header":
                header = {k: v for k, v in data.items() if k != "kind"}
            else:
                records.append(data)
        return cls(header=header, records=records)

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def read(cls, path: Path) -> Transcript:
        return cls.from_jsonl(path.read_text(encoding="utf-8"))

    def to_frame(self, kind: str) -> pd.DataFrame:
        return pd.DataFrame(self.of_kind(kind))

    def summary(self) -> dict[str, Any]:
        utterances = self.utterances()
        per_tier = {tier: 0 for tier in ("label", "general", "detailed")}
        for u in utterances:
            per_tier[u["tier"]] = per_tier.get(u["tier"], 0) + 1
        return {
            "utterances": len(utterances),
            "utterances_per_tier": per_tier,
            "keyframes": len(self.of_kind("keyframe")),
            "evictions": sum(len(r.get("evicted", [])) for r in self.of_kind("eviction")),
            "skips": len(self.of_kind("skip")),
        }
