from __future__ import annotations

import json
from enum import Enum
from pathlib import Path
from typing import Any

import pandas as pd


class FileFormat(str, Enum):
    CSV_GZIP = "csv-gzip"
    PARQUET = "parquet"
    JSON = "json"


SCENARIO_EXTENSIONS: tuple[str, ...] = (".jsonl",)


def discover_scenarios(input_path: Path) -> list[Path]:
    if input_path.is_file():
        return [input_path]

    files: list[Path] = []
    for candidate in sorted(input_path.rglob("*")):
        if candidate.is_file() and candidate.name.lower().endswith(SCENARIO_EXTENSIONS):
            files.append(candidate)
    return files


def table_path(base: Path, output_format: FileFormat) -> Path:
    text = str(base)
    for suffix in (".csv.gz", ".parquet", ".json"):
        if text.lower().endswith(suffix):
            text = text[: -len(suffix)]
            break
    if output_format == FileFormat.CSV_GZIP:
        return Path(f"{text}.csv.gz")
    if output_format == FileFormat.JSON:
        return Path(f"{text}.json")
    return Path(f"{text}.parquet")


def write_table(df: pd.DataFrame, output_file: Path, output_format: FileFormat) -> None:
    output_file.parent.mkdir(parents=True, exist_ok=True)

    if output_format == FileFormat.CSV_GZIP:
        df.to_csv(output_file, index=False, compression="gzip")
        return

    if output_format == FileFormat.PARQUET:
        df.to_parquet(output_file, index=False)
        return

    if output_format == FileFormat.JSON:
        df.to_json(output_file, orient="records", indent=2)
        return

    raise ValueError(f"Unsupported output format: {output_format}")


def write_document(document: dict[str, Any], output_file: Path) -> None:
    output_file.parent.mkdir(parents=True, exist_ok=True)
    output_file.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
