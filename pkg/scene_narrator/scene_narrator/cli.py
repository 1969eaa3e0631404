from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Any

from scene_narrator.core import ConfigError, EngineConfig, Tier, load_config, validate_config
from scene_narrator.io import FileFormat, discover_scenarios, table_path, write_document, write_table
from scene_narrator.providers import list_decomposers
from scene_narrator.simkit import (
    MismatchError,
    ScenarioError,
    Transcript,
    check_pair,
    load_scenario,
    metrics_coverage,
    metrics_latency,
    metrics_priority,
    render_report,
    report_document,
    run,
)
from scene_narrator.simkit.library import write_bundled
from scene_narrator.simkit.metrics import METRIC_NAMES


EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2

# Config fields exposed as --flags; tier latencies have their own option.
_FLAG_FIELDS = [f for f in dataclasses.fields(EngineConfig) if f.name != "tier_latencies"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scene-narrator",
        description="Simulate live scene narration from scripted scenarios and score the result.",
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="WARNING",
        help="Logging threshold for diagnostics on stderr (default: WARNING).",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="Check scenario files without running them.")
    validate.add_argument(
        "scenario_path",
        type=Path,
        help="Scenario file, or a folder searched for *.jsonl scenarios.",
    )

    run_cmd = commands.add_parser("run", help="Simulate a scenario and write its transcript.")
    run_cmd.add_argument("scenario_path", type=Path, help="Scenario file (JSON Lines).")
    run_cmd.add_argument(
        "--config",
        type=Path,
        default=None,
        metavar="PATH",
        help="JSON config file applied over the scenario's own config records.",
    )
    run_cmd.add_argument(
        "--out",
        type=Path,
        default=None,
        metavar="PATH",
        help="Transcript destination (default: <scenario>.transcript.jsonl).",
    )
    run_cmd.add_argument(
        "--decomposer",
        choices=list_decomposers(),
        default="scripted",
        help="Intent decomposition backend (default: scripted, falling back to rules).",
    )
    run_cmd.add_argument(
        "--tier-latency",
        action="append",
        default=[],
        metavar="TIER=SECONDS",
        help="Override one tier's provider latency; may be repeated.",
    )
    for f in _FLAG_FIELDS:
        flag = "--" + f.name.replace("_", "-")
        if f.type in ("bool", bool):
            run_cmd.add_argument(
                flag,
                dest=f.name,
                action=argparse.BooleanOptionalAction,
                default=None,
                help=f"Override {f.name}.",
            )
        else:
            run_cmd.add_argument(
                flag,
                dest=f.name,
                type=int if f.type in ("int", int) else float,
                default=None,
                help=f"Override {f.name} (default: {f.default}).",
            )

    metrics = commands.add_parser("metrics", help="Score a transcript against its scenario.")
    metrics.add_argument("transcript_path", type=Path, help="Transcript written by 'run'.")
    metrics.add_argument("scenario_path", type=Path, help="Scenario the transcript came from.")
    metrics.add_argument(
        "--only",
        action="append",
        choices=list(METRIC_NAMES),
        default=None,
        help="Report only this metric; may be repeated (default: all).",
    )
    metrics.add_argument(
        "--out",
        type=Path,
        default=None,
        metavar="PATH",
        help="Optional path for a JSON report document.",
    )
    metrics.add_argument(
        "--windows-out",
        type=Path,
        default=None,
        metavar="PATH",
        help="Optional path for the per-window coverage table.",
    )
    metrics.add_argument(
        "--windows-format",
        type=FileFormat,
        choices=list(FileFormat),
        default=FileFormat.PARQUET,
        help="Format of the coverage table (default: parquet).",
    )

    bundle = commands.add_parser("bundle", help="Write the bundled scenarios to a folder.")
    bundle.add_argument("output_path", type=Path, help="Destination folder.")
    return parser


def _error(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def cmd_validate(args: argparse.Namespace) -> int:
    scenario_path: Path = args.scenario_path
    if not scenario_path.exists():
        _error(f"Scenario path not found: {scenario_path}")
        return EXIT_IO

    files = discover_scenarios(scenario_path)
    if not files:
        _error(f"No scenario files (*.jsonl) found under {scenario_path}")
        return EXIT_IO

    failures = 0
    for path in files:
        try:
            scenario = load_scenario(path)
        except (ScenarioError, OSError) as exc:
            failures += 1
            print(f"INVALID: {path}: {exc}")
            continue
        print(f"OK: {path} ({len(scenario.frames)} frames)")

    print(f"Done. {len(files) - failures} of {len(files)} scenario(s) valid.")
    return EXIT_INVALID if failures else EXIT_OK


def _flag_overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {
        f.name: getattr(args, f.name) for f in _FLAG_FIELDS if getattr(args, f.name) is not None
    }
    latencies: dict[str, float] = {}
    for item in args.tier_latency:
        tier, sep, seconds = item.partition("=")
        if not sep:
            raise ConfigError("tier_latencies", f"expected TIER=SECONDS, got '{item}'")
        try:
            latencies[Tier(tier).value] = float(seconds)
        except ValueError as exc:
            raise ConfigError("tier_latencies", f"invalid entry '{item}'") from exc
    if latencies:
        overrides["tier_latencies"] = latencies
    return overrides


def cmd_run(args: argparse.Namespace) -> int:
    scenario_path: Path = args.scenario_path
    config_path: Path | None = args.config
    out: Path = args.out or scenario_path.with_name(f"{scenario_path.stem}.transcript.jsonl")

    try:
        scenario = load_scenario(scenario_path)
    except OSError as exc:
        _error(str(exc))
        return EXIT_IO
    except ScenarioError as exc:
        _error(f"{scenario_path}: {exc}")
        return EXIT_INVALID

    cfg = scenario.config()
    if config_path is not None:
        try:
            cfg = load_config(config_path, base=cfg)
        except OSError as exc:
            _error(str(exc))
            return EXIT_IO
        except ValueError as exc:
            _error(f"config file {config_path}: {exc}")
            return EXIT_INVALID
    try:
        cfg = cfg.with_overrides(_flag_overrides(args))
    except ConfigError as exc:
        _error(str(exc))
        return EXIT_INVALID

    result = validate_config(cfg)
    if not result.ok:
        for violation in result.violations:
            _error(f"config key '{violation.field}': {violation.message}")
        return EXIT_INVALID

    transcript = run(scenario, cfg, decomposer=args.decomposer)
    try:
        transcript.write(out)
    except OSError as exc:
        _error(f"cannot write transcript: {exc}")
        return EXIT_IO

    summary = transcript.summary()
    per_tier = summary["utterances_per_tier"]
    print(f"Transcript written to: {out}")
    print(
        f"Utterances: {summary['utterances']} "
        f"(label {per_tier['label']}, general {per_tier['general']}, "
        f"detailed {per_tier['detailed']})"
    )
    print(f"Keyframes: {summary['keyframes']}")
    print(f"Evicted packets: {summary['evictions']}")
    print(f"Redundant sentences skipped: {summary['skips']}")
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    selected = set(args.only or METRIC_NAMES)
    try:
        transcript = Transcript.read(args.transcript_path)
        scenario = load_scenario(args.scenario_path)
    except OSError as exc:
        _error(str(exc))
        return EXIT_IO
    except ValueError as exc:
        _error(str(exc))
        return EXIT_INVALID

    try:
        check_pair(transcript, scenario)
    except MismatchError as exc:
        _error(str(exc))
        return EXIT_INVALID

    coverage = metrics_coverage(transcript, scenario.annotations) if "coverage" in selected else None
    priority = metrics_priority(transcript, scenario) if "priority" in selected else None
    latency = metrics_latency(transcript) if "latency" in selected else None
    print(render_report(coverage, priority, latency))

    try:
        if args.out is not None:
            write_document(report_document(coverage, priority, latency), args.out)
            print(f"Report written to: {args.out}")
        if args.windows_out is not None and coverage is not None:
            destination = table_path(args.windows_out, args.windows_format)
            write_table(coverage.windows, destination, args.windows_format)
            print(f"Coverage windows written to: {destination}")
    except OSError as exc:
        _error(f"cannot write report: {exc}")
        return EXIT_IO
    return EXIT_OK


def cmd_bundle(args: argparse.Namespace) -> int:
    try:
        written = write_bundled(args.output_path)
    except OSError as exc:
        _error(str(exc))
        return EXIT_IO
    for path in written:
        print(f"Wrote: {path}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "run": cmd_run,
    "metrics": cmd_metrics,
    "bundle": cmd_bundle,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
