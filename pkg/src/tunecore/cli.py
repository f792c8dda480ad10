"""Operator CLI: run, resume, and report on experiments from a JSON config.

Exit codes: 0 success, 1 experiment error, 2 configuration/usage error.
The TUNECORE_LOG environment variable (debug|info|warning) controls verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from .config import config_from_dict
from .engine import (
    REPORT_FILENAME,
    RESULTS_FILENAME,
    SNAPSHOT_FILENAME,
    resume_experiment,
    run_experiment,
)
from .errors import ConfigInvalid, MissingLog, SnapshotVersionMismatch, TuneError
from .trials import ObjectiveSpec

logger = logging.getLogger("tunecore.cli")

EXIT_OK = 0
EXIT_EXPERIMENT_ERROR = 1
EXIT_CONFIG_ERROR = 2


def _setup_logging() -> None:
    level_name = os.environ.get("TUNECORE_LOG", "info").lower()
    level = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING}.get(
        level_name, logging.INFO
    )
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")


def cmd_run(config_path: str) -> int:
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        config = config_from_dict(doc)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        report = run_experiment(config)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except TuneError as exc:
        print(f"error: experiment failed: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT_ERROR
    print(f"experiment {report.name!r} finished; best trial {report.best_trial} "
          f"({config.objective.metric}={report.best_value})")
    print(f"report written to {Path(config.output_dir) / REPORT_FILENAME}")
    return EXIT_OK


def cmd_resume(outdir: str, max_concurrent: Optional[int]) -> int:
    try:
        report = resume_experiment(outdir, max_concurrent=max_concurrent)
    except (ConfigInvalid, SnapshotVersionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except TuneError as exc:
        print(f"error: experiment failed: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT_ERROR
    print(f"experiment {report.name!r} finished; best trial {report.best_trial}")
    return EXIT_OK


def _load_report_context(outdir: Path):
    """Objective plus per-trial status/config from the snapshot (best effort)."""
    objective = ObjectiveSpec(metric="loss", mode="min")
    statuses, configs = {}, {}
    state_path = outdir / SNAPSHOT_FILENAME
    if state_path.exists():
        try:
            with open(state_path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            obj = doc.get("config", {}).get("objective", {})
            objective = ObjectiveSpec(metric=obj.get("metric", "loss"), mode=obj.get("mode", "min"))
            for t in doc.get("trials", []):
                statuses[t["id"]] = t.get("status", "unknown")
                configs[t["id"]] = t.get("config", {})
        except (json.JSONDecodeError, OSError, KeyError, ValueError):
            logger.warning("could not read %s; statuses will be unknown", state_path)
    return objective, statuses, configs


def rank_trials(outdir: Path, top_n: Optional[int] = None):
    """Rank trials in results.jsonl by best canonical objective.

    Returns (objective, rows, skipped_line_count); rows are dicts sorted by
    (best canonical value, trial id).
    """
    results_path = outdir / RESULTS_FILENAME
    if not results_path.exists():
        raise MissingLog(f"no {RESULTS_FILENAME} in {outdir}")
    objective, statuses, configs = _load_report_context(outdir)
    best: dict = {}
    skipped = 0
    with open(results_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                tid = rec["trial"]
                value = objective.canonical(rec["metrics"])
                step = int(rec["step"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                skipped += 1
                continue
            entry = best.setdefault(tid, {"canonical": value, "last_step": step})
            entry["canonical"] = min(entry["canonical"], value)
            entry["last_step"] = max(entry["last_step"], step)
    ranked = sorted(best.items(), key=lambda kv: (kv[1]["canonical"], kv[0]))
    rows = [
        {
            "trial": tid,
            "best_value": objective.user_value(entry["canonical"]),
            "last_step": entry["last_step"],
            "status": statuses.get(tid, "unknown"),
            "config": configs.get(tid, {}),
        }
        for tid, entry in ranked
    ]
    if top_n is not None:
        rows = rows[:top_n]
    return objective, rows, skipped


def cmd_report(outdir: str, top_n: int, fmt: str) -> int:
    try:
        objective, rows, skipped = rank_trials(Path(outdir), top_n)
    except MissingLog as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if skipped:
        print(f"warning: skipped {skipped} corrupt result line(s)", file=sys.stderr)
    if fmt == "json":
        print(
            json.dumps(
                {
                    "objective": {"metric": objective.metric, "mode": objective.mode},
                    "trials": rows,
                    "skipped_lines": skipped,
                },
                indent=2,
            )
        )
        return EXIT_OK
    header = f"{'rank':<6}{'trial':<8}{'status':<12}{'best ' + objective.metric:<16}{'step':>6}  config"
    print(header)
    print("-" * len(header))
    for rank, row in enumerate(rows, start=1):
        config_str = json.dumps(row["config"], separators=(",", ":"))
        print(
            f"{rank:<6}{row['trial']:<8}{row['status']:<12}"
            f"{row['best_value']:<16.6g}{row['last_step']:>6}  {config_str}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tunecore", description="Experiment orchestration for hyperparameter search."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config file")
    p_run.add_argument("config", help="path to the experiment config (JSON)")

    p_resume = sub.add_parser("resume", help="resume an interrupted experiment")
    p_resume.add_argument("outdir", help="experiment output directory")
    p_resume.add_argument(
        "--max-concurrent",
        type=int,
        default=None,
        help="override the capacity-implied concurrency limit",
    )

    p_report = sub.add_parser("report", help="rank trials from an experiment directory")
    p_report.add_argument("outdir", help="experiment output directory")
    p_report.add_argument("--top", type=int, default=5, help="show the best N trials (default 5)")
    p_report.add_argument("--format", choices=("table", "json"), default="table")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "resume":
        return cmd_resume(args.outdir, args.max_concurrent)
    if args.command == "report":
        return cmd_report(args.outdir, args.top, args.format)
    return EXIT_CONFIG_ERROR  # pragma: no cover - argparse enforces choices


if __name__ == "__main__":
    sys.exit(main())
