"""Command line harness: run experiments, audit archives, emit reports.

Exit codes: 0 success, 2 configuration error, 3 audit mismatch, 4 search
ceiling reached with zero acceptances.  Progress events stream as one JSON
object per line on standard error; all result files are deterministic
functions of (config, seed).
"""

from __future__ import annotations

import argparse
import json
import sys

from .audit import audit_archive
from .config import ConfigError, RunConfig
from .costs import parse_ratio
from .engine import Engine
from .metrics import write_cost_ledger, write_metrics, write_summary, write_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_AUDIT = 3
EXIT_CEILING = 4


def _log_stderr(event: dict) -> None:
    sys.stderr.write(json.dumps(event, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autodidact",
        description="Grow a problem solver by inventing the cheapest still-unsolved task.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a growth experiment")
    run.add_argument("--variant", default="I", choices=["I", "II"])
    run.add_argument("--searcher", default="oops", choices=["oops", "stochastic"])
    run.add_argument("--domain", default="mixed", choices=["pattern", "gridworld", "mixed"])
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--max-tasks", type=int, default=5)
    run.add_argument("--step-ceiling", type=int, default=2**52)
    run.add_argument("--alpha", default="1")
    run.add_argument("--epsilon", default="1")
    run.add_argument("--eps-wow", type=int, default=5)
    run.add_argument("--prefix-mode", action="store_true")
    run.add_argument("--paranoid", action="store_true")
    run.add_argument("--adapt-prior", action="store_true")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--archive", default="archive.jsonl")
    run.add_argument("--metrics", default="metrics.csv")
    run.add_argument("--external-tasks", default="")
    run.add_argument("--resume", action="store_true")

    audit = sub.add_parser("audit", help="re-verify every acceptance in an archive")
    audit.add_argument("archive")
    audit.add_argument("--alpha", default="1")
    audit.add_argument("--epsilon", default="1")

    rep = sub.add_parser("report", help="emit summary and plottable CSVs from an archive")
    rep.add_argument("archive")
    rep.add_argument("--out", default="report")
    return parser


def cmd_run(args) -> int:
    try:
        config = RunConfig(
            variant=args.variant,
            searcher=args.searcher,
            domain=args.domain,
            seed=args.seed,
            max_tasks=args.max_tasks,
            step_ceiling=args.step_ceiling,
            alpha=parse_ratio(args.alpha),
            epsilon=parse_ratio(args.epsilon),
            eps_wow=args.eps_wow,
            prefix_mode=args.prefix_mode,
            paranoid=args.paranoid,
            adapt_prior=args.adapt_prior,
            workers=args.workers,
            archive_path=args.archive,
            metrics_path=args.metrics,
            external_tasks_path=args.external_tasks,
            resume=args.resume,
        ).apply_env_overrides()
        config.validate()
    except (ConfigError, ValueError, ZeroDivisionError) as exc:
        _log_stderr({"event": "config_error", "error": str(exc)})
        return EXIT_CONFIG

    try:
        engine = Engine(config, log=_log_stderr)
        result = engine.run()
    except OSError as exc:
        _log_stderr({"event": "io_error", "error": str(exc)})
        return EXIT_CONFIG

    write_metrics(result.entries, config.metrics_path)
    if config.variant == "II":
        write_cost_ledger(result.entries, _sibling(config.metrics_path, "cost_ledger.csv"))
    write_summary(result.entries, _sibling(config.metrics_path, "summary.json"), config)
    if result.ceiling_reached and result.accepted == 0:
        return EXIT_CEILING
    return EXIT_OK


def _sibling(path: str, name: str) -> str:
    from pathlib import Path

    p = Path(path)
    return str(p.parent / name)


def cmd_audit(args) -> int:
    import os

    if not os.path.exists(args.archive):
        _log_stderr({"event": "io_error", "error": f"no archive at {args.archive}"})
        return EXIT_CONFIG
    try:
        report = audit_archive(
            args.archive, alpha=parse_ratio(args.alpha), epsilon=parse_ratio(args.epsilon)
        )
    except OSError as exc:
        _log_stderr({"event": "io_error", "error": str(exc)})
        return EXIT_CONFIG
    _log_stderr(
        {
            "event": "audit",
            "phases": report.phases,
            "novelty_confirmed": report.novelty_confirmed,
            "preservation_checked": report.preservation_checked,
            "cost_rows_checked": report.cost_rows_checked,
            "failures": len(report.failures),
            "first_failing_phase": report.first_failing_phase,
        }
    )
    for f in report.failures:
        _log_stderr({"event": "audit_failure", "phase": f.phase, "check": f.check, "detail": f.detail})
    return EXIT_OK if report.ok else EXIT_AUDIT


def cmd_report(args) -> int:
    import os

    if not os.path.exists(args.archive):
        _log_stderr({"event": "io_error", "error": f"no archive at {args.archive}"})
        return EXIT_CONFIG
    try:
        info = write_report(args.archive, args.out)
    except OSError as exc:
        _log_stderr({"event": "io_error", "error": str(exc)})
        return EXIT_CONFIG
    _log_stderr({"event": "report", "tasks": info["tasks"], "out": args.out})
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "audit":
        return cmd_audit(args)
    return cmd_report(args)


if __name__ == "__main__":
    sys.exit(main())
