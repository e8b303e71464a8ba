"""Metrics and reports, regenerated deterministically from the archive.

Every number a row needs is frozen into the archive entry at acceptance
time, so metrics written after a resumed run are byte-identical to those of
an uninterrupted one.  No floats and no wall-clock values appear anywhere.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .archive import load_archive
from .validate import RepertoireItem, rebuild_usage

METRICS_FIELDS = [
    "i",
    "origin",
    "kind",
    "wow",
    "search_steps",
    "validation_steps",
    "revalidated",
    "candidates",
    "t_lim",
    "solver_slots",
    "solver_bits",
    "steps",
    "forgotten",
]

LEDGER_FIELDS = ["i", "c", "c_star", "savings", "solver_size", "solved_count"]


def metrics_rows(entries: list) -> list[dict]:
    rows = []
    for e in entries:
        m = e.meta
        rows.append(
            {
                "i": e.i,
                "origin": e.origin,
                "kind": m.get("kind", ""),
                "wow": int(bool(m.get("wow"))),
                "search_steps": m.get("search_steps", 0),
                "validation_steps": m.get("validation_steps", 0),
                "revalidated": m.get("revalidated", 0),
                "candidates": m.get("candidates", 0),
                "t_lim": m.get("t_lim", 0),
                "solver_slots": m.get("solver_slots", 0),
                "solver_bits": m.get("solver_bits", 0),
                "steps": m.get("steps", 0),
                "forgotten": m.get("forgotten", 0),
            }
        )
    return rows


def write_metrics(entries: list, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_FIELDS)
        writer.writeheader()
        for row in metrics_rows(entries):
            writer.writerow(row)


def ledger_rows(entries: list) -> list[dict]:
    from .costs import parse_ratio

    rows = []
    for e in entries:
        if e.c is None:
            continue
        savings = parse_ratio(e.c_star) - parse_ratio(e.c)
        rows.append(
            {
                "i": e.i,
                "c": e.c,
                "c_star": e.c_star,
                "savings": str(savings),
                "solver_size": e.meta.get("solver_bits", 0),
                "solved_count": e.meta.get("solved_count", 0),
            }
        )
    return rows


def write_cost_ledger(entries: list, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=LEDGER_FIELDS)
        writer.writeheader()
        for row in ledger_rows(entries):
            writer.writerow(row)


def summary(entries: list, config=None) -> dict:
    rows = metrics_rows(entries)
    out = {
        "tasks": len(entries),
        "by_origin": {
            "self": sum(1 for r in rows if r["origin"] == "self"),
            "external": sum(1 for r in rows if r["origin"] == "external"),
        },
        "by_kind": {
            "pattern": sum(1 for r in rows if r["kind"] == "pattern"),
            "decision": sum(1 for r in rows if r["kind"] == "decision"),
        },
        "wow_tasks": sum(r["wow"] for r in rows),
        "search_steps_total": sum(r["search_steps"] for r in rows),
        "final_solver_slots": rows[-1]["solver_slots"] if rows else 0,
        "final_solver_bits": rows[-1]["solver_bits"] if rows else 0,
    }
    if config is not None:
        out["config"] = {
            "variant": config.variant,
            "searcher": config.searcher,
            "domain": config.domain,
            "seed": config.seed,
            "prefix_mode": config.prefix_mode,
        }
    return out


def write_summary(entries: list, path, config=None) -> None:
    Path(path).write_text(
        json.dumps(summary(entries, config), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# The report tool: plottable views of an archive
# ---------------------------------------------------------------------------


def _final_usage(entries: list, archive_path):
    solver = entries[-1].solver_program()
    cost_archive = any(e.c is not None for e in entries)
    seen = set()
    repertoire = []
    for e in entries:
        task = e.task_obj()
        if task.identity() in seen:
            continue
        seen.add(task.identity())
        repertoire.append(
            RepertoireItem(
                index=len(repertoire) + 1,
                task=task,
                trace=e.trace_obj(archive_path),
                origin=e.origin,
            )
        )
    if not cost_archive:
        return rebuild_usage(solver, repertoire)
    # Cost archives judge tasks under t_max rather than per-task bounds.
    from .audit import _cost_params
    from .costs import measure_task
    from .validate import UsageIndex

    from fractions import Fraction

    params = _cost_params(entries[-1].meta, Fraction(1), Fraction(1), {})
    usage = UsageIndex()
    for item in repertoire:
        _m, _tr, rep = measure_task(solver, item.task, params, item.trace)
        usage.record(item.index, rep.components_used, item.entry_key)
    return usage


def write_report(archive_path, out_dir) -> dict:
    """Emit the summary plus CSVs: solver growth, per-acceptance search cost,
    component-reuse histogram, and the novel-versus-efficiency task mix."""
    entries = load_archive(archive_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = metrics_rows(entries)

    with open(out / "solver_size_over_time.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "solver_slots", "solver_bits"])
        for r in rows:
            w.writerow([r["i"], r["solver_slots"], r["solver_bits"]])

    with open(out / "search_cost_per_acceptance.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "search_steps", "validation_steps", "revalidated", "candidates", "t_lim"])
        for r in rows:
            w.writerow(
                [
                    r["i"],
                    r["search_steps"],
                    r["validation_steps"],
                    r["revalidated"],
                    r["candidates"],
                    r["t_lim"],
                ]
            )

    histogram: dict[int, int] = {}
    if entries:
        usage = _final_usage(entries, archive_path)
        histogram = {k: len(v) for k, v in sorted(usage.by_component.items()) if v}
    with open(out / "component_reuse_histogram.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["component", "task_count"])
        for k, n in histogram.items():
            w.writerow([k, n])

    wow = sum(r["wow"] for r in rows)
    with open(out / "task_mix.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["category", "count"])
        w.writerow(["novel", len(rows) - wow])
        w.writerow(["efficiency", wow])

    info = summary(entries)
    info["reuse_histogram_total"] = sum(histogram.values())
    (out / "report_summary.json").write_text(
        json.dumps(info, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return info
