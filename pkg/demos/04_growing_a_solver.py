"""A small end-to-end growth run under the strict no-forgetting rule.

Watch the engine invent tasks, search candidate (task, edit) pairs with the
doubling-budget scheduler, and freeze acceptances into an append-only
archive.  Then re-verify everything from the archive alone.
"""

import json
import tempfile
from pathlib import Path

from autodidact import Engine, RunConfig
from autodidact.audit import audit_archive
from autodidact.metrics import metrics_rows, write_metrics

workdir = Path(tempfile.mkdtemp(prefix="growth-demo-"))
config = RunConfig(
    variant="I",
    domain="mixed",
    seed=42,
    max_tasks=4,
    archive_path=str(workdir / "archive.jsonl"),
    metrics_path=str(workdir / "metrics.csv"),
)

events = []
engine = Engine(config, log=events.append)
result = engine.run()
write_metrics(result.entries, config.metrics_path)

print(f"accepted {result.accepted} tasks; archive at {config.archive_path}\n")
for row in metrics_rows(result.entries):
    print(
        f"phase {row['i']}: {row['kind']:8s} solver {row['solver_slots']:3d} slots"
        f" / {row['solver_bits']:4d} bits, solved in {row['steps']:2d} steps,"
        f" searched {row['candidates']} candidates up to t_lim {row['t_lim']}"
    )

print("\nthe frozen solver now:")
print(engine.solver.disassemble())
print("entry table:", engine.solver.entries)

print("\nwhat one archive line looks like:")
first = json.loads(Path(config.archive_path).read_text().splitlines()[0])
print(json.dumps(first, indent=2)[:600], "...")

print("\nfull re-audit from the archive alone:")
report = audit_archive(config.archive_path)
print(f"phases {report.phases}, novelty confirmed {report.novelty_confirmed},"
      f" preservation checks {report.preservation_checked}, failures {len(report.failures)}")
