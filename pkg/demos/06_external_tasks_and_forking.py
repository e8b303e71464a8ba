"""Steering the engine from outside: injected tasks and forked solvers.

External tasks bypass the task inventor: the next phase must target them,
and anything the solver already handles is refused as AlreadySolvable.
Forking copies a frozen solver out of the archive for detached fine-tuning
with none of the no-forgetting obligations.
"""

import tempfile
from pathlib import Path

from autodidact import Engine, RunConfig
from autodidact.archive import ExternalTask, fork_solver, load_archive, save_external_queue
from autodidact.bits import nibble
from autodidact.tasks import PatternTask, solves

workdir = Path(tempfile.mkdtemp(prefix="external-demo-"))
base = RunConfig(
    variant="I",
    domain="pattern",
    seed=3,
    max_tasks=1,
    archive_path=str(workdir / "archive.jsonl"),
    metrics_path=str(workdir / "metrics.csv"),
)
Engine(base).run()
solver = load_archive(base.archive_path)[-1].solver_program()
print("phase 1 done; solver:", solver.component_count, "slots")

# Build one task the solver already handles and one it cannot.
first_task = load_archive(base.archive_path)[0].task_obj()
trivial = PatternTask(first_task.i1, first_task.i2, first_task.o, first_task.t + 16, first_task.n)
hard = next(
    task
    for i1 in range(12)
    for o in range(16)
    for task in [PatternTask(i1, nibble(5), nibble(o), 64, 1024)]
    if not solves(solver, task)[0].success
)
save_external_queue(workdir / "queue.jsonl", [ExternalTask(trivial), ExternalTask(hard, reward=9)])
print("queued one already-solvable task and one genuinely new task")

events = []
followup = RunConfig(
    variant="I",
    domain="pattern",
    seed=3,
    max_tasks=2,
    archive_path=base.archive_path,
    metrics_path=base.metrics_path,
    external_tasks_path=str(workdir / "queue.jsonl"),
    resume=True,
)
result = Engine(followup, log=events.append).run()
for e in events:
    if e.get("event") == "external_rejected":
        print("engine reported:", e["reason"], "for", e["identity"])
print("phase 2 origin:", result.entries[1].origin)

print("\n== forking ==")
fork = fork_solver(load_archive(base.archive_path), 1)
print(f"fork of phase 1: {fork.component_count} slots, frozen prefix {fork.frozen_prefix_len}"
      " (editable, detached from the archive)")
report, _ = solves(fork, first_task)
print("fork still solves its frozen task:", report.success)
