"""Archive re-verification: replay every acceptance with no shortcuts.

The audit reads nothing but the archive (tasks, traces and solver snapshots
are all inside), rebuilds each phase's before/after solvers, and re-checks
the full acceptance obligation with naive full revalidation, no usage index
involved.  For cost-based entries it recomputes both ledger values exactly
and compares them to the stored strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .archive import load_archive
from .costs import CostParams, cost, measure_task, parse_ratio
from .tasks import DecisionTask, solves
from .validate import RepertoireItem, _preservation_run
from .vm import EMPTY_SOLVER


@dataclass
class AuditFailure:
    phase: int
    check: str
    detail: str


@dataclass
class AuditReport:
    phases: int = 0
    novelty_confirmed: int = 0
    preservation_checked: int = 0
    cost_rows_checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def first_failing_phase(self) -> int:
        return min((f.phase for f in self.failures), default=0)


def _cost_params(entry_meta: dict, alpha, epsilon, external_rewards) -> CostParams:
    """Cost parameters for one ledger entry.

    Entries written by this engine carry their parameters, so the archive is
    self-sufficient; the caller-supplied values only cover older files.
    """
    stored = entry_meta.get("cost_params", {})
    return CostParams(
        alpha=parse_ratio(stored["alpha"]) if "alpha" in stored else alpha,
        epsilon=parse_ratio(stored["epsilon"]) if "epsilon" in stored else epsilon,
        t_max=stored.get("t_max", 500),
        l_max=stored.get("l_max", 256),
        r_new=stored.get("r_new", 1000),
        external_rewards=external_rewards,
    )


def audit_archive(
    archive_path,
    alpha: Fraction = Fraction(1),
    epsilon: Fraction = Fraction(1),
) -> AuditReport:
    """Re-verify every frozen acceptance from the archive alone.

    Variant is detected per entry (cost fields present or not).  For the
    no-forgetting variant each phase must show: the previous solver fails the
    new task within bounds, the frozen solver handles it, and the frozen
    solver still passes every earlier task (patterns re-run, decisions
    replayed against their stored traces).
    """
    report = AuditReport()
    entries = load_archive(archive_path)
    report.phases = len(entries)

    prev_solver = EMPTY_SOLVER
    repertoire: list[RepertoireItem] = []
    identities: dict[str, int] = {}
    external_rewards: dict[str, int] = {}
    origins: dict[str, str] = {}

    for entry in entries:
        i = entry.i
        try:
            solver = entry.solver_program()
            task = entry.task_obj()
            trace = entry.trace_obj(archive_path)
        except Exception as exc:  # corrupt entry: stop here, report the phase
            report.failures.append(AuditFailure(i, "decode", str(exc)))
            break
        identity = task.identity()
        origins.setdefault(identity, entry.origin)
        if entry.origin == "external" and "reward" in entry.meta:
            external_rewards[identity] = entry.meta["reward"]

        if entry.c is not None:
            _audit_cost_entry(
                report,
                entry,
                prev_solver,
                solver,
                task,
                trace,
                repertoire,
                identities,
                alpha,
                epsilon,
                external_rewards,
                origins,
            )
        else:
            _audit_strict_entry(report, entry, prev_solver, solver, task, trace, repertoire)

        if identity not in identities:
            identities[identity] = len(repertoire) + 1
            repertoire.append(
                RepertoireItem(
                    index=len(repertoire) + 1,
                    task=task,
                    trace=trace,
                    origin=entry.origin,
                )
            )
        prev_solver = solver
    return report


def _audit_strict_entry(report, entry, prev_solver, solver, task, trace, repertoire):
    i = entry.i
    prev_report, _ = solves(prev_solver, task)
    if prev_report.success:
        report.failures.append(
            AuditFailure(i, "novelty", "previous solver already solves the new task")
        )
    else:
        report.novelty_confirmed += 1

    if isinstance(task, DecisionTask):
        if trace is None:
            report.failures.append(AuditFailure(i, "trace", "decision task without a trace"))
            return
        new_item = RepertoireItem(index=0, task=task, trace=trace)
        rep, _ = _preservation_run(solver, new_item)
        if not rep.success:
            report.failures.append(
                AuditFailure(i, "solves_new", "stored trace does not replay on the frozen solver")
            )
    else:
        rep, _ = solves(solver, task)
        if not rep.success:
            report.failures.append(
                AuditFailure(i, "solves_new", "frozen solver fails its own new task")
            )

    for item in repertoire:
        rep, _ = _preservation_run(solver, item)
        report.preservation_checked += 1
        if not rep.success:
            report.failures.append(
                AuditFailure(
                    i, "preservation", f"task {item.index} lost at phase {i}"
                )
            )


def _audit_cost_entry(
    report,
    entry,
    prev_solver,
    solver,
    task,
    trace,
    repertoire,
    identities,
    alpha,
    epsilon,
    external_rewards,
    origins,
):
    i = entry.i
    params = _cost_params(entry.meta, alpha, epsilon, dict(external_rewards))
    identity = task.identity()
    is_new = identity not in identities

    task_set: dict[str, tuple] = {}
    for item in repertoire:
        task_set[item.task.identity()] = (item.task, item.trace)
    new_task_trace = trace if is_new else task_set[identity][1]
    task_set[identity] = (task, new_task_trace)

    def total(which_solver, live_new: bool) -> Fraction:
        measures = {}
        rewards = {}
        for ident, (t, tr) in sorted(task_set.items()):
            use_trace = tr
            if ident == identity and live_new:
                use_trace = None  # the solve that froze this entry ran live
            m, _new_tr, _rep = measure_task(which_solver, t, params, use_trace)
            measures[ident] = m
            if not m.solved:
                rewards[ident] = Fraction(0)
            elif origins.get(ident, "self") == "external":
                rewards[ident] = Fraction(external_rewards.get(ident, 0))
            else:
                rewards[ident] = Fraction(params.r_new)
        return cost(which_solver, measures, rewards, params)

    c_star = total(prev_solver, live_new=is_new)
    c = total(solver, live_new=False)
    report.cost_rows_checked += 1
    if str(c) != entry.c or str(c_star) != entry.c_star:
        report.failures.append(
            AuditFailure(
                i,
                "cost",
                f"recomputed c={c} c*={c_star}, stored c={entry.c} c*={entry.c_star}",
            )
        )
    if not (parse_ratio(entry.c_star) - parse_ratio(entry.c) > params.epsilon):
        report.failures.append(
            AuditFailure(i, "savings", "stored ledger row violates the strict savings rule")
        )
