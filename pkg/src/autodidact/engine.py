"""The growth loop: invent, modify, demonstrate, freeze, repeat.

Variant I accepts the first candidate pair whose new task is unsolvable by
the previous solver, solvable by the modified one, and loses no previously
learned task.  Variant II replaces that gate with explicit cost accounting:
accept when the whole-repertoire cost drops by more than epsilon, forgetting
allowed.  Both share the same searchers, candidate language, usage-indexed
incremental revalidation, scratch-undo isolation, and append-only archive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .archive import (
    AlreadySolvable,
    ArchiveEntry,
    ExternalTask,
    append_entry,
    load_archive,
    load_external_queue,
    repair_archive,
)
from .config import RunConfig
from .costs import CostParams, TaskMeasure, cost, measure_task
from .meta import MetaContext, Meter, ScratchStore, decode_meta
from .prior import Prior
from .search import (
    Acceptance,
    PhaseStats,
    SearchCeilingReached,
    SearchProblem,
    oops_search,
    stochastic_search,
)
from .isa import TERMINATOR
from .meta import META_ISA
from .tasks import DecisionTask, Task, solves
from .validate import (
    BudgetExhausted,
    RepertoireItem,
    UsageIndex,
    ValidationReport,
    demonstrate,
    revalidate_set,
    update_usage,
)
from .vm import EMPTY_SOLVER, SolverProgram


@dataclass
class V1Details:
    report: ValidationReport
    wow: bool


@dataclass
class V2Details:
    c: Fraction
    c_star: Fraction
    measures: dict  # identity -> TaskMeasure under the candidate
    usage_updates: dict  # task index -> (component set, entry key, steps)
    new_trace: object
    wow: bool
    forgotten: list
    solved_count: int
    sum_t_old_before: int
    sum_t_old_after: int
    billed: int = 0


@dataclass
class RunResult:
    accepted: int
    ceiling_reached: bool
    entries: list
    skipped_external: list = field(default_factory=list)


class Engine:
    def __init__(self, config: RunConfig, log: Optional[Callable] = None):
        self.config = config.validate()
        self.log = log or (lambda event: None)
        self.solver: SolverProgram = EMPTY_SOLVER
        self.repertoire: list[RepertoireItem] = []
        self.usage = UsageIndex()
        self.segments: list[tuple[int, int]] = []
        self.prior = Prior(META_ISA, adapted=config.adapt_prior)
        self.theta: dict[int, int] = {}
        self.scratch = ScratchStore()
        self.entries: list[ArchiveEntry] = []
        self.external_rewards: dict[str, int] = {}
        self.task_origin: dict[str, str] = {}
        self.cost_measures: dict[str, TaskMeasure] = {}
        self.skipped_external: list[str] = []
        if config.workers > 1:
            # Candidates could be validated in parallel under the
            # deterministic-winner contract; this build evaluates them
            # sequentially, which realizes that contract trivially.
            self.log({"event": "workers_sequential", "requested": config.workers})
        if config.resume:
            self._resume()

    # -- state reconstruction -------------------------------------------

    def _resume(self) -> None:
        self.entries = load_archive(self.config.archive_path)
        if repair_archive(self.config.archive_path, self.entries):
            self.log({"event": "archive_repaired", "entries": len(self.entries)})
        if not self.entries:
            return
        self.solver = self.entries[-1].solver_program()
        seen: set[str] = set()
        for entry in self.entries:
            task = entry.task_obj()
            identity = task.identity()
            self.task_origin.setdefault(identity, entry.origin)
            if entry.origin == "external" and "reward" in entry.meta:
                self.external_rewards[identity] = entry.meta["reward"]
            span = entry.meta.get("appended")
            if span:
                self.segments.append((span[0], span[1]))
            meta = decode_meta(_bits(entry.meta_code))
            self.prior.adapt(meta.opcode_sequence)
            for c in meta.opcode_sequence:
                if c != TERMINATOR:
                    self.theta[c] = self.theta.get(c, 1) * 2
            if identity in seen:
                continue
            seen.add(identity)
            item = RepertoireItem(
                index=len(self.repertoire) + 1,
                task=task,
                trace=entry.trace_obj(self.config.archive_path),
                origin=entry.origin,
            )
            self.repertoire.append(item)
        params = self._params()
        for item in self.repertoire:
            if self.config.variant == "II":
                measure, _tr, rep = measure_task(self.solver, item.task, params, item.trace)
                self.cost_measures[item.task.identity()] = measure
                item.components_used = rep.components_used
                item.steps = rep.steps
            else:
                from .validate import _preservation_run

                rep, _ = _preservation_run(self.solver, item)
                item.components_used = rep.components_used
                item.steps = rep.steps
            self.usage.record(item.index, item.components_used, item.entry_key)
        self.log({"event": "resumed", "phases": len(self.entries)})

    def _params(self) -> CostParams:
        return self.config.cost_params(self.external_rewards)

    # -- main loop ---------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.config
        queue = load_external_queue(cfg.external_tasks_path)
        ceiling = False
        while len(self.entries) < cfg.max_tasks:
            phase = len(self.entries) + 1
            external = self._next_external(queue)
            self.log(
                {
                    "event": "phase_start",
                    "i": phase,
                    "origin": "external" if external else "self",
                }
            )
            try:
                acceptance, stats = self._search_phase(phase, external)
            except SearchCeilingReached:
                self.log({"event": "ceiling", "i": phase})
                ceiling = True
                break
            self._commit(acceptance, stats, "external" if external else "self")
            self.log(
                {
                    "event": "accepted",
                    "i": phase,
                    "kind": acceptance.proposal.task.kind,
                    "candidates": stats.candidates_run,
                    "t_lim": stats.t_lim,
                    "steps": stats.steps_total,
                }
            )
        return RunResult(len(self.entries), ceiling, self.entries, self.skipped_external)

    def _next_external(self, queue: list[ExternalTask]) -> Optional[ExternalTask]:
        """First queued task the current solver cannot already handle.

        Tasks the solver solves within bounds are reported and skipped; this
        covers both genuinely trivial injections and queue entries that were
        already frozen on a previous run of the same queue file.
        """
        for item in queue:
            identity = item.task.identity()
            if identity in self.skipped_external:
                continue
            if self._already_solvable(item.task):
                self.skipped_external.append(identity)
                self.log(
                    {
                        "event": "external_rejected",
                        "reason": "AlreadySolvable",
                        "identity": identity,
                    }
                )
                continue
            return item
        return None

    def _already_solvable(self, task: Task) -> bool:
        if self.config.variant == "II":
            measure, _tr, _rep = measure_task(self.solver, task, self._params())
            return measure.solved
        report, _ = solves(self.solver, task)
        return report.success

    def _search_phase(self, phase: int, external: Optional[ExternalTask]):
        cfg = self.config
        if external is not None:
            identity = external.task.identity()
            self.task_origin[identity] = "external"
            if external.reward is not None:
                self.external_rewards[identity] = external.reward
        ctx = MetaContext(
            solver=self.solver,
            repertoire=self.repertoire,
            segments=self.segments,
            scratch=self.scratch,
            t_pattern=cfg.t_pattern,
            n_pattern=cfg.n_pattern,
            t_grid=cfg.t_grid,
            n_grid=cfg.n_grid,
            eps_wow=cfg.eps_wow,
            known_identities=(
                frozenset(item.task.identity() for item in self.repertoire)
                if cfg.variant == "I"
                else frozenset()
            ),
            external_task=external.task if external else None,
            wow_tightens=cfg.variant == "I",
        )
        judge = self._judge_v1 if cfg.variant == "I" else self._judge_v2
        problem = SearchProblem(
            ctx=ctx,
            prior=self.prior,
            judge=judge,
            domain=cfg.domain,
            external=external is not None,
            paranoid=cfg.paranoid,
        )
        if cfg.searcher == "oops":
            return oops_search(problem, cfg.step_ceiling, self.log)
        return stochastic_search(
            problem,
            cfg.seed,
            phase,
            self.theta,
            cfg.stoch_candidate_budget,
            cfg.stoch_max_candidates,
            self.log,
        )

    # -- Variant I ----------------------------------------------------------

    def _judge_v1(self, q, changed, proposal, meter: Meter, caches):
        pair_key = (proposal.task.identity(), tuple(proposal.edits))
        hit = caches["pair"].get(pair_key)
        if hit is not None:
            details, billed = hit
            meter.charge(billed)
            return details
        try:
            report = demonstrate(
                q,
                self.solver,
                proposal.task,
                self.repertoire,
                self.usage,
                changed,
                meter.left,
                paranoid=self.config.paranoid,
                novelty_cache=caches["novelty"],
            )
        except BudgetExhausted as exc:
            meter.charge(min(exc.steps_spent, meter.left))
            raise BudgetExhausted(meter.spent)
        meter.charge(report.steps_spent)
        if not report.accepted:
            caches["pair"][pair_key] = (None, report.steps_spent)
            return None
        wow = proposal.task.identifier.to_hex() in self.usage.by_entry
        details = V1Details(report, wow)
        caches["pair"][pair_key] = (details, report.steps_spent)
        return details

    # -- Variant II ----------------------------------------------------------

    def _measure(self, solver, task, trace, meter: Meter, params):
        measure, new_trace, rep = measure_task(solver, task, params, trace, meter.left)
        meter.charge(rep.steps)
        if not rep.conclusive:
            raise BudgetExhausted(meter.spent)
        return measure, new_trace, rep

    def _judge_v2(self, q, changed, proposal, meter: Meter, caches):
        params = self._params()
        task = proposal.task
        new_id = task.identity()
        pair_key = (new_id, tuple(proposal.edits))
        hit = caches["pair"].get(pair_key)
        if hit is not None:
            details, billed = hit
            meter.charge(billed)
            return details
        spent_before = meter.spent
        by_identity = {item.task.identity(): item for item in self.repertoire}

        star = dict(self.cost_measures)
        if new_id not in star:
            m_prev, _t, _r = self._measure(self.solver, task, None, meter, params)
            star[new_id] = m_prev

        q_measures = dict(star)
        usage_updates: dict = {}
        for j in sorted(revalidate_set(self.usage, changed)):
            item = self.repertoire[j - 1]
            identity = item.task.identity()
            m_q, _tr, rep = self._measure(q, item.task, item.trace, meter, params)
            q_measures[identity] = m_q
            usage_updates[j] = (rep.components_used, item.entry_key, rep.steps)
        # A re-proposed task keeps being judged against its original trace so
        # the ledger stays exactly reproducible from the archive alone.
        trace_for_new = by_identity[new_id].trace if new_id in by_identity else None
        m_new, new_trace, rep_new = self._measure(q, task, trace_for_new, meter, params)
        q_measures[new_id] = m_new

        c_star = self._total_cost(self.solver, star, params)
        c = self._total_cost(q, q_measures, params)
        if c_star - c <= params.epsilon:
            caches["pair"][pair_key] = (None, meter.spent - spent_before)
            return None

        old_ids = set(self.cost_measures)
        before = sum(star[i].t_prime(params) for i in old_ids)
        after = sum(q_measures[i].t_prime(params) for i in old_ids)
        forgotten = [
            i
            for i in old_ids
            if self.cost_measures[i].solved and not q_measures[i].solved
        ]
        if new_id in by_identity:
            usage_updates[by_identity[new_id].index] = (
                rep_new.components_used,
                task.identifier.to_hex(),
                rep_new.steps,
            )
        details = V2Details(
            c=c,
            c_star=c_star,
            measures=q_measures,
            usage_updates=usage_updates,
            new_trace=new_trace,
            wow=after < before,
            forgotten=sorted(forgotten),
            solved_count=sum(1 for m in q_measures.values() if m.solved),
            sum_t_old_before=before,
            sum_t_old_after=after,
            billed=meter.spent - spent_before,
        )
        caches["pair"][pair_key] = (details, details.billed)
        return details

    def _total_cost(self, solver, measures, params) -> Fraction:
        rewards = {}
        for identity, m in measures.items():
            if not m.solved:
                rewards[identity] = Fraction(0)
            elif self.task_origin.get(identity, "self") == "external":
                rewards[identity] = Fraction(self.external_rewards.get(identity, 0))
            else:
                rewards[identity] = Fraction(params.r_new)
        return cost(solver, measures, rewards, params)

    # -- commit ----------------------------------------------------------------

    def _commit(self, acc: Acceptance, stats: PhaseStats, origin: str) -> None:
        cfg = self.config
        task = acc.proposal.task
        identity = task.identity()
        i = len(self.entries) + 1
        self.task_origin.setdefault(identity, origin)

        details = acc.details
        duplicate = any(item.task.identity() == identity for item in self.repertoire)
        trace = None
        per_task_usage: dict = {}
        item_updates: dict = {}

        if isinstance(details, V1Details):
            report = details.report
            trace = report.new_trace if isinstance(task, DecisionTask) else None
            new_comps = report.new_outcome.components_used
            new_steps = report.new_outcome.steps
            for j in report.revalidated_tasks:
                rep = report.revalidation_reports[j]
                item_updates[j] = (rep.components_used, rep.steps)
            wow = details.wow
            forgotten: list = []
        else:
            trace = details.new_trace if isinstance(task, DecisionTask) else None
            new_comps = frozenset()
            new_steps = details.measures[identity].t_prime(self._params())
            for j, (comps, _key, steps) in details.usage_updates.items():
                item_updates[j] = (comps, steps)
            wow = details.wow
            forgotten = details.forgotten
            self.cost_measures = details.measures

        self.solver = acc.solver.frozen_copy() if cfg.prefix_mode else acc.solver
        if acc.proposal.appended:
            self.segments.append((acc.proposal.append_start, acc.proposal.appended))

        if not duplicate:
            item = RepertoireItem(
                index=len(self.repertoire) + 1,
                task=task,
                trace=trace,
                components_used=new_comps,
                steps=new_steps,
                origin=origin,
            )
            self.repertoire.append(item)
            per_task_usage[item.index] = (new_comps, item.entry_key)
            if isinstance(details, V2Details):
                _m, _tr, rep = measure_task(
                    self.solver, item.task, self._params(), item.trace
                )
                item.components_used = rep.components_used
                item.steps = rep.steps
                per_task_usage[item.index] = (rep.components_used, item.entry_key)
        for j, (comps, steps) in item_updates.items():
            target = self.repertoire[j - 1]
            target.components_used = comps
            target.steps = steps
            per_task_usage[j] = (comps, target.entry_key)
        update_usage(self.usage, per_task_usage)
        self.prior.adapt(acc.meta.opcode_sequence)
        # theta is the stochastic searcher's distribution; it updates itself
        # on acceptance, so the commit must not double the step.

        meta_info = {
            "kind": task.kind,
            "wow": wow,
            "entry_key": task.identifier.to_hex(),
            "search_steps": stats.steps_total,
            "validation_steps": (
                details.report.steps_spent
                if isinstance(details, V1Details)
                else details.billed
            ),
            "revalidated": (
                len(details.report.revalidated_tasks)
                if isinstance(details, V1Details)
                else len(details.usage_updates)
            ),
            "candidates": stats.candidates_run,
            "t_lim": stats.t_lim,
            "solver_slots": self.solver.component_count,
            "solver_bits": self.solver.size_bits,
            "steps": new_steps,
            "forgotten": len(forgotten),
            "duplicate": duplicate,
        }
        if acc.proposal.appended:
            meta_info["appended"] = [acc.proposal.append_start, acc.proposal.appended]
        if identity in self.external_rewards:
            meta_info["reward"] = self.external_rewards[identity]
        if isinstance(details, V2Details):
            meta_info["solved_count"] = details.solved_count
            meta_info["sum_t_old_before"] = details.sum_t_old_before
            meta_info["sum_t_old_after"] = details.sum_t_old_after
            params = self._params()
            # The ledger must be recomputable from the archive alone.
            meta_info["cost_params"] = {
                "alpha": str(params.alpha),
                "epsilon": str(params.epsilon),
                "t_max": params.t_max,
                "l_max": params.l_max,
                "r_new": params.r_new,
            }

        entry = ArchiveEntry(
            i=i,
            origin=origin,
            meta_code=acc.meta.code.to_hex(),
            solver=self.solver.to_json(),
            task=task.to_json(),
            trace=trace.to_json() if trace is not None else None,
            c=str(details.c) if isinstance(details, V2Details) else None,
            c_star=str(details.c_star) if isinstance(details, V2Details) else None,
            meta=meta_info,
        )
        append_entry(cfg.archive_path, entry, self.entries)


def _bits(hex_form: str):
    from .bits import BitString

    return BitString.from_hex(hex_form)


def inject_external_task(
    queue: list[ExternalTask],
    task: Task,
    reward: Optional[int] = None,
    solver: Optional[SolverProgram] = None,
) -> list[ExternalTask]:
    """Queue an externally defined task for the next search phases.

    When a solver is supplied, a task it already handles within bounds is
    refused with AlreadySolvable instead of being queued.
    """
    if solver is not None:
        report, _ = solves(solver, task)
        if report.success:
            raise AlreadySolvable(task.identity())
    queue.append(ExternalTask(task, reward))
    return queue
