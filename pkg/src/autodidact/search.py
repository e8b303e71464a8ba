"""Search over candidate programs: a doubling-budget scheduler and a stochastic baseline.

The scheduler realizes time-optimal ordered search: per phase it doubles a
time limit, materializes the set H of candidates p with P(p) * t_lim >= 1,
and gives each at most ceil(P(p) * t_lim) steps covering task invention,
solver modification and validation together.  Candidates run in shortlex
order; the first one whose validation succeeds wins, so re-running with a
larger ceiling can never change an already-accepted archive prefix.

Determinism of verdicts lets conclusively rejected candidates be skipped on
later doublings without changing any observable behaviour; only candidates
whose earlier attempt was cut by the budget are retried.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .bits import BitString
from .isa import ARG_BITS, OPCODE_BITS, TERMINATOR
from .meta import (
    COMPUTE_OPS,
    EDIT_OPS,
    GRID_TASK_OPS,
    META_ISA,
    M_V_DESC,
    PATTERN_TASK_OPS,
    TASK_OPS,
    MalformedEdit,
    MalformedTask,
    MetaContext,
    MetaProgram,
    Meter,
    Proposal,
    run_meta,
    undo_storage,
)
from .prior import Prior
from .validate import BudgetExhausted
from .vm import Changed, FrozenViolation, InvalidResult, SolverProgram, apply_modification


class SearchCeilingReached(RuntimeError):
    """No acceptable pair within the configured budget; the engine halts gracefully."""


# Materializing one shortlex bucket beyond this many candidates would exhaust
# memory long before the time limit matters; treat it as hitting the ceiling.
BUCKET_GUARD = 4_000_000


@dataclass
class Acceptance:
    meta: MetaProgram
    proposal: Proposal
    solver: SolverProgram
    changed: Changed
    details: object  # judge-specific payload (validation report or cost report)


@dataclass
class PhaseStats:
    t_lim_trace: list = field(default_factory=list)
    candidates_run: int = 0
    candidates_cached: int = 0
    rejected: int = 0
    steps_total: int = 0
    budget_violations: int = 0
    undo_failures: int = 0
    undone_writes: int = 0
    max_len_bits: int = 0
    winner_budget: int = 0
    winner_prior: Optional[Fraction] = None
    t_lim: int = 0  # value at acceptance


# Judge: (q, changed, proposal, meter, novelty_cache) -> details or None when
# rejected; raises BudgetExhausted when the verdict is out of reach for now.
Judge = Callable[..., Optional[object]]


@dataclass
class SearchProblem:
    ctx: MetaContext
    prior: Prior
    judge: Judge
    domain: str = "mixed"
    external: bool = False
    paranoid: bool = False
    on_candidate: Optional[Callable] = None  # instrumentation hook


# ---------------------------------------------------------------------------
# Candidate space: grammar-valid programs in shortlex order
# ---------------------------------------------------------------------------

_T_WIDTH = {c: META_ISA.width(c) for c in TASK_OPS}
_E_WIDTH = {c: META_ISA.width(c) for c in EDIT_OPS}
_C_WIDTH = {c: META_ISA.width(c) for c in COMPUTE_OPS}
_V_CODE = M_V_DESC


def _arg_space(code: int):
    nargs = META_ISA.by_code[code].nibbles
    if nargs == 0:
        return ((),)
    if nargs == 1:
        return tuple((a,) for a in range(16))
    return tuple((a, b) for a in range(16) for b in range(16))


# Static stack effect of each opcode: (cells required, net change).  The
# meta stack starts empty, so any candidate that must underflow can never be
# well-behaved; such programs are pruned at enumeration time, which is
# observationally identical to running and rejecting them.
_STACK_EFFECT = {
    "MPUSH": (0, 1),
    "MSHL": (1, 0),
    "MDUP": (1, 1),
    "MADD": (2, -1),
    "ULOAD": (1, 0),
    "USTORE": (2, -2),
    "RD_TASK": (1, 0),
    "RD_SIZE": (0, 1),
    "RD_SOLV": (1, 0),
    "E_SET": (2, -2),
    "E_TRUNC": (1, -1),
}


def _effect(code: int) -> tuple[int, int]:
    return _STACK_EFFECT.get(META_ISA.by_code[code].name, (0, 0))


def _compose(first: tuple[int, int], rest: tuple[int, int]) -> tuple[int, int]:
    need = max(first[0], rest[0] - first[1])
    return need, first[1] + rest[1]


class CandidateSpace:
    """Lazily materialized shortlex buckets of well-formed candidates.

    A candidate is stored as (bit value, bit length, instruction parts); the
    encoding is reconstructed arithmetically so nothing is ever re-decoded.
    Bodies carry their static stack demands so impossible programs never
    reach the interpreter.
    """

    def __init__(self, domain: str, external: bool):
        task_ops = set(TASK_OPS)
        if domain == "pattern":
            task_ops -= GRID_TASK_OPS
        elif domain == "gridworld":
            task_ops -= PATTERN_TASK_OPS
        self.task_ops = sorted(task_ops)
        self.edit_ops = sorted(EDIT_OPS)
        self.compute_ops = sorted(COMPUTE_OPS)
        self.external = external
        self._inv: dict[int, list] = {}
        self._mod: dict[tuple, list] = {}
        self._dir: dict[int, list] = {}
        self._buckets: dict[int, list] = {}

    # Bodies are lists of (value, bits, instrs, needs, net) for op sequences
    # of exactly ``b`` body bits, generated in lexicographic order.

    def _instr_token(self, code: int, args: tuple) -> tuple[int, int]:
        v = code
        for a in args:
            v = (v << ARG_BITS) | a
        return v, OPCODE_BITS + ARG_BITS * len(args)

    def _inv_bodies(self, b: int) -> list:
        if b in self._inv:
            return self._inv[b]
        out = []
        if self.external:
            if b == 0:
                out.append((0, 0, (), 0, 0))
        else:
            for code in sorted(set(self.task_ops) | set(self.compute_ops)):
                w = META_ISA.width(code)
                eff = _effect(code)
                if code in self.task_ops:
                    if w != b:
                        continue
                    for args in _arg_space(code):
                        v, n = self._instr_token(code, args)
                        out.append((v, n, ((code, args),), 0, 0))
                else:
                    if w >= b:
                        continue
                    for args in _arg_space(code):
                        hv, hn = self._instr_token(code, args)
                        for tv, tn, ti, needs, net in self._inv_bodies(b - w):
                            cneed, cnet = _compose(eff, (needs, net))
                            out.append(
                                ((hv << tn) | tv, hn + tn, ((code, args),) + ti, cneed, cnet)
                            )
        self._inv[b] = out
        return out

    def _mod_bodies(self, b: int, has_edit: bool = False) -> list:
        key = (b, has_edit)
        if key in self._mod:
            return self._mod[key]
        out = []
        if b == 0:
            if has_edit:
                out.append((0, 0, (), 0, 0))
        else:
            for code in sorted(set(self.edit_ops) | set(self.compute_ops)):
                w = META_ISA.width(code)
                if w > b:
                    continue
                eff = _effect(code)
                nxt = has_edit or code in EDIT_OPS
                for args in _arg_space(code):
                    hv, hn = self._instr_token(code, args)
                    for tv, tn, ti, needs, net in self._mod_bodies(b - w, nxt):
                        cneed, cnet = _compose(eff, (needs, net))
                        out.append(
                            ((hv << tn) | tv, hn + tn, ((code, args),) + ti, cneed, cnet)
                        )
        self._mod[key] = out
        return out

    def _dir_bodies(self, b: int) -> list:
        if b in self._dir:
            return self._dir[b]
        out = []
        if b % OPCODE_BITS == 0:
            n = b // OPCODE_BITS
            instrs = tuple((_V_CODE, ()) for _ in range(n))
            v = 0
            for _ in range(n):
                v = (v << OPCODE_BITS) | _V_CODE
            out.append((v, b, instrs))
        self._dir[b] = out
        return out

    def bucket(self, total_bits: int) -> list:
        """All viable candidates of exactly total_bits, sorted lexicographically.

        Raises SearchCeilingReached if materializing the bucket would blow the
        resource guard: at that point no acceptable pair is reachable within
        realistic memory, which is the same outcome as an exhausted budget.
        """
        if total_bits in self._buckets:
            return self._buckets[total_bits]
        body = total_bits - 3 * OPCODE_BITS
        out = []
        if body >= 0:
            for b1 in range(0, body + 1):
                inv = [rec for rec in self._inv_bodies(b1) if rec[3] == 0]
                if not inv:
                    continue
                for b2 in range(0, body - b1 + 1):
                    mod = self._mod_bodies(b2)
                    if not mod:
                        continue
                    dirs = self._dir_bodies(body - b1 - b2)
                    if not dirs:
                        continue
                    if len(out) + len(inv) * len(mod) * len(dirs) > BUCKET_GUARD:
                        raise SearchCeilingReached(
                            f"candidate bucket at {total_bits} bits exceeds the resource guard"
                        )
                    for v1, n1, i1, _n1, net1 in inv:
                        for v2, n2, i2, needs2, _net2 in mod:
                            if needs2 > net1:
                                continue  # would underflow the shared stack
                            for v3, n3, i3 in dirs:
                                # p1 TERM p2 TERM p3 TERM
                                v = v1
                                v = (v << OPCODE_BITS) | TERMINATOR
                                v = (v << n2) | v2
                                v = (v << OPCODE_BITS) | TERMINATOR
                                v = (v << n3) | v3
                                v = (v << OPCODE_BITS) | TERMINATOR
                                out.append((v, i1, i2, i3))
            out.sort(key=lambda rec: rec[0])
        self._buckets[total_bits] = out
        return out

    def candidates(self, max_len_bits: int):
        """Shortlex stream of MetaPrograms up to the given encoded length."""
        for total in range(3 * OPCODE_BITS, max_len_bits + 1):
            for v, i1, i2, i3 in self.bucket(total):
                yield MetaProgram(BitString(v, total), i1, i2, i3)


_spaces: dict = {}


def candidate_space(domain: str, external: bool) -> CandidateSpace:
    key = (domain, external)
    if key not in _spaces:
        _spaces[key] = CandidateSpace(domain, external)
    return _spaces[key]


# ---------------------------------------------------------------------------
# Affordability cutoffs
# ---------------------------------------------------------------------------


def max_affordable_bits(prior: Prior, t_lim: int, space: CandidateSpace) -> int:
    """Largest encoded length any member of H = {P(p) * t_lim >= 1} can have.

    Uniform mode is exact (P = 2**-L).  Adapted mode bounds P(p) by a
    max-probability dynamic program over body bits; the program prior is a
    product over tokens, so the bound does not care how body bits split
    across the three subprograms.  Enumeration can stop once a full window
    of the widest token fails, because any longer program multiplies in at
    least one more sub-unit factor.
    """
    if not prior.adapted:
        return t_lim.bit_length() - 1  # floor(log2 t_lim)
    qmax: dict[int, Fraction] = {}
    for c in META_ISA.by_code:
        w = META_ISA.width(c)
        p = prior.opcode_prob(c) * Fraction(1, 1 << (w - OPCODE_BITS))
        qmax[w] = max(qmax.get(w, Fraction(0)), p)
    term_p = prior.opcode_prob(TERMINATOR)
    window = max(qmax)
    limit = Fraction(1, t_lim)
    head = term_p**3

    best = [Fraction(1)]  # best[b] = max token-product over bodies of b bits
    last_ok = 3 * OPCODE_BITS if head >= limit else 3 * OPCODE_BITS
    misses = 0
    b = 0
    while misses <= window and b < 600:
        b += 1
        m = Fraction(0)
        for w, q in qmax.items():
            if w <= b:
                cand = q * best[b - w]
                if cand > m:
                    m = cand
        best.append(m)
        if head * m >= limit:
            last_ok = b + 3 * OPCODE_BITS
            misses = 0
        else:
            misses += 1
    return last_ok


def ceil_fraction(f: Fraction) -> int:
    return -((-f.numerator) // f.denominator)


# ---------------------------------------------------------------------------
# The shared per-candidate pipeline
# ---------------------------------------------------------------------------


@dataclass
class CandidateRecord:
    verdict: str  # "accepted" | "rejected" | "budget"
    steps: int
    reason: str = ""


def fresh_caches() -> dict:
    """Per-phase memoization shared by all candidates of one phase.

    ``novelty`` maps task identity to the previous solver's verdict and its
    step bill; ``pair`` maps (task identity, edit script) to the judge's
    conclusive outcome and bill.  Candidates differing only in dead compute
    prefixes hit the pair cache and are billed exactly what a fresh run
    would bill, because runs are deterministic.
    """
    return {"novelty": {}, "pair": {}}


def try_candidate(
    meta: MetaProgram,
    problem: SearchProblem,
    budget: int,
    caches: Optional[dict] = None,
) -> tuple[CandidateRecord, Optional[Acceptance]]:
    """Run one candidate under a step budget, then unwind its scratch writes.

    All effects of a rejected candidate are confined to the journaled scratch
    store, which is always rewound, so rejection leaves the engine state
    bit-identical.
    """
    ctx = problem.ctx
    digest_before = ctx.scratch.digest() if problem.paranoid else None
    meter = Meter(budget)
    record: CandidateRecord
    accepted: Optional[Acceptance] = None
    try:
        proposal = run_meta(meta, ctx, meter)
        q, changed = apply_modification(ctx.solver, proposal.edits)
        details = problem.judge(q, changed, proposal, meter, caches or fresh_caches())
        if details is not None:
            record = CandidateRecord("accepted", meter.spent)
            accepted = Acceptance(meta, proposal, q, changed, details)
        else:
            record = CandidateRecord("rejected", meter.spent, "validation")
    except MalformedTask as exc:
        record = CandidateRecord("rejected", meter.spent, f"malformed_task: {exc}")
    except MalformedEdit as exc:
        record = CandidateRecord("rejected", meter.spent, f"malformed_edit: {exc}")
    except (FrozenViolation, InvalidResult) as exc:
        record = CandidateRecord("rejected", meter.spent, f"bad_edit: {exc}")
    except BudgetExhausted:
        record = CandidateRecord("budget", budget, "budget")
    finally:
        undone = undo_storage(ctx.scratch)
    record.steps = min(record.steps, budget)
    if problem.paranoid and ctx.scratch.digest() != digest_before:
        raise AssertionError("scratch storage not restored bit-exactly")
    if problem.on_candidate is not None:
        problem.on_candidate(meta, record, budget, undone)
    return record, accepted


# ---------------------------------------------------------------------------
# The doubling scheduler
# ---------------------------------------------------------------------------


def oops_search(
    problem: SearchProblem,
    step_ceiling: int,
    log: Optional[Callable] = None,
) -> tuple[Acceptance, PhaseStats]:
    """One phase of ordered search: double t_lim until a candidate validates.

    Each doubling processes, in shortlex order, first the candidates whose
    previous attempt was cut by their budget, then the candidates that only
    now satisfy P(p) * t_lim >= 1.  Conclusively rejected candidates would
    return the same verdict at any budget (everything is deterministic), so
    they are never re-run; retries always precede newly affordable programs
    in shortlex order because they are strictly shorter.
    """
    stats = PhaseStats()
    space = candidate_space(problem.domain, problem.external)
    prior = problem.prior
    uniform = not prior.adapted
    t_lim = 1
    stats.t_lim_trace.append(t_lim)
    caches = fresh_caches()
    retries: list[tuple[MetaProgram, Fraction]] = []
    deferred: list[tuple[MetaProgram, Fraction]] = []  # adapted mode only
    enumerated_upto = 3 * OPCODE_BITS - 1

    def run_one(meta: MetaProgram, p: Fraction):
        budget = ceil_fraction(p * t_lim)
        record, acc = try_candidate(meta, problem, budget, caches)
        stats.candidates_run += 1
        stats.steps_total += record.steps
        if record.steps > budget:
            stats.budget_violations += 1
        if acc is not None:
            stats.t_lim = t_lim
            stats.winner_budget = budget
            stats.winner_prior = p
            return acc
        stats.rejected += 1
        if record.verdict == "budget":
            next_retries.append((meta, p))
        return None

    while True:
        t_lim *= 2
        if t_lim > step_ceiling:
            raise SearchCeilingReached(
                f"no acceptable pair within t_lim ceiling {step_ceiling}"
            )
        stats.t_lim_trace.append(t_lim)
        max_bits = max_affordable_bits(prior, t_lim, space)
        stats.max_len_bits = max(stats.max_len_bits, max_bits)
        if log:
            log({"event": "doubling", "t_lim": t_lim, "max_bits": max_bits})

        next_retries: list[tuple[MetaProgram, Fraction]] = []
        # Previously budget-cut candidates, all shorter than anything new.
        for meta, p in retries:
            acc = run_one(meta, p)
            if acc is not None:
                return acc, stats
        # Adapted mode: previously enumerated but then-unaffordable programs.
        if deferred:
            still: list[tuple[MetaProgram, Fraction]] = []
            for meta, p in deferred:
                if p * t_lim >= 1:
                    acc = run_one(meta, p)
                    if acc is not None:
                        return acc, stats
                else:
                    still.append((meta, p))
            deferred = still
        # Newly reachable lengths, shortlex.
        for total in range(enumerated_upto + 1, max_bits + 1):
            for v, i1, i2, i3 in space.bucket(total):
                meta = MetaProgram(BitString(v, total), i1, i2, i3)
                if uniform:
                    p = Fraction(1, 1 << total)
                else:
                    p = prior.program_prior(meta.opcode_sequence, meta.nibble_count)
                    if p * t_lim < 1:
                        deferred.append((meta, p))
                        continue
                acc = run_one(meta, p)
                if acc is not None:
                    return acc, stats
        enumerated_upto = max(enumerated_upto, max_bits)
        retries = next_retries


# ---------------------------------------------------------------------------
# Stochastic baseline
# ---------------------------------------------------------------------------


def _sample_candidate(
    rng: random.Random, theta: dict, space: CandidateSpace
) -> MetaProgram:
    def weighted(codes):
        weights = [theta.get(c, 1) for c in codes]
        return rng.choices(codes, weights=weights, k=1)[0]

    def rand_args(code):
        return tuple(rng.randrange(16) for _ in range(META_ISA.by_code[code].nibbles))

    inventor = []
    if not space.external:
        for _ in range(rng.choices([0, 1, 2], weights=[16, 2, 1], k=1)[0]):
            c = weighted(space.compute_ops)
            inventor.append((c, rand_args(c)))
        t = weighted(space.task_ops)
        inventor.append((t, rand_args(t)))
    modifier = []
    e = weighted(space.edit_ops)
    modifier.append((e, rand_args(e)))
    while rng.random() < 0.2:
        c = weighted(space.edit_ops + space.compute_ops)
        modifier.append((c, rand_args(c)))
    directives = ((_V_CODE, ()),) if rng.random() < 1 / 16 else ()

    from .codec import encode

    code = encode(inventor, META_ISA) + encode(modifier, META_ISA) + encode(
        directives, META_ISA
    )
    return MetaProgram(code, tuple(inventor), tuple(modifier), tuple(directives))


def stochastic_search(
    problem: SearchProblem,
    seed: int,
    phase_index: int,
    theta: dict,
    candidate_budget: int = 4096,
    max_candidates: int = 200_000,
    log: Optional[Callable] = None,
) -> tuple[Acceptance, PhaseStats]:
    """Hill-climbing baseline: sample (task, edit) proposals, keep the first
    accepted one, then shift the proposal distribution toward it.

    Reseeded per phase from (seed, phase index) so an interrupted run resumes
    on exactly the same trajectory.  Acceptance goes through the very same
    judge as the ordered scheduler.
    """
    stats = PhaseStats()
    space = candidate_space(problem.domain, problem.external)
    rng = random.Random(f"{seed}:{phase_index}")
    novelty_cache: dict = {}
    for trial in range(max_candidates):
        meta = _sample_candidate(rng, theta, space)
        record, acc = try_candidate(meta, problem, candidate_budget, novelty_cache)
        stats.candidates_run += 1
        stats.steps_total += record.steps
        if acc is not None:
            for c in meta.opcode_sequence:
                if c != TERMINATOR:
                    theta[c] = theta.get(c, 1) * 2
            stats.t_lim = candidate_budget
            stats.winner_budget = candidate_budget
            return acc, stats
        stats.rejected += 1
    raise SearchCeilingReached(f"no acceptance within {max_candidates} samples")
