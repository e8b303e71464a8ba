import random
from fractions import Fraction

import pytest

from autodidact.bits import BitString
from autodidact.codec import encode
from autodidact.meta import (
    M_E_TPL,
    M_T_COPY,
    META_ISA,
    MetaContext,
    ScratchStore,
    decode_meta,
    well_formed,
)
from autodidact.prior import Prior
from autodidact.search import (
    SearchCeilingReached,
    SearchProblem,
    candidate_space,
    ceil_fraction,
    max_affordable_bits,
    oops_search,
    stochastic_search,
)
from autodidact.vm import SolverProgram


def make_ctx():
    return MetaContext(
        solver=SolverProgram(),
        repertoire=[],
        segments=[],
        scratch=ScratchStore(),
        t_pattern=64,
        n_pattern=1024,
        t_grid=48,
        n_grid=1024,
        eps_wow=5,
    )


def planted_problem(needed_steps: int, ctx=None):
    """A judge accepting exactly one known candidate if it can afford
    needed_steps of extra validation work."""
    target = decode_meta(
        encode([(M_T_COPY, (0,))], META_ISA)
        + encode([(M_E_TPL, (0,))], META_ISA)
        + encode([], META_ISA)
    )

    def judge(q, changed, proposal, meter, caches):
        meter.charge(needed_steps)
        if getattr(proposal.task, "i1", None) == 0 and proposal.appended == 17:
            return {"winner": True}
        return None

    return target, SearchProblem(ctx=ctx or make_ctx(), prior=Prior(META_ISA), judge=judge)


def test_budget_arithmetic_fail_then_succeed():
    # A candidate needing 9 steps with P(p) = 1/8 cannot finish with budget
    # ceil(1/8 * 64) = 8 but can with ceil(1/8 * 128) = 16.
    p = Fraction(1, 8)
    assert ceil_fraction(p * 64) == 8 < 9 <= ceil_fraction(p * 128)


def test_ceil_fraction():
    assert ceil_fraction(Fraction(7, 2)) == 4
    assert ceil_fraction(Fraction(4, 2)) == 2
    assert ceil_fraction(Fraction(1, 1000)) == 1


def test_oops_finds_the_planted_candidate_with_doubling_trace():
    target, problem = planted_problem(needed_steps=40)
    acc, stats = oops_search(problem, step_ceiling=2**60)
    assert acc.details == {"winner": True}
    assert acc.meta.code == target.code
    # t_lim trace is exactly 1, 2, 4, 8, ...
    trace = stats.t_lim_trace
    assert trace[0] == 1
    assert all(b == 2 * a for a, b in zip(trace, trace[1:]))
    assert stats.budget_violations == 0


def test_oops_total_work_bounded_by_f_over_p():
    # Order-optimality at toy scale: total work <= c * f / P(winner).
    target, problem = planted_problem(needed_steps=25)
    acc, stats = oops_search(problem, step_ceiling=2**60)
    f = 2 + 25  # meta ops plus judged work
    bound = f / float(Fraction(1, 1 << target.code.length))
    measured_c = stats.steps_total / bound
    assert measured_c <= 4.0


def test_first_found_semantics_stable_under_bigger_ceiling():
    _target, problem1 = planted_problem(needed_steps=12)
    acc1, _ = oops_search(problem1, step_ceiling=2**50)
    _t2, problem2 = planted_problem(needed_steps=12)
    acc2, _ = oops_search(problem2, step_ceiling=2**60)
    assert acc1.meta.code == acc2.meta.code


def test_ceiling_raises_gracefully():
    def never(q, changed, proposal, meter, caches):
        return None

    problem = SearchProblem(ctx=make_ctx(), prior=Prior(META_ISA), judge=never)
    with pytest.raises(SearchCeilingReached):
        oops_search(problem, step_ceiling=2**20)


def test_rejected_candidates_leave_no_trace():
    ctx = make_ctx()
    before = ctx.scratch.digest()
    solver_digest = ctx.solver.digest()

    def reject_all(q, changed, proposal, meter, caches):
        return None

    problem = SearchProblem(ctx=ctx, prior=Prior(META_ISA), judge=reject_all, paranoid=True)
    with pytest.raises(SearchCeilingReached):
        oops_search(problem, step_ceiling=2**18)
    assert ctx.scratch.digest() == before
    assert ctx.solver.digest() == solver_digest
    assert ctx.scratch.journal == []


def test_budget_conservation_per_candidate():
    seen = []

    def on_candidate(meta, record, budget, undone):
        seen.append((record.steps, budget))

    target, problem = planted_problem(needed_steps=33)
    problem.on_candidate = on_candidate
    oops_search(problem, step_ceiling=2**60)
    assert seen
    assert all(steps <= budget for steps, budget in seen)


def test_enumeration_is_shortlex_and_well_formed():
    space = candidate_space("mixed", False)
    stream = list(space.candidates(38))
    assert len(stream) == len({(m.code.value, m.code.length) for m in stream})
    lengths = [m.code.length for m in stream]
    assert lengths == sorted(lengths)
    rng = random.Random(0)
    for meta in rng.sample(stream, min(200, len(stream))):
        assert well_formed(meta, "mixed", False)
        assert decode_meta(meta.code).opcode_sequence == meta.opcode_sequence


def test_max_affordable_bits_uniform():
    prior = Prior(META_ISA)
    space = candidate_space("mixed", False)
    assert max_affordable_bits(prior, 2**33, space) == 33
    assert max_affordable_bits(prior, 2**33 + 5, space) == 33


def test_max_affordable_bits_adapted_covers_every_member():
    from autodidact.meta import MetaProgram

    prior = Prior(META_ISA, adapted=True)
    for _ in range(6):
        prior.adapt([1, 6, 0, 0, 0])
    space = candidate_space("mixed", False)
    t_lim = 2**40
    cutoff = max_affordable_bits(prior, t_lim, space)
    # Everything affordable sits at or below the cutoff; spot-check a window
    # of lengths just beyond it.
    for total in range(cutoff + 1, cutoff + 6):
        for v, i1, i2, i3 in space.bucket(total)[:400]:
            meta = MetaProgram(BitString(v, total), i1, i2, i3)
            p = prior.program_prior(meta.opcode_sequence, meta.nibble_count)
            assert p * t_lim < 1


def test_stochastic_same_seed_same_outcome():
    results = []
    for _ in range(2):
        target, problem = planted_problem(needed_steps=10)
        acc, stats = stochastic_search(
            problem, seed=5, phase_index=1, theta={}, candidate_budget=64,
            max_candidates=200_000,
        )
        results.append((acc.meta.code.to_hex(), stats.candidates_run))
    assert results[0] == results[1]


def test_stochastic_uses_the_same_judge_and_updates_theta():
    target, problem = planted_problem(needed_steps=10)
    theta = {}
    acc, _stats = stochastic_search(
        problem, seed=5, phase_index=1, theta=theta, candidate_budget=64,
        max_candidates=200_000,
    )
    assert acc.details == {"winner": True}
    # Proposal mass moved toward the accepted candidate's own opcodes.
    for code in set(acc.meta.opcode_sequence) - {0}:
        assert theta.get(code, 1) > 1


def test_stochastic_ceiling():
    def never(q, changed, proposal, meter, caches):
        return None

    problem = SearchProblem(ctx=make_ctx(), prior=Prior(META_ISA), judge=never)
    with pytest.raises(SearchCeilingReached):
        stochastic_search(problem, seed=1, phase_index=1, theta={}, max_candidates=50)
