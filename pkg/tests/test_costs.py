import random
from fractions import Fraction

import pytest

from conftest import build_repertoire
from autodidact.costs import (
    CostParams,
    TaskMeasure,
    component_value,
    contribution,
    cost,
    measure_task,
    parse_ratio,
)
from autodidact.tasks import solves
from autodidact.validate import UsageIndex
from autodidact.vm import SolverProgram


def solver_of_bits(n_bits):
    # HALT instructions are 5 bits each plus the 5-bit terminator.
    assert n_bits % 5 == 0 and n_bits >= 5
    return SolverProgram(((1, ()),) * (n_bits // 5 - 1))


def test_cost_formula_direct_substitution():
    # alpha=1, L(s)=20 bits, one solved self-invented task with t'=5 and
    # r_new=1000 gives 20 + (5 - 1000) = -975.
    params = CostParams(alpha=Fraction(1), epsilon=Fraction(1), r_new=1000)
    solver = solver_of_bits(20)
    assert solver.size_bits == 20
    measures = {"t1": TaskMeasure(True, 5, 3)}
    rewards = {"t1": Fraction(1000)}
    assert cost(solver, measures, rewards, params) == Fraction(-975)


def test_unsolved_task_contributes_t_max():
    params = CostParams(t_max=500)
    solver = solver_of_bits(20)
    measures = {"t1": TaskMeasure(False, 7, 0)}
    rewards = {"t1": Fraction(0)}
    assert cost(solver, measures, rewards, params) == 20 + 500


def test_empty_task_set_costs_solver_bits():
    params = CostParams()
    solver = solver_of_bits(35)
    assert cost(solver, {}, {}, params) == 35


def test_acceptance_boundary_is_strict():
    params = CostParams(epsilon=Fraction(1))
    # savings of exactly epsilon are rejected: the rule is c* - c > epsilon
    assert not (Fraction(1) > params.epsilon)
    assert Fraction(101, 100) > params.epsilon


def test_r_new_must_exceed_t_max():
    with pytest.raises(ValueError):
        CostParams(t_max=1000, r_new=1000)


def test_t_prime_and_l_prime_fallbacks():
    params = CostParams(t_max=500, l_max=256)
    solved = TaskMeasure(True, 12, 9)
    failed = TaskMeasure(False, 500, 0)
    assert solved.t_prime(params) == 12 and solved.l_prime(params) == 9
    assert failed.t_prime(params) == 500 and failed.l_prime(params) == 256


def test_component_value_zero_when_unused():
    params = CostParams()
    usage = UsageIndex()
    assert component_value(5, usage, {}, params) == 0


def test_component_value_monotone_in_usage():
    params = CostParams(alpha=Fraction(1))
    usage = UsageIndex()
    usage.by_component[1] = {1}
    usage.by_component[2] = {1, 2, 3}
    contribs = {1: Fraction(-900), 2: Fraction(-900), 3: Fraction(-900)}
    lightly = component_value(1, usage, contribs, params)
    heavily = component_value(2, usage, contribs, params)
    assert heavily > lightly > 0  # used-by-every-task has the largest magnitude


def test_component_values_rebuild_equals_incremental():
    params = CostParams(alpha=Fraction(1))
    rng = random.Random(12)
    solver, items, usage = build_repertoire(rng, 4)
    contribs = {}
    for item in items:
        m, _t, _r = measure_task(solver, item.task, params, item.trace)
        contribs[item.index] = contribution(m, Fraction(params.r_new), params)
    incremental = {k: component_value(k, usage, contribs, params) for k in usage.by_component}
    from autodidact.validate import rebuild_usage

    rebuilt_usage = rebuild_usage(solver, items)
    rebuilt = {
        k: component_value(k, rebuilt_usage, contribs, params)
        for k in rebuilt_usage.by_component
    }
    assert incremental == rebuilt


def test_measure_task_uses_replay_for_stored_decisions():
    rng = random.Random(13)
    solver, items, _usage = build_repertoire(rng, 3)
    params = CostParams()
    for item in items:
        m, _t, rep = measure_task(solver, item.task, params, item.trace)
        assert m.solved
        direct, _ = solves(solver, item.task)
        assert m.steps == direct.steps


def test_parse_ratio_accepts_fractions_and_decimals():
    assert parse_ratio("3/4") == Fraction(3, 4)
    assert parse_ratio("2.5") == Fraction(5, 2)
    assert parse_ratio(7) == 7
