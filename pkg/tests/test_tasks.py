import random

import pytest

from autodidact.bits import BitString, nibble
from autodidact.grid import (
    ACT_E,
    ACT_N,
    ACT_NOOP,
    EnvState,
    GOALS_PER_WORLD,
    WORLDS,
    env_step,
    shortest_path,
)
from autodidact.isa import SOLVER_ISA
from autodidact.patterns import MissingPattern, PATTERN_COUNT
from autodidact.tasks import (
    BelowThreshold,
    DecisionTask,
    GoalSpec,
    PatternTask,
    Trace,
    evaluate_goal,
    evaluate_goal_ex,
    make_efficiency_task,
    replay_check,
    solve_decision,
    solves_pattern,
    task_from_json,
)
from autodidact.templates import copy_query_loop, grid_walk
from autodidact.vm import SolverProgram


def bfs_oracle(world, src, dst):
    """Independent breadth-first search used to cross-check path lengths."""
    from collections import deque

    seen = {src}
    q = deque([(src, 0)])
    while q:
        pos, d = q.popleft()
        if pos == dst:
            return d
        for dx, dy in ((0, -1), (0, 1), (1, 0), (-1, 0)):
            nxt = (pos[0] + dx, pos[1] + dy)
            if not world.blocked(*nxt) and nxt not in seen:
                seen.add(nxt)
                q.append((nxt, d + 1))
    return None


def copy_task(i1=3, query="1011", t=64, n=1024):
    return PatternTask(i1, BitString.from_str(query), BitString.from_str(query), t, n)


# -- pattern tasks -----------------------------------------------------------


def test_copy_solver_solves_copy_task():
    solver = SolverProgram(copy_query_loop())
    report = solves_pattern(solver, copy_task())
    assert report.success
    assert report.steps == 63


def test_size_bound_fails_regardless_of_output():
    solver = SolverProgram(copy_query_loop())
    small = copy_task(n=len(copy_query_loop()))  # component count not < n
    assert not solves_pattern(solver, small).success


def test_time_bound_is_strict():
    solver = SolverProgram(copy_query_loop())
    assert solves_pattern(solver, copy_task(t=63)).success
    assert not solves_pattern(solver, copy_task(t=62)).success


def test_missing_pattern_address():
    with pytest.raises(MissingPattern):
        PatternTask(PATTERN_COUNT, nibble(0), nibble(0), 8, 8)


def test_task_identity_includes_bounds_and_env():
    a = copy_task(t=64)
    b = copy_task(t=60)
    assert a.identity() != b.identity()
    w0, w1 = WORLDS[0], WORLDS[1]
    d0 = DecisionTask(nibble(0) + nibble(0), GoalSpec(w0.goals[0]), 48, 1024, w0)
    d1 = DecisionTask(nibble(0) + nibble(0), GoalSpec(w0.goals[0]), 48, 1024, w1)
    assert d0.identity() != d1.identity()  # changed environment = different task


def test_task_json_round_trip():
    for task in [copy_task(), DecisionTask(nibble(1) + nibble(2), GoalSpec(WORLDS[1].goals[2]), 48, 512, WORLDS[1])]:
        back = task_from_json(task.to_json())
        assert back.identity() == task.identity()


# -- environment -------------------------------------------------------------


def test_env_noop_keeps_position():
    env = EnvState(WORLDS[0], WORLDS[0].start, WORLDS[0].goals[0])
    obs, reward, nxt = env_step(env, ACT_NOOP)
    assert reward == 0
    assert nxt.agent == env.agent


def test_env_wall_bump_costs_one():
    env = EnvState(WORLDS[0], (0, 0), (3, 3))
    obs, reward, nxt = env_step(env, ACT_N)  # off the top edge
    assert reward == -1
    assert nxt.agent == (0, 0)


def test_env_reaching_goal_rewards_plus_one():
    env = EnvState(WORLDS[0], (2, 0), (3, 0))
    obs, reward, nxt = env_step(env, ACT_E)
    assert reward == 1
    assert nxt.agent == (3, 0)


def test_observation_packs_cell_and_walls():
    world = WORLDS[0]
    obs = world.observation((0, 0))
    assert obs >> 4 == 0
    assert obs & 0x8 and obs & 0x1  # north and west blocked in the corner
    assert not (obs & 0x4) and not (obs & 0x2)


def test_shortest_path_matches_bfs_oracle_everywhere():
    for world in WORLDS:
        for gi in range(GOALS_PER_WORLD):
            goal = world.goals[gi]
            moves = shortest_path(world, world.start, goal)
            oracle = bfs_oracle(world, world.start, goal)
            assert moves is not None and oracle is not None
            assert len(moves) == oracle


def test_full_walk_reaches_goal_with_final_reward():
    world = WORLDS[2]
    goal = world.goals[1]
    moves = shortest_path(world, world.start, goal)
    env = EnvState(world, world.start, goal)
    rewards = []
    for m in moves:
        _obs, r, env = env_step(env, m)
        rewards.append(r)
    assert env.agent == goal
    assert rewards[-1] == 1 and all(r == 0 for r in rewards[:-1])


# -- goals and traces ---------------------------------------------------------


def _trace(world, goal, moves):
    env = EnvState(world, world.start, goal)
    steps = []
    for m in moves:
        obs, r, env = env_step(env, m)
        steps.append((obs, r, "u", m))
    return Trace(tuple(steps))


def test_goal_satisfied_on_clean_arrival():
    world = WORLDS[0]
    goal = world.goals[0]
    trace = _trace(world, goal, shortest_path(world, world.start, goal))
    assert evaluate_goal(GoalSpec(goal), trace, world)


def test_goal_rejects_empty_trace():
    assert not evaluate_goal(GoalSpec(WORLDS[0].goals[0]), Trace(), WORLDS[0])


def test_goal_rejects_negative_reward_step():
    world = WORLDS[0]
    goal = world.goals[0]
    moves = [ACT_N] + shortest_path(world, world.start, goal)  # bump first
    trace = _trace(world, goal, moves)
    ok, why = evaluate_goal_ex(GoalSpec(goal), trace, world)
    assert not ok and why == "reward_floor"


def test_goal_never_diverges_within_budget():
    world = WORLDS[0]
    big = Trace(tuple((0, 0, "u", ACT_NOOP) for _ in range(10_000)))
    ok, why = evaluate_goal_ex(GoalSpec(world.goals[0]), big, world)
    assert not ok and why == "predicate_divergence"


def test_trace_serialization_round_trip():
    world = WORLDS[1]
    goal = world.goals[0]
    trace = _trace(world, goal, shortest_path(world, world.start, goal))
    assert Trace.from_json(trace.to_json()) == trace


# -- replay --------------------------------------------------------------------


def grid_task(world_index=0, goal_index=0, t=48, n=1024):
    world = WORLDS[world_index]
    return DecisionTask(
        nibble(world_index) + nibble(goal_index),
        GoalSpec(world.goals[goal_index]),
        t,
        n,
        world,
    )


def test_replay_identity():
    task = grid_task()
    solver = SolverProgram(grid_walk(task.world, task.goal.target_cell))
    live, trace = solve_decision(solver, task)
    assert live.success
    replay = replay_check(solver, task, trace)
    assert replay.success
    assert replay.steps == live.steps  # cost equals the live run, no grid needed


def test_replay_detects_divergence():
    task = grid_task()
    solver = SolverProgram(grid_walk(task.world, task.goal.target_cell))
    _live, trace = solve_decision(solver, task)
    other = SolverProgram(grid_walk(task.world, task.world.goals[1]))
    assert not replay_check(other, task, trace).success


def test_replay_equals_live_success_for_the_recording_solver():
    # Oracle equivalence on random blind-walk programs.
    rng = random.Random(5)
    for _ in range(120):
        task = grid_task(rng.randrange(4), rng.randrange(4), t=40)
        moves = [rng.randrange(5) for _ in range(rng.randrange(0, 9))]
        lines = []
        for m in moves:
            lines += [f"PUSH {m}", "ACT", "POP"]
        lines.append("HALT")
        solver = SolverProgram(SOLVER_ISA.assemble("\n".join(lines)))
        live, trace = solve_decision(solver, task)
        assert replay_check(solver, task, trace).success == live.success


# -- efficiency tasks -----------------------------------------------------------


def test_time_saving_at_threshold_accepted():
    base = copy_task(t=100)
    tighter = make_efficiency_task(base, time_saving=10, eps_wow=10)
    assert tighter.t == 90
    assert tighter.identity() != base.identity()


def test_time_saving_below_threshold_rejected():
    with pytest.raises(BelowThreshold):
        make_efficiency_task(copy_task(t=100), time_saving=5, eps_wow=10)


def test_component_saving_counts_as_wow():
    base = copy_task(n=64)
    smaller = make_efficiency_task(base, size_saving=1, eps_wow=10)
    assert smaller.n == 63 and smaller.t == base.t
