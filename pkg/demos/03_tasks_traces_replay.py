"""The two task domains, recorded traces, and environment-free replay.

Pattern tasks map an identifier to a target bitstring under step and size
bounds.  Decision tasks drop the solver into a deterministic gridworld and
judge the recorded trace with a goal predicate.  Preservation checks never
touch the grid again: the stored trace is replayed step by step.
"""

from autodidact import (
    BitString,
    DecisionTask,
    GoalSpec,
    PatternTask,
    SolverProgram,
    evaluate_goal,
    make_efficiency_task,
    replay_check,
    solves_pattern,
)
from autodidact.bits import nibble
from autodidact.grid import WORLDS, shortest_path
from autodidact.tasks import solve_decision
from autodidact.templates import copy_query_loop, grid_walk

print("== a pattern task and its bounds ==")
task = PatternTask(3, BitString.from_str("1011"), BitString.from_str("1011"), t=64, n=1024)
solver = SolverProgram(copy_query_loop())
report = solves_pattern(solver, task)
print(f"copy task solved: {report.success} in {report.steps} steps")
print("same task with t=62:", solves_pattern(solver, PatternTask(3, task.i2, task.o, 62, 1024)).success)

print("\n== an efficiency (wow) variant ==")
tighter = make_efficiency_task(task, time_saving=10, eps_wow=5)
print(f"bounds tightened {task.t} -> {tighter.t}; identity changed:",
      task.identity() != tighter.identity())

print("\n== a gridworld decision task ==")
world = WORLDS[1]
goal = world.goals[2]
dtask = DecisionTask(nibble(1) + nibble(2), GoalSpec(goal), t=48, n=1024, world=world)
walker = SolverProgram(grid_walk(world, goal))
live, trace = solve_decision(walker, dtask)
print(f"walk of {len(shortest_path(world, world.start, goal))} moves,"
      f" solved: {live.success} in {live.steps} steps")
print("trace steps (obs, reward, state digest, action):")
for step in trace.steps[:3]:
    print("  ", step)
print(f"goal predicate on the trace: {evaluate_goal(dtask.goal, trace, world)}")

print("\n== replay: no environment needed ==")
again = replay_check(walker, dtask, trace)
print(f"replay success {again.success} at the same cost ({again.steps} steps)")
stranger = SolverProgram(grid_walk(world, world.goals[0]))
print("a different walker diverges:", replay_check(stranger, dtask, trace).success)
