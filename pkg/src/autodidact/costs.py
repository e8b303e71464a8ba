"""Cost accounting for the cost-based acceptance variant.

Cost(s, TSET) = L(s) + alpha * sum over T of (t'(T) - r(T)), with t' clamped
to t_max for unsolved tasks and r the novelty or user reward.  All arithmetic
is exact rational so the strict acceptance inequality can never flip on
rounding, and stored ledgers can be reproduced bit for bit from the archive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .tasks import DecisionTask, Task, replay_check, solves
from .vm import SolverProgram


@dataclass(frozen=True)
class CostParams:
    alpha: Fraction = Fraction(1)
    epsilon: Fraction = Fraction(1)
    t_max: int = 500
    l_max: int = 256
    r_new: int = 1000
    external_rewards: dict = field(default_factory=dict)  # task identity -> reward

    def __post_init__(self):
        if self.alpha <= 0 or self.epsilon <= 0:
            raise ValueError("alpha and epsilon must be positive")
        if self.r_new <= self.t_max:
            raise ValueError("r_new must exceed t_max")

    def reward(self, task: Task, solved: bool, origin: str = "self") -> Fraction:
        if not solved:
            return Fraction(0)
        if origin == "external":
            return Fraction(self.external_rewards.get(task.identity(), 0))
        return Fraction(self.r_new)


@dataclass(frozen=True)
class TaskMeasure:
    """One task's contribution inputs: solved flag, runtime, component count."""

    solved: bool
    steps: int
    components: int

    def t_prime(self, params: CostParams) -> int:
        return self.steps if self.solved else params.t_max

    def l_prime(self, params: CostParams) -> int:
        return self.components if self.solved else params.l_max


def measure_task(
    solver: SolverProgram,
    task: Task,
    params: CostParams,
    trace=None,
    budget: Optional[int] = None,
):
    """Measure t' and l' for one task under the given solver.

    Decision tasks with a stored trace are measured by replay (divergence
    counts as unsolved); everything else runs live under the t_max budget.
    Returns (measure, fresh trace or None, underlying solve report); an
    inconclusive report means the caller's budget cut the run short.
    """
    probe = task_with_cost_bounds(task, params)
    if isinstance(task, DecisionTask) and trace is not None:
        rep = replay_check(solver, probe, trace, budget)
        return TaskMeasure(rep.success, rep.steps, len(rep.components_used)), None, rep
    rep, new_trace = solves(solver, probe, budget)
    return TaskMeasure(rep.success, rep.steps, len(rep.components_used)), new_trace, rep


def task_with_cost_bounds(task: Task, params: CostParams) -> Task:
    """The cost variant drops per-task bounds: judge within t_max, any size.

    Size limits must not sneak back in through the task object, otherwise
    solver growth could silently flip cached measures of untouched tasks.
    """
    big_n = 1 << 30
    if isinstance(task, DecisionTask):
        return DecisionTask(task.ident, task.goal, params.t_max, big_n, task.world)
    from .tasks import PatternTask

    return PatternTask(task.i1, task.i2, task.o, params.t_max, big_n)


def contribution(measure: TaskMeasure, reward: Fraction, params: CostParams) -> Fraction:
    return Fraction(measure.t_prime(params)) - reward


def cost(
    solver: SolverProgram,
    measures: dict[str, TaskMeasure],
    rewards: dict[str, Fraction],
    params: CostParams,
) -> Fraction:
    """L(s) + alpha * sum of per-task (t' - r); empty task set costs L(s)."""
    total = Fraction(solver.size_bits)
    for identity, m in measures.items():
        total += params.alpha * contribution(m, rewards.get(identity, Fraction(0)), params)
    return total


def component_value(
    k: int, usage, contributions: dict[int, Fraction], params: CostParams
) -> Fraction:
    """Val of component k: minus the summed contributions of tasks leaning on it.

    Informational only; reported in metrics so forgetting-averse variants can
    be built on top without touching acceptance.
    """
    total = Fraction(0)
    for task_index in usage.tasks_for_component(k):
        total += params.alpha * contributions.get(task_index, Fraction(0))
    return -total


def parse_ratio(text: str) -> Fraction:
    """Accept integers, decimals, or "p/q" strings (used by config and audit)."""
    text = str(text).strip()
    if "/" in text:
        num, den = text.split("/")
        return Fraction(int(num), int(den))
    return Fraction(text)
