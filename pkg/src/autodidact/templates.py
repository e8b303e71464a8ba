"""Pre-wired solver code fragments the modifier language can splice in.

The candidate language may invoke complex canned subprograms as primitive
instructions; these are those subprograms.  Each returns a tuple of solver
instructions ending in HALT, so a spliced segment is self-delimiting in
execution: it never runs off the program end.

Identifier layout reminder: pattern inputs are 9 bits (domain tag, 4-bit
database address, 4-bit query); decision inputs are tag plus 8 identifier
bits.  Templates that read the query skip the 5 leading bits first.
"""

from __future__ import annotations

from functools import lru_cache

from .grid import GridWorld, bfs_cost, shortest_path
from .isa import SOLVER_ISA
from .tasks import DecisionTask, Task


def _asm(text: str) -> tuple:
    return SOLVER_ISA.assemble(text)


@lru_cache(maxsize=None)
def copy_query_loop() -> tuple:
    """Echo the 4-bit query using counted skip and copy loops (compact, slow)."""
    return _asm(
        """
        PUSH 5      ; skip tag + address
        DUP
        JZ 4
        READBIT
        POP
        DEC
        JMP -6
        POP
        PUSH 4      ; copy the query
        DUP
        JZ 4
        READBIT
        OUTPUT
        DEC
        JMP -6
        POP
        HALT
        """
    )


@lru_cache(maxsize=None)
def copy_query_straight(skip: int = 5) -> tuple:
    """Echo the 4-bit query with unrolled reads (longer code, fewer steps).

    ``skip`` is how many leading identifier bits to discard; 5 covers the
    domain tag plus the database address.
    """
    head = "READBIT\nPOP\n" * skip
    copy = "READBIT\nOUTPUT\n" * 4
    return _asm(head + copy + "HALT")


@lru_cache(maxsize=None)
def negate_query() -> tuple:
    """Output the bitwise complement of the 4-bit query."""
    lines = ["READBIT", "POP"] * 5
    for _ in range(4):
        lines += ["READBIT", "JZ 3", "PUSH 0", "OUTPUT", "JMP 2", "PUSH 1", "OUTPUT"]
    lines.append("HALT")
    return _asm("\n".join(lines))


@lru_cache(maxsize=None)
def const_nibble(v: int, width: int = 4) -> tuple:
    """Output the low ``width`` bits of v regardless of the input."""
    if not 0 <= width <= 4:
        raise ValueError("width must be 0..4")
    lines = []
    for k in range(width - 1, -1, -1):
        lines += [f"PUSH {(v >> k) & 1}", "OUTPUT"]
    lines.append("HALT")
    return _asm("\n".join(lines))


@lru_cache(maxsize=None)
def grid_walk(world: GridWorld, goal: tuple) -> tuple | None:
    """Straight-line walk along the shortest path to the goal, then halt.

    Rewards pushed by ACT are popped so the stack stays flat.  Returns None
    when the goal is unreachable.
    """
    moves = shortest_path(world, world.start, goal)
    if moves is None:
        return None
    lines = []
    for m in moves:
        lines += [f"PUSH {m}", "ACT", "POP"]
    lines.append("HALT")
    return _asm("\n".join(lines))


# Compact template registry (single-nibble selector).  The unrolled fast
# variants live behind the wide two-nibble ops instead: a faster solver costs
# more description bits, so the search freezes compact slow code first and
# later speed-ups arrive as genuine efficiency tasks.
TEMPLATE_NAMES = ("copy_loop", "negate", "grid_walk")


def instantiate(index: int, task: Task) -> tuple[tuple, int]:
    """Build compact template ``index`` for the proposed task.

    Returns (instructions, extra_step_charge).  The grid walk charges its
    path-planning work; the static templates are free beyond their op cost.
    Raises ValueError when the template does not exist or does not apply.
    """
    if index == 0:
        return copy_query_loop(), 0
    if index == 1:
        return negate_query(), 0
    if index == 2:
        if not isinstance(task, DecisionTask):
            raise ValueError("grid_walk needs a decision task")
        code = grid_walk(task.world, task.goal.target_cell)
        if code is None:
            raise ValueError("goal unreachable")
        return code, bfs_cost(task.world)
    raise ValueError(f"no template {index}")


def instantiate_wide(index: int, param: int) -> tuple:
    """Build wide template ``index`` with its nibble parameter.

    0 is the unrolled skip-then-copy reader (param = bits to skip).
    Raises ValueError for unknown indices.
    """
    if index == 0:
        return copy_query_straight(param)
    raise ValueError(f"no wide template {index}")
