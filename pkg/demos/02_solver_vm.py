"""Running the solver: a step-budgeted stack machine with routed entry points.

One program serves many tasks: the entry table maps task identifier bits to
a start slot, unknown identifiers start at slot 0.  Runs are deterministic,
adversarial code just ends with a diagnostic instead of raising, and every
run reports exactly which instruction slots (components) it touched.
"""

from autodidact import BitString, SolverProgram, run_solver
from autodidact.isa import SOLVER_ISA
from autodidact.templates import copy_query_loop, copy_query_straight

print("== the compact looped copier ==")
loop = SolverProgram(copy_query_loop())
print(loop.disassemble())

task_input = BitString.from_str("0" + "0011" + "1011")  # tag, address, query
out = run_solver(loop, task_input, step_budget=64)
print(f"\ninput {task_input} -> output {out.output} in {out.steps_used} steps,"
      f" used {len(out.components_used)} of {loop.component_count} slots")

fast = SolverProgram(copy_query_straight())
out2 = run_solver(fast, task_input, step_budget=64)
print(f"unrolled variant: same output {out2.output} in {out2.steps_used} steps"
      f" but {fast.component_count} slots of code")

print("\n== budgets and faults ==")
spin = SolverProgram(SOLVER_ISA.assemble("JMP -1"))
res = run_solver(spin, BitString(), step_budget=50)
print(f"infinite loop under budget 50: halted={res.halted} reason={res.halt_reason}"
      f" billed={res.steps_used}")
crash = SolverProgram(SOLVER_ISA.assemble("POP"))
res = run_solver(crash, BitString(), step_budget=50)
print(f"stack underflow: reason={res.halt_reason}, billed the whole budget:"
      f" {res.steps_used} (executed {res.executed})")

print("\n== entry-point routing ==")
routed = SolverProgram(
    SOLVER_ISA.assemble("PUSH 0\nOUTPUT\nHALT\nPUSH 1\nOUTPUT\nHALT"),
    entries={BitString.from_str("1").to_hex(): 3},
)
for ident in ("0", "1"):
    r = run_solver(routed, BitString.from_str(ident), step_budget=8)
    print(f"identifier {ident} -> output {r.output} via slots {sorted(r.components_used)}")
