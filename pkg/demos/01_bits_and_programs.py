"""Bit strings and the self-delimiting program codec.

Everything the engine touches is a finite binary string: task identifiers,
solver code, candidate programs, outputs.  Programs are encoded with 5-bit
opcodes plus 4-bit immediates and closed by a dedicated terminator, so no
valid encoding is a prefix of another and the 2**-L(p) prior sums below 1.
"""

from autodidact import BitString, decode, encode, enumerate_programs, kraft_sum
from autodidact.codec import kraft_tail_bound
from autodidact.isa import SOLVER_ISA

print("== bit strings ==")
b = BitString.from_str("0101101")
print(f"bits {b}  serialized {b.to_hex()!r}  round trip ok:",
      BitString.from_hex(b.to_hex()) == b)

print("\n== encoding a small program ==")
prog = SOLVER_ISA.assemble("PUSH 1\nOUTPUT\nHALT")
bits = encode(prog)
print(SOLVER_ISA.disassemble(prog))
print(f"encodes to {bits.length} bits: {bits}")
decoded = decode(bits + BitString.from_str("110101"))
print("decoding ignores trailing junk, consumed", decoded.consumed_bits, "bits")

print("\n== the program space, shortest first ==")
for p in list(enumerate_programs(10))[:6]:
    inner = decode(p)
    names = [SOLVER_ISA.by_code[c].name for c, _ in inner.instructions] or ["(empty)"]
    print(f"  L={p.length:2d}  {p.to_hex():8s}  {' '.join(names)}")
total = sum(1 for _ in enumerate_programs(14))
print(f"programs of at most 14 bits: {total}")

print("\n== prefix property and the Kraft bound ==")
head = kraft_sum(13)
tail = kraft_tail_bound(SOLVER_ISA)
print(f"sum of 2^-L over programs up to 13 bits: {head} (= {float(head):.5f})")
print(f"geometric bound on everything longer:   {float(tail):.5f}")
print("head + tail <= 1:", head + tail <= 1)
