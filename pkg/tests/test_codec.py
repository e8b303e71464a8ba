import random
from fractions import Fraction

import pytest

from autodidact.bits import BitString
from autodidact.codec import (
    IncompleteProgram,
    UnknownOpcode,
    decode,
    encode,
    enumerate_programs,
    kraft_sum,
    kraft_tail_bound,
)
from autodidact.isa import SOLVER_ISA
from autodidact.meta import META_ISA


def brute_force_exact_decodes(max_bits, isa):
    """Oracle: try every bitstring up to max_bits, keep exact decodes."""
    found = []
    for length in range(1, max_bits + 1):
        for value in range(1 << length):
            bits = BitString(value, length)
            try:
                prog = decode(bits, isa)
            except Exception:
                continue
            if prog.consumed_bits == length:
                found.append(bits)
    return found


def test_terminator_only_is_the_empty_program():
    prog = decode(BitString.from_str("00000"))
    assert prog.instructions == ()
    assert prog.consumed_bits == 5


def test_one_opcode_then_terminator():
    bits = encode([(1, ())])  # HALT
    assert bits.length == 10
    prog = decode(bits)
    assert prog.instructions == ((1, ()),)
    assert prog.consumed_bits == 10


def test_trailing_junk_is_ignored():
    body = encode([(3, ()), (4, ())])
    for junk in ("1", "0110", "11111111111"):
        padded = body + BitString.from_str(junk)
        prog = decode(padded)
        assert prog.instructions == ((3, ()), (4, ()))
        assert prog.consumed_bits == body.length


def test_incomplete_program_signals_more_bits_needed():
    with pytest.raises(IncompleteProgram):
        decode(BitString.from_str("0001"))  # mid-opcode
    with pytest.raises(IncompleteProgram):
        decode(encode([(2, (3,))]).take(7))  # mid-immediate


def test_encode_rejects_unknown_opcodes():
    with pytest.raises(UnknownOpcode):
        encode([(29, ())])
    with pytest.raises(UnknownOpcode):
        encode([(1, (3,))])  # HALT takes no immediate


def test_round_trip_random_programs():
    rng = random.Random(11)
    codes = SOLVER_ISA.codes()
    for _ in range(250):
        prog = []
        for _ in range(rng.randrange(0, 8)):
            c = rng.choice(codes)
            args = tuple(rng.randrange(16) for _ in range(SOLVER_ISA.by_code[c].nibbles))
            prog.append((c, args))
        bits = encode(prog)
        back = decode(bits)
        assert back.instructions == tuple(prog)
        assert back.consumed_bits == bits.length
        assert encode(back.instructions) == bits


@pytest.mark.parametrize("isa", [SOLVER_ISA, META_ISA], ids=["solver", "meta"])
def test_prefix_freeness_exhaustive(isa):
    # No valid encoding is a proper prefix of another, checked by exhaustive
    # enumeration of every bitstring up to 12 bits.
    progs = brute_force_exact_decodes(12, isa)
    for i, a in enumerate(progs):
        for b in progs:
            if a is not b:
                assert not a.is_prefix_of(b)


@pytest.mark.parametrize("isa", [SOLVER_ISA, META_ISA], ids=["solver", "meta"])
def test_enumeration_matches_brute_force(isa):
    expected = brute_force_exact_decodes(12, isa)
    got = list(enumerate_programs(12, isa))
    assert got == sorted(expected)
    assert len(got) == len(set(got))


def test_enumeration_is_shortlex_sorted():
    progs = list(enumerate_programs(24))
    for a, b in zip(progs, progs[1:]):
        assert (a.length, a.value) < (b.length, b.value)


def test_enumeration_count_at_12_bits():
    # terminator-only plus the thirteen immediate-free opcodes
    assert len(list(enumerate_programs(12))) == 14


def test_minimum_length_yields_only_the_empty_program():
    assert [p.to_hex() for p in enumerate_programs(5)] == ["5:00"]
    assert list(enumerate_programs(4)) == []


@pytest.mark.parametrize("isa", [SOLVER_ISA, META_ISA], ids=["solver", "meta"])
def test_kraft_inequality_with_tail_bound(isa):
    head = kraft_sum(13, isa)
    assert head <= 1
    # The geometric tail bound covers every longer program as well.
    assert head + kraft_tail_bound(isa) <= 1


def test_kraft_sum_grows_monotonically():
    sums = [kraft_sum(b) for b in (5, 10, 15, 20)]
    assert sums == sorted(sums)
    assert sums[0] == Fraction(1, 32)
