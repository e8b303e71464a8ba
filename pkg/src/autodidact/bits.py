"""Immutable bit strings: the common currency for programs, identifiers and outputs.

A BitString is stored as an (unsigned value, length) pair with the first bit
of the string being the most significant bit of the value.  Serialization
uses the ``"len:hex"`` format, MSB-first within each byte, so representations
are bit-exact across platforms.
"""

from __future__ import annotations

from typing import Iterable, Iterator


class BitString:
    __slots__ = ("value", "length")

    def __init__(self, value: int = 0, length: int = 0):
        if length < 0:
            raise ValueError("negative length")
        if value < 0 or (value >> length):
            raise ValueError(f"value {value:#x} does not fit in {length} bits")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "length", length)

    def __setattr__(self, name, val):
        raise AttributeError("BitString is immutable")

    # -- constructors ------------------------------------------------

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        value = 0
        length = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bit must be 0 or 1, got {b!r}")
            value = (value << 1) | b
            length += 1
        return cls(value, length)

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        """Parse a literal like ``"0101"``; spaces and underscores are ignored."""
        return cls.from_bits(int(c) for c in text if c in "01")

    @classmethod
    def from_hex(cls, serialized: str) -> "BitString":
        """Inverse of :meth:`to_hex`, accepting the ``"len:hex"`` format."""
        try:
            len_part, hex_part = serialized.split(":")
            length = int(len_part)
        except ValueError as exc:
            raise ValueError(f"bad bitstring literal {serialized!r}") from exc
        nbytes = (length + 7) // 8
        if len(hex_part) != 2 * nbytes:
            raise ValueError(f"hex part of {serialized!r} should be {2 * nbytes} chars")
        padded = int(hex_part, 16) if hex_part else 0
        pad = nbytes * 8 - length
        if padded & ((1 << pad) - 1):
            raise ValueError(f"nonzero padding bits in {serialized!r}")
        return cls(padded >> pad, length)

    # -- queries -----------------------------------------------------

    def __len__(self) -> int:
        return self.length

    def __bool__(self) -> bool:
        return self.length > 0

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.value >> (self.length - 1 - i)) & 1

    def __iter__(self) -> Iterator[int]:
        for i in range(self.length):
            yield (self.value >> (self.length - 1 - i)) & 1

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitString)
            and self.length == other.length
            and self.value == other.value
        )

    def __hash__(self) -> int:
        return hash((self.value, self.length))

    def __lt__(self, other: "BitString") -> bool:
        """Shortlex order: shorter first, ties broken with 0 before 1."""
        return (self.length, self.value) < (other.length, other.value)

    def is_prefix_of(self, other: "BitString") -> bool:
        if self.length > other.length:
            return False
        return (other.value >> (other.length - self.length)) == self.value

    # -- combination -------------------------------------------------

    def __add__(self, other: "BitString") -> "BitString":
        return BitString(
            (self.value << other.length) | other.value, self.length + other.length
        )

    def take(self, n: int) -> "BitString":
        """The first n bits."""
        if n > self.length:
            raise ValueError("take beyond end")
        return BitString(self.value >> (self.length - n), n)

    def drop(self, n: int) -> "BitString":
        """Everything after the first n bits."""
        if n > self.length:
            raise ValueError("drop beyond end")
        return BitString(self.value & ((1 << (self.length - n)) - 1), self.length - n)

    # -- serialization -----------------------------------------------

    def to_hex(self) -> str:
        nbytes = (self.length + 7) // 8
        if nbytes == 0:
            return "0:"
        padded = self.value << (nbytes * 8 - self.length)
        return f"{self.length}:{padded:0{2 * nbytes}x}"

    def to01(self) -> str:
        return "".join(str(b) for b in self)

    def __str__(self) -> str:
        return self.to01()

    def __repr__(self) -> str:
        return f"BitString({self.to_hex()!r})"


EMPTY = BitString()


def nibble(v: int) -> BitString:
    """A 4-bit bitstring holding v mod 16."""
    return BitString(v & 0xF, 4)
