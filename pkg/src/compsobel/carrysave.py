"""Bit-level words, custom 3:2 / 4:2 compressors and carry-propagate adders.

Every operation comes in two flavours:

* ``*_words`` functions work on raw unsigned bit patterns held in Python
  ints *or* numpy integer arrays, with the width passed explicitly.  The
  compressors are evaluated bit-parallel (one Boolean equation applied to
  every bit position at once); the adders walk the carry chain one bit at a
  time.  Both are exact gate-level models.
* The ``BitWord`` front-ends (``p2pp_compress`` and friends) validate widths
  and wrap results, for scalar use and for readable traces.

Bit 0 is the least significant bit everywhere.
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

MAX_WIDTH = 32


class ContractViolation(ValueError):
    """Operand widths or values break an operation's preconditions."""


def mask(width: int) -> int:
    return (1 << width) - 1


def sign_extend(value, from_width: int, to_width: int):
    """Sign-extend a raw ``from_width`` pattern to ``to_width`` bits (int or array)."""
    top = 1 << (from_width - 1)
    return ((value ^ top) - top) & mask(to_width)


def to_signed(value, width: int):
    """Two's-complement interpretation of a raw pattern (int or array)."""
    top = 1 << (width - 1)
    return (value ^ top) - top


@dataclass(frozen=True)
class BitWord:
    """Fixed-width bit vector.

    ``value`` holds the raw unsigned pattern; ``signed`` only changes how
    :attr:`int` interprets it.
    """

    width: int
    value: int = 0
    signed: bool = False

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise ContractViolation(f"width {self.width} outside 1..{MAX_WIDTH}")
        if not 0 <= self.value <= mask(self.width):
            raise ContractViolation(
                f"raw value {self.value:#x} has bits above width {self.width}")

    @classmethod
    def of(cls, value: int, width: int, signed: bool = False) -> "BitWord":
        """Build a word from an integer, wrapping modulo 2**width."""
        return cls(width, int(value) & mask(width), signed)

    @classmethod
    def from_bits(cls, bits, signed: bool = False) -> "BitWord":
        value = 0
        for i, b in enumerate(bits):
            value |= (int(b) & 1) << i
        return cls(len(bits), value, signed)

    @property
    def bits(self) -> Tuple[int, ...]:
        return tuple((self.value >> i) & 1 for i in range(self.width))

    def bit(self, i: int) -> int:
        if i < 0:
            return 0
        return (self.value >> i) & 1

    @property
    def uint(self) -> int:
        return self.value

    @property
    def sint(self) -> int:
        return to_signed(self.value, self.width)

    @property
    def int(self) -> int:
        return self.sint if self.signed else self.value

    def as_signed(self) -> "BitWord":
        return BitWord(self.width, self.value, True)

    def as_unsigned(self) -> "BitWord":
        return BitWord(self.width, self.value, False)

    def __str__(self):
        return f"0b{self.value:0{self.width}b}"


@dataclass(frozen=True)
class CsPair:
    """Carry-save pair; the carry word is already weighted (directly addable)."""

    sum: BitWord
    carry: BitWord

    def __post_init__(self):
        if self.sum.width != self.carry.width:
            raise ContractViolation("sum and carry words differ in width")

    @property
    def width(self) -> int:
        return self.sum.width

    def total(self) -> int:
        """Sum of the two words, modulo 2**width."""
        return (self.sum.value + self.carry.value) & mask(self.width)

    def __str__(self):
        return f"sum={self.sum} carry={self.carry}"


# Test hook: flips selected bits of a compressor's sum word.  Only ever set
# through ``inject_fault``.
_FAULTS: dict = {}


@contextlib.contextmanager
def inject_fault(stage: str, bit: int) -> Iterator[None]:
    """Flip ``bit`` of every ``stage`` ("p2pp" or "ppn") sum word inside the block."""
    if stage not in ("p2pp", "ppn"):
        raise ValueError(f"unknown compressor stage {stage!r}")
    previous = _FAULTS.get(stage)
    _FAULTS[stage] = 1 << bit
    try:
        yield
    finally:
        if previous is None:
            _FAULTS.pop(stage, None)
        else:
            _FAULTS[stage] = previous


def _majority(a, b, c):
    return (a & b) | (a & c) | (b & c)


def p2pp_words(x, y, z, width: int):
    """P2PP:PP layer on raw words: returns ``(sum, carry)`` with sum+carry = x + 2y + z.

    ``y`` enters one bit position up (its least significant slot is zero),
    which is where the doubling comes from.
    """
    m = mask(width)
    y_up = (y << 1) & m
    s = x ^ y_up ^ z
    c = (_majority(x, y_up, z) << 1) & m
    flip = _FAULTS.get("p2pp")
    if flip:
        s = s ^ (flip & m)
    return s, c


def ppn_words(x, y, z, width: int):
    """PPN:PP layer on raw words: returns ``(sum, carry)`` with sum+carry = x + y - z.

    The subtrahend is inverted in the carry majority and the sum is the
    inverted parity.  Carry bit 0 is forced to 1, supplying the +1 of the
    two's-complement negation.
    """
    m = mask(width)
    z_n = ~z & m
    s = ~(x ^ y ^ z) & m
    c = ((_majority(x, y, z_n) << 1) | 1) & m
    flip = _FAULTS.get("ppn")
    if flip:
        s = s ^ (flip & m)
    return s, c


def compress_4_2_words(a, b, c, d, width: int):
    """Two stacked 3:2 layers: sum+carry = a + 2b + c - d."""
    s, k = p2pp_words(a, b, c, width)
    return ppn_words(s, k, d, width)


def ripple_add_words(a, b, carry_in, width: int):
    """Ripple-carry adder; returns ``(result, carry_out)``."""
    carry = carry_in
    result = 0
    for i in range(width):
        ai = (a >> i) & 1
        bi = (b >> i) & 1
        p = ai ^ bi
        result = result | ((p ^ carry) << i)
        carry = (ai & bi) | (p & carry)
    return result, carry


def _lookahead_midpoint(a, b, carry_in, split: int):
    # Group generate/propagate over bits split-1 and split-2, fed by the
    # carry entering bit split-2.
    a1, b1 = (a >> (split - 1)) & 1, (b >> (split - 1)) & 1
    a2, b2 = (a >> (split - 2)) & 1, (b >> (split - 2)) & 1
    g = (a1 & b1) | ((a1 ^ b1) & (a2 & b2))
    p = (a1 ^ b1) & (a2 ^ b2)
    return g | (p & carry_in)


def lookahead_add_words(a, b, carry_in, width: int):
    """Split adder: two half-length ripple chains joined by one carry-prediction cell.

    The upper half never sees the lower half's carry-out; it starts from the
    predicted midpoint carry instead.  Widths below 4 fall back to
    :func:`ripple_add_words`.
    """
    if width < 4:
        return ripple_add_words(a, b, carry_in, width)
    split = (width + 1) // 2
    low_m = mask(split - 2)
    low, c_low = ripple_add_words(a & low_m, b & low_m, carry_in, split - 2)
    mid, _ = ripple_add_words((a >> (split - 2)) & 3, (b >> (split - 2)) & 3, c_low, 2)
    c_mid = _lookahead_midpoint(a, b, c_low, split)
    high, carry_out = ripple_add_words(a >> split, b >> split, c_mid, width - split)
    return low | (mid << (split - 2)) | (high << split), carry_out


def _check_widths(*words: BitWord) -> int:
    width = words[0].width
    for w in words[1:]:
        if w.width != width:
            raise ContractViolation(
                f"operand widths differ: {[x.width for x in words]}")
    return width


def _pair(raw, width: int, signed: bool) -> CsPair:
    s, c = raw
    return CsPair(BitWord(width, int(s), signed), BitWord(width, int(c), signed))


def p2pp_compress(x: BitWord, y: BitWord, z: BitWord) -> CsPair:
    width = _check_widths(x, y, z)
    return _pair(p2pp_words(x.value, y.value, z.value, width), width, x.signed)


def ppn_compress(x: BitWord, y: BitWord, z: BitWord) -> CsPair:
    width = _check_widths(x, y, z)
    return _pair(ppn_words(x.value, y.value, z.value, width), width, x.signed)


def compress_4_2(a: BitWord, b: BitWord, c: BitWord, d: BitWord) -> CsPair:
    _check_widths(a, b, c, d)
    first = p2pp_compress(a, b, c)
    return ppn_compress(first.sum, first.carry, d)


def _check_carry(carry_in: int) -> int:
    if carry_in not in (0, 1):
        raise ContractViolation(f"carry-in must be a single bit, got {carry_in!r}")
    return carry_in


def ripple_add(a: BitWord, b: BitWord, carry_in: int = 0) -> Tuple[BitWord, int]:
    width = _check_widths(a, b)
    result, cout = ripple_add_words(a.value, b.value, _check_carry(carry_in), width)
    return BitWord(width, result, a.signed), cout


def lookahead_add(a: BitWord, b: BitWord, carry_in: int = 0) -> Tuple[BitWord, int]:
    width = _check_widths(a, b)
    result, cout = lookahead_add_words(a.value, b.value, _check_carry(carry_in), width)
    return BitWord(width, result, a.signed), cout


def resolve(pair: CsPair, adder: Optional[str] = None) -> BitWord:
    """Collapse a carry-save pair with one carry-propagate addition."""
    add = lookahead_add if adder == "lookahead" else ripple_add
    return add(pair.sum, pair.carry, 0)[0]
