"""Fixed-point arithmetic with operation accounting.

Values are raw two's-complement integers carrying an implicit scale of
2**-frac_bits (Q20.11 by default: a 32-bit container with 11 fractional
bits). Runtime right shifts truncate toward minus infinity, matching an
arithmetic shift in hardware. Table constants are quantized once, with
round-to-nearest, when the table is built; products with them are shifted
back down with the same truncating shift.

Every arithmetic call bumps a counter on the supplied context so a caller
can prove, after the fact, that a reconstruction performed no division and
only table-constant multiplies.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np


class FixedOverflowError(OverflowError):
    """A result left the representable raw range of the format."""


@dataclass(frozen=True)
class FixedFormat:
    """Q-format descriptor: ``total_bits`` wide, ``frac_bits`` fractional."""

    frac_bits: int = 11
    total_bits: int = 32

    def __post_init__(self):
        if not 0 < self.frac_bits < self.total_bits:
            raise ValueError(f"bad format Q{self.total_bits - self.frac_bits}.{self.frac_bits}")

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    def check_raw(self, raw: int) -> int:
        if raw < self.raw_min or raw > self.raw_max:
            raise FixedOverflowError(f"raw {raw} outside [{self.raw_min}, {self.raw_max}]")
        return raw

    def check_array(self, raw: np.ndarray) -> np.ndarray:
        # cheap batch variant of check_raw: one min/max scan
        if raw.size and (raw.min() < self.raw_min or raw.max() > self.raw_max):
            bad = raw[(raw < self.raw_min) | (raw > self.raw_max)][0]
            raise FixedOverflowError(f"raw {bad} outside [{self.raw_min}, {self.raw_max}]")
        return raw

    def from_int(self, value: int) -> int:
        return self.check_raw(int(value) << self.frac_bits)

    def to_float(self, raw) -> float:
        return raw / self.scale

    def quantize_const(self, value: Fraction | float) -> int:
        """Round-to-nearest raw for a build-time table constant."""
        f = Fraction(value)
        num, den = f.numerator * self.scale, f.denominator
        # floor(x + 1/2), exact in integers
        raw = (2 * num + den) // (2 * den)
        return self.check_raw(raw)


@dataclass
class OpCounters:
    """Tally of arithmetic events during a reconstruction."""

    adds: int = 0
    subs: int = 0
    shifts: int = 0
    compares: int = 0
    const_mults: int = 0
    divisions: int = 0

    def reset(self) -> None:
        for f in fields(self):
            setattr(self, f.name, 0)

    def merge(self, other: "OpCounters") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def total(self) -> int:
        return sum(self.as_dict().values())


class FixedContext:
    """Bundles a format with a counter set; all scalar ops go through here.

    Raw values are plain Python ints. Intermediate products may exceed the
    container (hardware uses a wide multiplier); only results are checked.
    """

    def __init__(self, fmt: FixedFormat | None = None, counters: OpCounters | None = None):
        self.fmt = fmt or FixedFormat()
        self.counters = counters if counters is not None else OpCounters()

    def from_int(self, value: int) -> int:
        return self.fmt.from_int(value)

    def to_float(self, raw: int) -> float:
        return self.fmt.to_float(raw)

    def add(self, a: int, b: int) -> int:
        self.counters.adds += 1
        return self.fmt.check_raw(a + b)

    def sub(self, a: int, b: int) -> int:
        self.counters.subs += 1
        return self.fmt.check_raw(a - b)

    def neg(self, a: int) -> int:
        return self.sub(0, a)

    def shift_left(self, a: int, bits: int) -> int:
        self.counters.shifts += 1
        return self.fmt.check_raw(a << bits)

    def shift_right(self, a: int, bits: int) -> int:
        # arithmetic shift: truncates toward minus infinity
        self.counters.shifts += 1
        return a >> bits

    def mul_const(self, a: int, const_raw: int) -> int:
        self.counters.const_mults += 1
        return self.fmt.check_raw((a * const_raw) >> self.fmt.frac_bits)

    def cmp(self, a: int, b: int) -> int:
        self.counters.compares += 1
        return (a > b) - (a < b)

    def abs_(self, a: int) -> int:
        # branchless sign test, negate, select: the negate is always
        # computed so the op count does not depend on the data
        self.counters.compares += 1
        self.counters.subs += 1
        return -a if a < 0 else a
