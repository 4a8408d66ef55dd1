"""Binary measurement operator and the solve tables it induces.

Measurements are inner products with the first ``m`` sequency-ordered Walsh
rows remapped from {-1,+1} to {0,1}, so each measurement is a plain sum of
a pixel subset. Composing that operator with the synthesis basis W/n gives
an effective matrix with an arrowhead shape: a doubled top-left corner, a
constant first column, a constant diagonal, zeros elsewhere. Everything the
decoder needs (normal-equation inverses for every iteration count) then
reduces to one scalar per iteration, tabulated here exactly as fractions
and once more quantized to fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .fixedpoint import FixedFormat
from .transform import walsh_sequency


class StructureError(ValueError):
    """The effective matrix is not the expected arrowhead."""


def measurement_matrix(m: int, n: int) -> np.ndarray:
    """m x n binary matrix: first m sequency Walsh rows, shifted to {0,1}."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m} n={n}")
    w = walsh_sequency(n)
    return ((w[:m] + 1) // 2).astype(np.int64)


def derive_scale(phi: np.ndarray, n: int) -> Fraction:
    """Validate the arrowhead structure of (phi @ W)/n and return its scale.

    The check is exact integer arithmetic on phi @ W. Raises StructureError
    if any entry is off, so a corrupted or reordered operator cannot slip
    through to the solve tables.
    """
    m = phi.shape[0]
    if phi.shape != (m, n):
        raise StructureError(f"operator shape {phi.shape} does not match n={n}")
    prod = phi.astype(np.int64) @ walsh_sequency(n)
    corner = int(prod[0, 0])
    if corner <= 0 or corner % 2:
        raise StructureError(f"corner {corner} is not an even positive integer")
    v_num = corner // 2
    expect = np.zeros((m, n), dtype=np.int64)
    expect[0, 0] = corner
    if m > 1:
        idx = np.arange(1, m)
        expect[idx, 0] = v_num
        expect[idx, idx] = v_num
    if not np.array_equal(prod, expect):
        bad = np.argwhere(prod != expect)[0]
        raise StructureError(f"entry {tuple(bad)} breaks the arrowhead shape")
    return Fraction(v_num, n)


@dataclass(frozen=True)
class SensingMatrix:
    """Measurement operator plus its validated effective-matrix scale."""

    m: int
    n: int
    phi: np.ndarray = field(repr=False)
    scale: Fraction

    def effective(self) -> np.ndarray:
        """Effective float matrix mapping spectra to measurements."""
        return self.phi.astype(np.float64) @ walsh_sequency(self.n) / self.n


def build_sensing(m: int, n: int = 64) -> SensingMatrix:
    phi = measurement_matrix(m, n)
    scale = derive_scale(phi, n)
    return SensingMatrix(m=m, n=n, phi=phi, scale=scale)


@dataclass(frozen=True)
class SolveTable:
    """Per-iteration least-squares constants for the arrowhead system.

    With v = 1/2 the Gram matrix on a support of size t (slot 0 plus t-1
    singletons) is (1/4) * [[m+3, 1], [1, I]]; its inverse is fully
    described by one scalar per t:

        scale_t = 4 / (m + 4 - t)

    The inverse has scale_t in the corner, -scale_t down the first row and
    column, 4 + scale_t on the rest of the diagonal and scale_t off it. The
    integer 4 becomes ``side_shift`` (a left shift by 2); scale_t is stored
    exactly and as a round-to-nearest fixed-point raw.
    """

    m: int
    k_max: int
    fmt: FixedFormat
    scale_exact: tuple[Fraction, ...]
    scale_raw: tuple[int, ...]
    side_shift: int = 2

    @property
    def gram_corner(self) -> Fraction:
        return Fraction(self.m + 3, 4)

    @property
    def gram_side(self) -> Fraction:
        return Fraction(1, 4)


def build_solve_table(m: int, fmt: FixedFormat | None = None, k_max: int | None = None) -> SolveTable:
    fmt = fmt or FixedFormat()
    if k_max is None:
        k_max = m // 2
    if not 1 <= k_max <= m:
        raise ValueError(f"bad k_max={k_max} for m={m}")
    exact = tuple(Fraction(4, m + 4 - t) for t in range(1, k_max + 1))
    raw = tuple(fmt.quantize_const(s) for s in exact)
    return SolveTable(m=m, k_max=k_max, fmt=fmt, scale_exact=exact, scale_raw=raw)
