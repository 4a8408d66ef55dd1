"""Walsh-Hadamard transforms in natural and sequency order.

The sequency ordering sorts rows by their number of sign changes, which for
images plays the role frequency does in a DCT: the basis for an N-pixel
block is the sequency-ordered Hadamard matrix scaled by 1/N. Both orderings
share the same butterfly network; sequency order is the natural-order
output permuted by bit-reversed Gray code, so a fast transform needs no
extra arithmetic, only different output wiring.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .fixedpoint import FixedContext


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@lru_cache(maxsize=None)
def hadamard_natural(n: int) -> np.ndarray:
    """Natural (Sylvester) order Hadamard matrix, entries +-1, int64."""
    if not _is_pow2(n):
        raise ValueError(f"size {n} is not a power of two")
    h = np.array([[1]], dtype=np.int64)
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h


@lru_cache(maxsize=None)
def sequency_permutation(n: int) -> tuple[int, ...]:
    """perm[s] = natural-order row index with sequency s.

    Gray-code the sequency index, then bit-reverse it.
    """
    if not _is_pow2(n):
        raise ValueError(f"size {n} is not a power of two")
    bits = n.bit_length() - 1
    out = []
    for s in range(n):
        g = s ^ (s >> 1)
        r = 0
        for _ in range(bits):
            r = (r << 1) | (g & 1)
            g >>= 1
        out.append(r)
    return tuple(out)


@lru_cache(maxsize=None)
def walsh_sequency(n: int) -> np.ndarray:
    """Sequency-ordered Walsh matrix, entries +-1, int64. Symmetric; W @ W = n*I."""
    h = hadamard_natural(n)
    return h[list(sequency_permutation(n))].copy()


def fwht_natural(vec: np.ndarray) -> np.ndarray:
    """In-place-style fast transform, natural output order. Works on the last axis."""
    v = np.asarray(vec).copy()
    n = v.shape[-1]
    if not _is_pow2(n):
        raise ValueError(f"length {n} is not a power of two")
    half = 1
    while half < n:
        shaped = v.reshape(v.shape[:-1] + (n // (2 * half), 2, half))
        a = shaped[..., 0, :] + shaped[..., 1, :]
        b = shaped[..., 0, :] - shaped[..., 1, :]
        v = np.stack([a, b], axis=-2).reshape(v.shape)
        half *= 2
    return v


def fwht_sequency(vec: np.ndarray) -> np.ndarray:
    """Fast transform with sequency-ordered output.

    Because the sequency matrix is symmetric this one routine serves as both
    analysis (pixels -> sequency spectrum) and, after a 1/n scale, synthesis.
    """
    v = fwht_natural(vec)
    return v[..., list(sequency_permutation(v.shape[-1]))]


def inverse_transform_fixed(coeffs_raw: list[int], ctx: FixedContext) -> list[int]:
    """Synthesize pixels from sequency coefficients in fixed point.

    Input is raw fixed-point sequency coefficients (length n, a power of
    two); output is raw fixed-point pixels, i.e. W @ coeffs / n where the
    1/n is folded into a final arithmetic right shift. Every add, subtract
    and shift is tallied on ``ctx``; sums are range-checked at every stage.
    """
    n = len(coeffs_raw)
    if not _is_pow2(n):
        raise ValueError(f"length {n} is not a power of two")
    perm = sequency_permutation(n)
    # W = P H with P a row permutation, and W is symmetric, so
    # W x = (P H)^T x = H (P^T x): scatter into natural order, then butterfly.
    v = [0] * n
    for s, p in enumerate(perm):
        v[p] = coeffs_raw[s]
    half = 1
    while half < n:
        for start in range(0, n, 2 * half):
            for i in range(start, start + half):
                a, b = v[i], v[i + half]
                v[i] = ctx.add(a, b)
                v[i + half] = ctx.sub(a, b)
        half *= 2
    shift = n.bit_length() - 1
    return [ctx.shift_right(x, shift) for x in v]
