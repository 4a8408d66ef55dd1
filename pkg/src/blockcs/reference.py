"""Floating-point oracles, quality metrics, and experiment drivers.

Everything here is allowed to use ordinary float math and serves as the
measuring stick for the integer decoder: a textbook greedy pursuit over an
arbitrary dense matrix, a Gaussian+DCT baseline pipeline, PSNR/SSIM, and
the two corpus experiments (baseline comparison, fraction-bit sweep).
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np
from scipy.ndimage import correlate1d

from .decoder import DecoderConfig, reconstruct_image
from .encoder import assemble_blocks, compress_image, split_blocks
from .fixedpoint import FixedFormat

RATE_TO_M = {0.25: 16, 0.5: 32, 0.75: 48}


class SolveFailure(RuntimeError):
    """Normal equations went singular; carries the support found so far."""

    def __init__(self, message: str, support: list[int]):
        super().__init__(message)
        self.support = support


def omp_reference(
    a: np.ndarray, y: np.ndarray, k_max: int, residual_tol: float = 0.0
) -> tuple[list[int], np.ndarray]:
    """Textbook greedy pursuit over a dense matrix.

    Each iteration picks the column with the largest absolute correlation
    against the residual (lowest index on ties), re-fits by least squares
    through the pivoted normal equations, and recomputes the residual.
    Correlations are weighted by inverse column norm, the standard form for
    a dictionary whose atoms are not unit length; all-zero columns weigh
    nothing and can never be picked. Stops at k_max picks or when the
    residual 2-norm drops to ``residual_tol``. Returns the support in pick
    order and the matching coefficients.
    """
    a = np.asarray(a, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = a.shape
    if not 1 <= k_max <= m:
        raise ValueError(f"bad k_max={k_max} for {m} measurements")
    norms = np.linalg.norm(a, axis=0)
    live = norms > 1e-12
    weight = np.where(live, 1.0 / np.where(live, norms, 1.0), 0.0)
    support: list[int] = []
    coeffs = np.zeros(0)
    residual = y.copy()
    for _ in range(k_max):
        corr = np.abs(a.T @ residual) * weight
        corr[support] = -1.0
        j = int(np.argmax(corr))
        support.append(j)
        cols = a[:, support]
        gram = cols.T @ cols
        rhs = cols.T @ y
        try:
            coeffs = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolveFailure(f"singular normal matrix at support {support}", support) from exc
        residual = y - cols @ coeffs
        if float(np.linalg.norm(residual)) <= residual_tol:
            break
    return support, coeffs


def gaussian_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """i.i.d. normal(0, 1/m) measurement matrix from a seeded pcg64 stream."""
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 1.0 / math.sqrt(m), size=(m, n))


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal type-II cosine basis, one basis function per row."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * math.sqrt(2.0 / n)
    mat[0] /= math.sqrt(2.0)
    return mat


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for 8-bit images; inf if identical."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def _gauss_kernel(sigma: float, radius: int) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity, 11x11 Gaussian window, sigma 1.5.

    Windowed moments come from separable Gaussian filtering; the border
    band whose windows would hang off the image is cropped before
    averaging, so boundary handling never enters the score. Standard
    stabilizers K1=0.01, K2=0.03 at dynamic range 255.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    radius = 5
    if min(a.shape) < 2 * radius + 1:
        raise ValueError(f"image {a.shape} smaller than the {2 * radius + 1}-pixel window")
    w = _gauss_kernel(1.5, radius)

    def filt(x: np.ndarray) -> np.ndarray:
        return correlate1d(correlate1d(x, w, axis=0), w, axis=1)

    ux, uy = filt(a), filt(b)
    uxx, uyy, uxy = filt(a * a), filt(b * b), filt(a * b)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    score = ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
    core = score[radius:-radius, radius:-radius]
    return float(core.mean())


def reconstruct_structured(
    img: np.ndarray, m: int, config: DecoderConfig | None = None
) -> np.ndarray:
    """Round-trip an image through the integer pipeline."""
    stream = compress_image(img, m)
    out, _ = reconstruct_image(stream, config)
    return out


def reconstruct_gaussian_dct(
    img: np.ndarray, m: int, seed: int, k_max: int | None = None
) -> np.ndarray:
    """Classic float baseline: random Gaussian measurements, cosine basis.

    Same 8x8 blocking, same raster-vector signal model, and the same
    sparsity budget as the integer pipeline, so quality comparisons are
    like for like: the sparsifying basis is the length-64 cosine basis
    applied to the flattened block, the direct counterpart of the length-64
    sequency basis the integer pipeline uses. Coefficients are recovered
    per block by the dense reference pursuit.
    """
    k_max = k_max or m // 2
    h, w = img.shape
    blocks = split_blocks(img).astype(np.float64)
    phi = gaussian_matrix(m, 64, seed)
    basis = dct_matrix(64).T  # columns are cosine atoms
    a = phi @ basis
    measurements = blocks @ phi.T
    out = np.empty_like(blocks)
    for i in range(blocks.shape[0]):
        support, coeffs = omp_reference(a, measurements[i], k_max)
        theta = np.zeros(64)
        theta[support] = coeffs
        out[i] = basis @ theta
    pixels = np.clip(np.rint(out), 0, 255).astype(np.int64)
    return assemble_blocks(pixels, w, h).astype(np.uint8)


def compare_baseline(
    corpus: Sequence[tuple[str, np.ndarray]],
    rate: float,
    seed: int,
    config: DecoderConfig | None = None,
) -> list[dict]:
    """Per-image and mean quality rows for both pipelines at one rate.

    Row schema: image, rate, matrix ('structured' or 'gaussian_dct'),
    psnr, ssim. The two final rows carry image='mean'. Mean PSNR averages
    the per-image dB values.
    """
    if rate not in RATE_TO_M:
        raise ValueError(f"unsupported rate {rate}, pick one of {sorted(RATE_TO_M)}")
    if not corpus:
        raise ValueError("empty corpus")
    m = RATE_TO_M[rate]
    rows = []
    sums = {"structured": [0.0, 0.0], "gaussian_dct": [0.0, 0.0]}
    for name, img in corpus:
        for matrix, rec in (
            ("structured", reconstruct_structured(img, m, config)),
            ("gaussian_dct", reconstruct_gaussian_dct(img, m, seed)),
        ):
            p, s = psnr(img, rec), ssim(img, rec)
            rows.append({"image": name, "rate": rate, "matrix": matrix, "psnr": p, "ssim": s})
            sums[matrix][0] += p
            sums[matrix][1] += s
    for matrix in ("structured", "gaussian_dct"):
        rows.append(
            {
                "image": "mean",
                "rate": rate,
                "matrix": matrix,
                "psnr": sums[matrix][0] / len(corpus),
                "ssim": sums[matrix][1] / len(corpus),
            }
        )
    return rows


def sweep_fraction_bits(
    corpus: Sequence[tuple[str, np.ndarray]],
    bits: Iterable[int] = range(8, 13),
    m: int = 16,
    threads: int | None = None,
) -> list[dict]:
    """Mean corpus PSNR per fraction-bit width, with successive increments.

    Row schema: frac_bits, psnr, increment (None on the first row). The
    whole decoder is rebuilt per width, so the tabulated solve constants
    are requantized each time.
    """
    if not corpus:
        raise ValueError("empty corpus")
    rows: list[dict] = []
    prev = None
    for nb in bits:
        config = DecoderConfig(fmt=FixedFormat(frac_bits=nb), threads=threads)
        total = 0.0
        for _, img in corpus:
            total += psnr(img, reconstruct_structured(img, m, config))
        mean = total / len(corpus)
        rows.append(
            {
                "frac_bits": nb,
                "psnr": mean,
                "increment": None if prev is None else mean - prev,
            }
        )
        prev = mean
    return rows


def write_report(path: str, rows: Sequence[dict]) -> None:
    """Write experiment rows as a plain CSV with a header line."""
    if not rows:
        raise ValueError("no rows to write")
    cols = list(rows[0].keys())
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_cell(row[c]) for c in cols) + "\n")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.6f}"
    return str(v)
