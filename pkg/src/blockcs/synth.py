"""Deterministic synthetic grayscale images for experiments and benches.

Two generators: ``textured_image`` produces natural-looking content (smooth
shading, soft blobs, a faint oriented texture) used by the quality
experiments, and ``noise_image`` produces uniform pixel noise used by the
throughput bench, where early-exit blocks would flatter the numbers.
"""

from __future__ import annotations

import os

import numpy as np

from .encoder import save_pgm


def textured_image(width: int, height: int, seed: int) -> np.ndarray:
    """Synthetic photographic-style image, deterministic in the seed.

    The composition is mostly low-frequency: layered smooth cosine shading,
    a global ramp, a few soft blobs, then a faint texture that oscillates
    fast horizontally but slowly vertically. Keeping the texture's vertical
    band limited stops it from aliasing into the smooth content, which
    keeps quality scores well behaved across decoder settings.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.zeros((height, width))
    for _ in range(24):
        fx, fy = rng.uniform(-1, 1, 2) * 0.035
        amp = rng.uniform(0.4, 1.0) / (1.0 + 90 * np.hypot(fx, fy)) ** 1.3
        img += amp * np.cos(2 * np.pi * (fx * xx + fy * yy) + rng.uniform(0, 2 * np.pi))
    gx, gy = rng.uniform(-1, 1, 2)
    img += 0.35 * (gx * xx / width + gy * yy / height)
    for _ in range(4):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        rad = rng.uniform(0.12, 0.3) * min(width, height)
        dist = np.hypot(xx - cx, yy - cy)
        img += rng.uniform(-0.35, 0.35) * np.tanh((rad - dist) / 7.0)
    tex = np.zeros_like(img)
    for _ in range(10):
        fx = rng.uniform(0.18, 0.45) * rng.choice([-1, 1])
        fy = rng.uniform(-0.03, 0.03)
        tex += rng.uniform(0.3, 1.0) * np.cos(2 * np.pi * (fx * xx + fy * yy) + rng.uniform(0, 2 * np.pi))
    env = 0.5 + 0.5 * np.cos(
        2 * np.pi * (rng.uniform(-0.01, 0.01) * xx + rng.uniform(-0.01, 0.01) * yy)
        + rng.uniform(0, 2 * np.pi)
    )
    img += 0.10 * env * tex
    img -= img.min()
    img /= max(img.max(), 1e-9)
    img = img**0.8
    return np.round(img * 255).astype(np.uint8)


def noise_image(width: int, height: int, seed: int) -> np.ndarray:
    """Uniform random bytes; worst case for the decoder's early exits."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(height, width), dtype=np.uint8)


def write_corpus(out_dir: str, count: int = 12, size: int = 192, seed: int = 100) -> list[str]:
    """Write a corpus of textured PGMs; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for i in range(count):
        path = os.path.join(out_dir, f"synth_{i:02d}.pgm")
        save_pgm(path, textured_image(size, size, seed + i))
        paths.append(path)
    return paths
