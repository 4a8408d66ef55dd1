"""Image-side pipeline: PGM I/O, blocking, measurement, stream packing.

The sensing side of the codec is deliberately trivial: slice the image
into 8x8 tiles, and for each tile emit ``m`` unsigned sums of pixel
subsets selected by the binary operator rows. Sums of at most 64 bytes
fit comfortably in 16 bits, so the stream stores one little-endian u16
per measurement behind a fixed 17-byte header.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .sensing import SensingMatrix, build_sensing

BLOCK = 8

MAGIC = b"CSM1"
VERSION = 1
_HEADER = struct.Struct("<4sBHHII")


class FormatError(ValueError):
    """Malformed image file or measurement stream."""


def load_pgm(path: str) -> np.ndarray:
    """Read a binary (P5) PGM with maxval 255 into a uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos] not in b"\r\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: unexpected end of header at byte {start}")
        return data[start:pos]

    magic = token()
    if magic != b"P5":
        raise FormatError(f"{path}: expected P5 magic at byte 0, found {magic!r}")
    try:
        width, height, maxval = int(token()), int(token()), int(token())
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric header field near byte {pos}") from exc
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}, need 255")
    pos += 1  # single whitespace byte after maxval
    need = width * height
    raster = data[pos : pos + need]
    if len(raster) != need:
        raise FormatError(
            f"{path}: raster truncated at byte {pos + len(raster)}, need {need} pixels"
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def save_pgm(path: str, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise FormatError(f"need a 2-D uint8 array, got {img.dtype} ndim={img.ndim}")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def split_blocks(img: np.ndarray) -> np.ndarray:
    """Tile into 8x8 blocks, raster order, edge-replicated to a multiple of 8.

    Returns (num_blocks, 64) in the image's dtype, each block row-major.
    """
    img = np.asarray(img)
    h, w = img.shape
    if h == 0 or w == 0:
        raise ValueError("zero-size image")
    ph = (-h) % BLOCK
    pw = (-w) % BLOCK
    if ph or pw:
        img = np.pad(img, ((0, ph), (0, pw)), mode="edge")
    hh, ww = img.shape
    tiles = img.reshape(hh // BLOCK, BLOCK, ww // BLOCK, BLOCK).transpose(0, 2, 1, 3)
    return tiles.reshape(-1, BLOCK * BLOCK).copy()


def assemble_blocks(blocks: np.ndarray, width: int, height: int) -> np.ndarray:
    """Inverse of split_blocks; crops the padding back off."""
    bw = (width + BLOCK - 1) // BLOCK
    bh = (height + BLOCK - 1) // BLOCK
    if blocks.shape != (bw * bh, BLOCK * BLOCK):
        raise ValueError(f"got {blocks.shape}, expected ({bw * bh}, {BLOCK * BLOCK})")
    tiles = blocks.reshape(bh, bw, BLOCK, BLOCK).transpose(0, 2, 1, 3)
    return tiles.reshape(bh * BLOCK, bw * BLOCK)[:height, :width]


def measure_block(pixels: np.ndarray, sensing: SensingMatrix) -> np.ndarray:
    """One block's measurements as plain integer sums (no multiplies)."""
    flat = np.asarray(pixels, dtype=np.int64).reshape(-1)
    if flat.shape[0] != sensing.n:
        raise ValueError(f"block has {flat.shape[0]} pixels, operator wants {sensing.n}")
    return np.array([int(flat[row == 1].sum()) for row in sensing.phi], dtype=np.int64)


def measure_blocks(blocks: np.ndarray, sensing: SensingMatrix) -> np.ndarray:
    """Measure many blocks at once.

    The matmul runs in float64, which is exact here (sums of at most 64
    bytes stay far below 2**53) and orders of magnitude faster than an
    integer matmul; chunking keeps the float transient small.
    """
    out = np.empty((blocks.shape[0], sensing.m), dtype=np.int64)
    phi_t = sensing.phi.T.astype(np.float64)
    step = 1 << 16
    for a in range(0, blocks.shape[0], step):
        part = blocks[a : a + step].astype(np.float64) @ phi_t
        out[a : a + step] = np.rint(part).astype(np.int64)
    return out


@dataclass
class MeasurementStream:
    """Packed codec payload: header fields plus per-block measurement rows."""

    m: int
    n: int
    width: int
    height: int
    data: np.ndarray = field(repr=False)  # (num_blocks, m) int64

    @property
    def num_blocks(self) -> int:
        return self.data.shape[0]

    def pack(self) -> bytes:
        if self.data.size and (self.data.min() < 0 or self.data.max() > 0xFFFF):
            raise FormatError("measurement out of u16 range")
        head = _HEADER.pack(MAGIC, VERSION, self.m, self.n, self.width, self.height)
        return head + self.data.astype("<u2").tobytes()

    @classmethod
    def unpack(cls, raw: bytes) -> "MeasurementStream":
        if len(raw) < _HEADER.size:
            raise FormatError(f"stream truncated at byte {len(raw)}, header needs {_HEADER.size}")
        magic, version, m, n, width, height = _HEADER.unpack_from(raw)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r} at byte 0")
        if version != VERSION:
            raise FormatError(f"unsupported version {version} at byte 4")
        if n != BLOCK * BLOCK:
            raise FormatError(f"unsupported block size {n} at byte 7")
        if not 1 <= m <= n:
            raise FormatError(f"bad measurement count {m} at byte 5")
        if width == 0 or height == 0:
            raise FormatError("zero image dimension at byte 9")
        bw = (width + BLOCK - 1) // BLOCK
        bh = (height + BLOCK - 1) // BLOCK
        need = bw * bh * m * 2
        body = raw[_HEADER.size :]
        if len(body) != need:
            raise FormatError(
                f"payload is {len(body)} bytes at byte {_HEADER.size}, expected {need}"
            )
        data = np.frombuffer(body, dtype="<u2").astype(np.int64).reshape(bw * bh, m)
        return cls(m=m, n=n, width=width, height=height, data=data)


def compress_image(img: np.ndarray, m: int, sensing: SensingMatrix | None = None) -> MeasurementStream:
    sensing = sensing or build_sensing(m)
    if sensing.m != m:
        raise ValueError(f"operator m={sensing.m} does not match requested m={m}")
    h, w = img.shape
    blocks = split_blocks(img)
    data = measure_blocks(blocks, sensing)
    return MeasurementStream(m=m, n=sensing.n, width=w, height=h, data=data)
