"""Frozen-artifact checks: the stream format and decoder output may not drift."""

import os
import struct

import numpy as np
import pytest

from blockcs.decoder import reconstruct_image
from blockcs.encoder import FormatError, MeasurementStream, compress_image, load_pgm, save_pgm

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def golden_bytes(name: str) -> bytes:
    with open(os.path.join(GOLDEN, name), "rb") as fh:
        return fh.read()


def test_constant_stream_matches_hand_derivation():
    # every byte of this file is derivable by hand: 17-byte header, then
    # the flat block's sums 64*100 and fifteen half-sums 32*100
    want = struct.pack("<4sBHHII", b"CSM1", 1, 16, 64, 8, 8)
    want += struct.pack("<16H", 6400, *([3200] * 15))
    assert golden_bytes("constant100_8x8_m16.csm") == want


def test_constant_stream_roundtrip_and_decode():
    raw = golden_bytes("constant100_8x8_m16.csm")
    stream = MeasurementStream.unpack(raw)
    assert (stream.m, stream.n, stream.width, stream.height) == (16, 64, 8, 8)
    assert stream.pack() == raw
    img, report = reconstruct_image(stream)
    assert np.array_equal(img, np.full((8, 8), 100, dtype=np.uint8))
    assert report.finished_residual == 1


def test_gradient_image_matches_formula():
    img = load_pgm(os.path.join(GOLDEN, "gradient16.pgm"))
    want = (np.arange(16)[:, None] * 16 + np.arange(16)[None, :]).astype(np.uint8)
    assert np.array_equal(img, want)


def test_gradient_compression_is_byte_stable():
    img = load_pgm(os.path.join(GOLDEN, "gradient16.pgm"))
    assert compress_image(img, 16).pack() == golden_bytes("gradient16_m16.csm")


def test_gradient_stream_roundtrip():
    raw = golden_bytes("gradient16_m16.csm")
    stream = MeasurementStream.unpack(raw)
    assert stream.pack() == raw


def test_gradient_reconstruction_is_byte_stable(tmp_path):
    stream = MeasurementStream.unpack(golden_bytes("gradient16_m16.csm"))
    img, _ = reconstruct_image(stream)
    out = str(tmp_path / "recon.pgm")
    save_pgm(out, img)
    with open(out, "rb") as fh:
        assert fh.read() == golden_bytes("gradient16_m16_recon.pgm")


@pytest.mark.parametrize(
    "mutate,message",
    [
        (lambda b: b"XSM1" + b[4:], "magic"),
        (lambda b: b[:4] + b"\x02" + b[5:], "version"),
        (lambda b: b[:5] + (0).to_bytes(2, "little") + b[7:], "measurement count"),
        (lambda b: b[:7] + (16).to_bytes(2, "little") + b[9:], "block size"),
        (lambda b: b[:9] + (0).to_bytes(4, "little") + b[13:], "zero image dimension"),
        (lambda b: b[:12], "truncated"),
        (lambda b: b + b"\x00\x00", "payload"),
    ],
)
def test_corrupted_headers_report_specified_errors(mutate, message):
    raw = golden_bytes("constant100_8x8_m16.csm")
    with pytest.raises(FormatError, match=message):
        MeasurementStream.unpack(mutate(raw))
