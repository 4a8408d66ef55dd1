import numpy as np
import pytest

from blockcs.encoder import (
    FormatError,
    MeasurementStream,
    assemble_blocks,
    compress_image,
    load_pgm,
    measure_block,
    measure_blocks,
    save_pgm,
    split_blocks,
)
from blockcs.sensing import build_sensing
from blockcs.transform import fwht_sequency, walsh_sequency


@pytest.fixture(scope="module")
def sensing16():
    return build_sensing(16, 64)


def rand_img(h, w, seed=0):
    return np.random.default_rng(seed).integers(0, 256, size=(h, w), dtype=np.uint8)


# -- PGM I/O ------------------------------------------------------------


def test_pgm_roundtrip(tmp_path):
    img = rand_img(33, 57)
    path = str(tmp_path / "a.pgm")
    save_pgm(path, img)
    assert np.array_equal(load_pgm(path), img)


def test_pgm_single_pixel_bytes(tmp_path):
    path = str(tmp_path / "one.pgm")
    save_pgm(path, np.zeros((1, 1), dtype=np.uint8))
    with open(path, "rb") as fh:
        assert fh.read() == b"P5\n1 1\n255\n\x00"


def test_pgm_comments_and_whitespace(tmp_path):
    path = str(tmp_path / "c.pgm")
    raster = bytes(range(4))
    with open(path, "wb") as fh:
        fh.write(b"P5\n# a comment line\n2 2\n# another\n255\n" + raster)
    img = load_pgm(path)
    assert img.tolist() == [[0, 1], [2, 3]]


def test_pgm_bad_magic(tmp_path):
    path = str(tmp_path / "bad.pgm")
    with open(path, "wb") as fh:
        fh.write(b"P6\n1 1\n255\n\x00")
    with pytest.raises(FormatError, match="P5"):
        load_pgm(path)


def test_pgm_bad_maxval(tmp_path):
    path = str(tmp_path / "bad.pgm")
    with open(path, "wb") as fh:
        fh.write(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(FormatError, match="maxval"):
        load_pgm(path)


def test_pgm_truncated_raster_names_byte(tmp_path):
    path = str(tmp_path / "short.pgm")
    with open(path, "wb") as fh:
        fh.write(b"P5\n4 4\n255\n" + b"\x00" * 7)
    with pytest.raises(FormatError, match="byte"):
        load_pgm(path)


def test_save_pgm_rejects_non_uint8(tmp_path):
    with pytest.raises(FormatError):
        save_pgm(str(tmp_path / "x.pgm"), np.zeros((4, 4), dtype=np.int32))


# -- blocking -----------------------------------------------------------


def test_split_single_block_is_identity():
    img = rand_img(8, 8)
    blocks = split_blocks(img)
    assert blocks.shape == (1, 64)
    assert np.array_equal(blocks[0].reshape(8, 8), img)


def test_split_scan_order_left_then_right():
    img = rand_img(8, 16)
    blocks = split_blocks(img)
    assert blocks.shape == (2, 64)
    assert np.array_equal(blocks[0].reshape(8, 8), img[:, :8])
    assert np.array_equal(blocks[1].reshape(8, 8), img[:, 8:])


def test_split_pads_by_edge_replication():
    img = rand_img(8, 9)
    blocks = split_blocks(img)
    assert blocks.shape == (2, 64)
    second = blocks[1].reshape(8, 8)
    # column 0 is the real ninth column; the rest replicate it
    for c in range(8):
        assert np.array_equal(second[:, c], img[:, 8])


def test_split_rejects_empty():
    with pytest.raises(ValueError):
        split_blocks(np.zeros((0, 8), dtype=np.uint8))


@pytest.mark.parametrize("h,w", [(8, 8), (16, 8), (9, 8), (17, 23), (192, 192)])
def test_assemble_inverts_split(h, w):
    img = rand_img(h, w, seed=h * 100 + w)
    assert np.array_equal(assemble_blocks(split_blocks(img), w, h), img)


def test_assemble_rejects_wrong_count():
    with pytest.raises(ValueError):
        assemble_blocks(np.zeros((3, 64), dtype=np.int64), 8, 8)


# -- measurement --------------------------------------------------------


def test_measure_constant_block(sensing16):
    y = measure_block(np.full(64, 100, dtype=np.int64), sensing16)
    assert y[0] == 6400
    assert (y[1:] == 3200).all()


def test_measure_impulse_reads_column(sensing16):
    x = np.zeros(64, dtype=np.int64)
    x[0] = 1
    y = measure_block(x, sensing16)
    assert np.array_equal(y, sensing16.phi[:, 0])


def test_measure_matches_dense_multiply(sensing16):
    rng = np.random.default_rng(5)
    for _ in range(10):
        x = rng.integers(0, 256, size=64)
        assert np.array_equal(measure_block(x, sensing16), sensing16.phi @ x)


def test_measure_block_wrong_length(sensing16):
    with pytest.raises(ValueError):
        measure_block(np.zeros(32, dtype=np.int64), sensing16)


def test_measure_consistent_with_transform_model(sensing16):
    # the pipeline's factorization: measuring pixels equals applying the
    # effective arrow matrix to the exact sequency spectrum; in integers,
    # phi @ W @ (W x) = 64 * (phi @ x), so the rational product divides evenly
    rng = np.random.default_rng(9)
    w = walsh_sequency(64)
    for _ in range(10):
        x = rng.integers(0, 256, size=64)
        theta = fwht_sequency(x)
        lhs = sensing16.phi @ w @ theta
        assert (lhs % 64 == 0).all()
        assert np.array_equal(lhs // 64, measure_block(x, sensing16))


@pytest.mark.parametrize("m", (16, 32, 48))
def test_measure_blocks_matches_scalar(m):
    sensing = build_sensing(m, 64)
    blocks = np.random.default_rng(m).integers(0, 256, size=(300, 64), dtype=np.uint8)
    batch = measure_blocks(blocks, sensing)
    for i in (0, 7, 299):
        assert np.array_equal(batch[i], measure_block(blocks[i].astype(np.int64), sensing))
    assert batch.dtype == np.int64


# -- stream format ------------------------------------------------------


def test_stream_roundtrip(sensing16):
    img = rand_img(24, 17)
    stream = compress_image(img, 16, sensing=sensing16)
    again = MeasurementStream.unpack(stream.pack())
    assert (again.m, again.n, again.width, again.height) == (16, 64, 17, 24)
    assert np.array_equal(again.data, stream.data)
    assert again.pack() == stream.pack()


def test_stream_size_8x8_m16(sensing16):
    stream = compress_image(rand_img(8, 8), 16, sensing=sensing16)
    assert len(stream.pack()) == 17 + 16 * 2 == 49


def test_stream_header_layout(sensing16):
    raw = compress_image(np.full((8, 8), 100, dtype=np.uint8), 16, sensing=sensing16).pack()
    assert raw[:4] == b"CSM1"
    assert raw[4] == 1
    assert int.from_bytes(raw[5:7], "little") == 16
    assert int.from_bytes(raw[7:9], "little") == 64
    assert int.from_bytes(raw[9:13], "little") == 8
    assert int.from_bytes(raw[13:17], "little") == 8
    assert int.from_bytes(raw[17:19], "little") == 6400
    assert int.from_bytes(raw[19:21], "little") == 3200


def good_stream_bytes() -> bytes:
    img = rand_img(8, 16, seed=3)
    return compress_image(img, 16).pack()


def test_unpack_bad_magic():
    raw = good_stream_bytes()
    with pytest.raises(FormatError, match="magic"):
        MeasurementStream.unpack(b"XSM1" + raw[4:])


def test_unpack_bad_version():
    raw = good_stream_bytes()
    with pytest.raises(FormatError, match="version"):
        MeasurementStream.unpack(raw[:4] + b"\x02" + raw[5:])


def test_unpack_bad_block_size():
    raw = good_stream_bytes()
    with pytest.raises(FormatError, match="block size"):
        MeasurementStream.unpack(raw[:7] + (32).to_bytes(2, "little") + raw[9:])


def test_unpack_bad_measurement_count():
    raw = good_stream_bytes()
    with pytest.raises(FormatError, match="measurement count"):
        MeasurementStream.unpack(raw[:5] + (0).to_bytes(2, "little") + raw[7:])


def test_unpack_zero_dimension():
    raw = good_stream_bytes()
    with pytest.raises(FormatError, match="zero image dimension"):
        MeasurementStream.unpack(raw[:9] + (0).to_bytes(4, "little") + raw[13:])


def test_unpack_truncated_header():
    with pytest.raises(FormatError, match="truncated"):
        MeasurementStream.unpack(b"CSM1\x01")


def test_unpack_payload_length_mismatch():
    raw = good_stream_bytes()
    with pytest.raises(FormatError, match="payload"):
        MeasurementStream.unpack(raw + b"\x00\x00")
    with pytest.raises(FormatError, match="payload"):
        MeasurementStream.unpack(raw[:-2])


def test_pack_rejects_out_of_range_measurement():
    stream = MeasurementStream(
        m=16, n=64, width=8, height=8, data=np.full((1, 16), 70000, dtype=np.int64)
    )
    with pytest.raises(FormatError, match="u16"):
        stream.pack()


def test_compress_image_rejects_mismatched_operator(sensing16):
    with pytest.raises(ValueError):
        compress_image(rand_img(8, 8), 32, sensing=sensing16)
