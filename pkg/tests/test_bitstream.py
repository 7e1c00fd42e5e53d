from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mvscc.bitstream import (
    MAGIC,
    BitReader,
    BitWriter,
    CodingMode,
    FramePayload,
    GopKind,
    SequenceHeader,
    ToolFlags,
    framing_bits,
    frame_chunk,
    levels_bits,
    read_frame_payload,
    read_header,
    read_levels,
    se_bits,
    se_decode,
    split_chunks,
    ue_bits,
    ue_decode,
    ue_len,
    write_frame_payload,
    write_header,
    write_levels,
)
from mvscc.errors import BitstreamError
from mvscc.transform import ZIGZAG

DATA = Path(__file__).parent / "data"


def _ue(v: int) -> str:
    b = bin(v + 1)[2:]
    return "0" * (len(b) - 1) + b


def _se(v: int) -> str:
    return _ue(2 * v - 1 if v > 0 else -2 * v)


def _bytes(bits: str) -> bytes:
    bits += "0" * (-len(bits) % 8)
    if not bits:
        return b""
    return int(bits, 2).to_bytes(len(bits) // 8, "big")


@pytest.mark.parametrize("v,code", [(0, "1"), (1, "010"), (2, "011"), (6, "00111"), (7, "0001000")])
def test_ue_codes(v, code):
    assert ue_bits(v) == code
    assert ue_decode(code) == v


@pytest.mark.parametrize("v,code", [(0, "1"), (1, "010"), (-1, "011"), (2, "00100"), (-2, "00101")])
def test_se_codes(v, code):
    assert se_bits(v) == code
    assert se_decode(code) == v


@given(st.integers(0, 2**30))
def test_ue_length_and_inverse(v):
    code = ue_bits(v)
    assert len(code) == 2 * (v + 1).bit_length() - 1 == ue_len(v)
    assert code == _ue(v)
    assert ue_decode(code) == v


@given(st.integers(-(2**29), 2**29))
def test_se_inverse(v):
    assert se_decode(se_bits(v)) == v


def test_vectorised_lengths_match_scalar():
    v = np.arange(0, 5000)
    assert np.array_equal(ue_len(v), [ue_len(int(x)) for x in v])


def test_ue_decode_truncated():
    with pytest.raises(BitstreamError, match="truncated"):
        ue_decode("0001")


def test_ue_decode_too_many_zeros():
    r = BitReader(bytes(8))
    with pytest.raises(BitstreamError):
        r.read_ue()


def test_negative_ue_rejected():
    with pytest.raises(ValueError):
        BitWriter().write_ue(-1)


ops = st.lists(
    st.one_of(
        st.tuples(st.just("bits"), st.integers(0, 2**20 - 1)),
        st.tuples(st.just("ue"), st.integers(0, 10**6)),
        st.tuples(st.just("se"), st.integers(-(10**6), 10**6)),
    ),
    max_size=60,
)


@given(ops)
def test_writer_reader_bijection(seq):
    w = BitWriter()
    expect = ""
    for kind, v in seq:
        if kind == "bits":
            w.write_bits(v, 20)
            expect += format(v, "020b")
        elif kind == "ue":
            w.write_ue(v)
            expect += _ue(v)
        else:
            w.write_se(v)
            expect += _se(v)
    data = w.getvalue()
    assert data == _bytes(expect)
    assert w.bits_written == len(expect)
    r = BitReader(data)
    for kind, v in seq:
        got = r.read_bits(20) if kind == "bits" else r.read_ue() if kind == "ue" else r.read_se()
        assert got == v
    r.byte_align()
    r.expect_end()


def test_expect_end_flags_garbage():
    r = BitReader(b"\x80\x00")
    r.read_flag()
    with pytest.raises(BitstreamError, match="trailing"):
        r.expect_end()


def test_expect_end_flags_nonzero_padding():
    r = BitReader(b"\x81")
    r.read_flag()
    with pytest.raises(BitstreamError, match="padding"):
        r.expect_end()


# --------------------------------------------------------------------------
# header


def _header(**kw):
    base = dict(
        view_width=96,
        view_height=64,
        n_views=3,
        coding_mode=CodingMode.ASCC_TILES,
        base_qp=32,
        view_order=(1, 0, 2),
        delta_qp=(0, 3, 3),
        gop=GopKind.IPPP,
        intra_period=8,
        frame_count=4,
    )
    base.update(kw)
    return SequenceHeader(**base)


def _oracle_header_bits(h: SequenceHeader) -> str:
    bits = "".join(format(b, "08b") for b in MAGIC) + format(h.version, "08b")
    bits += _ue(h.view_width) + _ue(h.view_height) + _ue(h.n_views) + _ue(int(h.coding_mode)) + _ue(h.base_qp)
    bits += "".join("1" if getattr(h.flags, n) else "0" for n in ToolFlags.ORDER)
    bits += _ue(int(h.gop)) + _ue(h.intra_period) + _ue(h.frame_count)
    if h.n_views > 1:
        bits += "".join(_ue(c) for c in h.view_order) + "".join(_se(d) for d in h.delta_qp)
    return bits


def test_header_golden_file():
    h = _header()
    data = write_header(h)
    assert data == _bytes(_oracle_header_bits(h))
    assert data == (DATA / "header_ascc_3view.bin").read_bytes()


def test_header_round_trip_and_tile_qps():
    h = _header()
    back, offset = read_header(write_header(h) + b"payload")
    assert back == h
    assert offset == len(write_header(h))
    assert [back.tile_qp(k) for k in range(3)] == [32, 35, 35]


def test_single_view_simulcast_round_trip():
    h = SequenceHeader(64, 48, 1, CodingMode.SIMULCAST, 27, flags=ToolFlags(ibc=False))
    data = write_header(h)
    assert data == _bytes(_oracle_header_bits(h))
    back, _ = read_header(data)
    assert back == h and back.view_order == (0,) and back.delta_qp == (0,)


def test_corrupted_magic():
    data = bytearray(write_header(_header()))
    data[0] ^= 0xFF
    with pytest.raises(BitstreamError, match="not an MVSC stream"):
        read_header(bytes(data))
    with pytest.raises(BitstreamError, match="not an MVSC stream"):
        read_header(b"MV")


def test_version_mismatch():
    data = bytearray(write_header(_header()))
    data[4] = 9
    with pytest.raises(BitstreamError, match="version"):
        read_header(bytes(data))


def test_unknown_mode_code():
    h = _header()
    bits = _oracle_header_bits(h)
    tail = bits[40 + len(_ue(96)) + len(_ue(64)) + len(_ue(3)):]
    bits = bits[:40] + _ue(96) + _ue(64) + _ue(3) + _ue(7) + tail[len(_ue(2)):]
    with pytest.raises(BitstreamError, match="unsupported mode"):
        read_header(_bytes(bits))


@pytest.mark.parametrize(
    "kw",
    [
        dict(view_order=(1, 1, 2)),
        dict(delta_qp=(0, 30, 3)),
        dict(base_qp=50, delta_qp=(0, 3, 0)),
        dict(delta_qp=(0, 3)),
        dict(coding_mode=CodingMode.SCC_RASTER),
        dict(view_width=90),
    ],
)
def test_invalid_headers_rejected(kw):
    with pytest.raises(BitstreamError):
        write_header(_header(**kw))


@given(
    st.integers(1, 8),
    st.integers(1, 8),
    st.integers(1, 6),
    st.sampled_from(list(CodingMode)),
    st.integers(0, 51),
    st.integers(0, 127),
    st.sampled_from(list(GopKind)),
    st.integers(1, 30),
    st.integers(0, 500),
    st.randoms(use_true_random=False),
)
def test_header_property(wm, hm, n, mode, qp, flags, gop, period, frames, rnd):
    if mode == CodingMode.ASCC_TILES and n < 2:
        n = 2
    order = list(range(n))
    rnd.shuffle(order)
    if mode == CodingMode.ASCC_TILES:
        deltas = [0] + [max(-qp, min(51 - qp, rnd.randint(-6, 6))) for _ in range(n - 1)]
    else:
        deltas = [0] * n
    if n == 1:
        order = [0]
    h = SequenceHeader(16 * wm, 16 * hm, n, mode, qp, tuple(order), tuple(deltas), ToolFlags.from_bits(flags), gop, period, frames)
    data = write_header(h)
    assert data == _bytes(_oracle_header_bits(h))
    assert read_header(data)[0] == h


# --------------------------------------------------------------------------
# framing


def test_frame_payload_round_trip_and_accounting():
    tiles = [b"\x01\x02", b"", b"\xff" * 7]
    p = FramePayload(1, tiles)
    raw = write_frame_payload(p)
    chunk = frame_chunk(raw)
    assert 8 * len(chunk) == sum(p.tile_bits()) + framing_bits(3)
    back = read_frame_payload(raw, 3)
    assert back.frame_type == 1 and back.tiles == tiles


def test_empty_frame_still_framed():
    raw = write_frame_payload(FramePayload(0, [b""]))
    assert frame_chunk(raw) == b"\x00\x00\x00\x05" + b"\x00" + b"\x00\x00\x00\x00"


@given(st.lists(st.binary(max_size=40), min_size=1, max_size=8), st.integers(0, 1))
def test_frame_payload_property(tiles, ftype):
    raw = write_frame_payload(FramePayload(ftype, tiles))
    back = read_frame_payload(raw, len(tiles))
    assert (back.frame_type, back.tiles) == (ftype, tiles)


def test_frame_payload_errors():
    raw = write_frame_payload(FramePayload(0, [b"abc", b"de"]))
    with pytest.raises(BitstreamError, match="trailing garbage"):
        read_frame_payload(raw + b"x", 2)
    with pytest.raises(BitstreamError, match="tile length mismatch"):
        read_frame_payload(raw[:-1], 2)
    with pytest.raises(BitstreamError, match="reserved"):
        read_frame_payload(b"\x40" + raw[1:], 2)


def test_split_chunks_positions():
    data = b"HDR" + frame_chunk(b"ab") + frame_chunk(b"") + frame_chunk(b"xyz")
    assert [(c, o) for c, o in split_chunks(data, 3)] == [(b"ab", 3), (b"", 9), (b"xyz", 13)]
    with pytest.raises(BitstreamError, match="length mismatch"):
        list(split_chunks(data[:-1], 3))


# --------------------------------------------------------------------------
# residual syntax

levels = arrays(
    np.int64, (8, 8), elements=st.one_of(st.just(0), st.just(0), st.just(0), st.integers(-300, 300))
)


def _oracle_levels_bits(lv) -> str:
    z = np.asarray(lv).reshape(64)[np.asarray(ZIGZAG)]
    nz = [i for i in range(64) if z[i]]
    if not nz:
        return "0"
    out, pos = "1", 0
    for i in nz:
        out += _ue(i - pos) + _se(int(z[i]))
        pos = i + 1
    if pos < 64:
        out += _ue(64 - pos)
    return out


@given(levels)
def test_levels_round_trip_and_cost(lv):
    w = BitWriter()
    write_levels(w, lv)
    expect = _oracle_levels_bits(lv)
    assert w.bits_written == len(expect) == levels_bits(lv)
    data = w.getvalue()
    assert data == _bytes(expect)
    r = BitReader(data)
    assert np.array_equal(read_levels(r), lv)


def test_levels_bits_vectorised(rng):
    lv = rng.integers(-3, 4, (10, 6, 8, 8)) * (rng.random((10, 6, 8, 8)) < 0.2)
    lv[0, 0] = 0
    lv[1, 1] = 5
    got = levels_bits(lv)
    assert got.shape == (10, 6)
    for i in range(10):
        for j in range(6):
            assert got[i, j] == len(_oracle_levels_bits(lv[i, j]))


def test_zero_block_costs_one_bit():
    assert levels_bits(np.zeros((8, 8), int)) == 1


def test_levels_syntax_errors():
    # run past the end of the block
    with pytest.raises(BitstreamError, match="past end"):
        read_levels(BitReader(_bytes("1" + _ue(64))))
    # zero level
    with pytest.raises(BitstreamError, match="zero level"):
        read_levels(BitReader(_bytes("1" + _ue(0) + _se(0))))
