"""Exp-Golomb bit I/O and the MVSC container format.

Stream layout::

    header   "MVSC" version, geometry, coding mode, QPs, tool flags,
             multiview extension (view order, per-tile delta QP), byte aligned
    frames   u32 byte count + frame payload, repeated frame_count times

A frame payload is a byte-aligned frame header (frame type) followed by one
u32-length-prefixed sub-payload per tile.  Simulcast streams with more than one
view instead carry one u32-length-prefixed single-view MVSC stream per view.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BitstreamError
from .packing import validate_order
from .transform import QP_MAX, QP_MIN, UNZIGZAG, ZIGZAG

MAGIC = b"MVSC"
VERSION = 1
LENGTH_BITS = 32


class CodingMode(enum.IntEnum):
    SIMULCAST = 0
    SCC_RASTER = 1
    ASCC_TILES = 2


class GopKind(enum.IntEnum):
    ALL_INTRA = 0
    IPPP = 1


class BitWriter:
    # Bits accumulate in one Python int and are flushed in large byte runs.
    _FLUSH = 4096

    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._n = 0
        self.bits_written = 0

    def _flush(self) -> None:
        whole = self._n >> 3
        rest = self._n & 7
        self._buf += (self._acc >> rest).to_bytes(whole, "big")
        self._acc &= (1 << rest) - 1
        self._n = rest

    def write_bits(self, value: int, nbits: int) -> None:
        if nbits == 0:
            return
        if value < 0 or value >> nbits:
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        self._acc = (self._acc << nbits) | value
        self._n += nbits
        self.bits_written += nbits
        if self._n >= self._FLUSH:
            self._flush()

    def write_codes(self, codes, lengths) -> None:
        """Append pre-built codewords; ``codes[i]`` must fit in ``lengths[i]`` bits."""
        acc, n = self._acc, 0
        for c, k in zip(codes, lengths):
            acc = (acc << k) | c
            n += k
        self._acc = acc
        self._n += n
        self.bits_written += n
        if self._n >= self._FLUSH:
            self._flush()

    def write_flag(self, flag: bool) -> None:
        self.write_bits(1 if flag else 0, 1)

    def write_ue(self, v: int) -> None:
        if v < 0:
            raise ValueError(f"ue() needs a non-negative value, got {v}")
        code = v + 1
        n = code.bit_length()
        self.write_bits(code, 2 * n - 1)

    def write_se(self, v: int) -> None:
        self.write_ue(2 * v - 1 if v > 0 else -2 * v)

    def byte_align(self) -> None:
        if self._n & 7:
            self.write_bits(0, 8 - (self._n & 7))

    def getvalue(self) -> bytes:
        """Stream content, zero-padded to a byte boundary."""
        self._flush()
        if self._n:
            return bytes(self._buf) + bytes([(self._acc << (8 - self._n)) & 0xFF])
        return bytes(self._buf)


class BitReader:
    def __init__(self, data: bytes, frame: int | None = None, tile: int | None = None):
        self._data = bytes(data)
        self._pos = 0
        self._end = len(self._data) * 8
        self._where = (frame, tile)

    def _fail(self, msg: str):
        return BitstreamError(msg, *self._where)

    @property
    def bits_read(self) -> int:
        return self._pos

    @property
    def bits_left(self) -> int:
        return self._end - self._pos

    def read_bits(self, nbits: int) -> int:
        if nbits == 0:
            return 0
        if self._pos + nbits > self._end:
            raise self._fail("truncated stream")
        start = self._pos >> 3
        stop = (self._pos + nbits + 7) >> 3
        chunk = int.from_bytes(self._data[start:stop], "big")
        tail = stop * 8 - (self._pos + nbits)
        self._pos += nbits
        return (chunk >> tail) & ((1 << nbits) - 1)

    def read_flag(self) -> bool:
        return bool(self.read_bits(1))

    def read_ue(self) -> int:
        pos = self._pos
        start = pos >> 3
        window = self._data[start:start + 12]
        avail = 8 * len(window) - (pos & 7)
        chunk = int.from_bytes(window, "big") & ((1 << avail) - 1)
        if chunk:
            zeros = avail - chunk.bit_length()
            total = 2 * zeros + 1
            if zeros <= 40 and total <= avail and pos + total <= self._end:
                self._pos = pos + total
                return (chunk >> (avail - total)) - 1
        return self._read_ue_slow()

    def _read_ue_slow(self) -> int:
        zeros = 0
        while True:
            if self._pos >= self._end:
                raise self._fail("truncated stream")
            if (self._data[self._pos >> 3] >> (7 - (self._pos & 7))) & 1:
                break
            zeros += 1
            self._pos += 1
            if zeros > 40:
                raise self._fail("invalid Exp-Golomb code")
        return self.read_bits(zeros + 1) - 1

    def read_se(self) -> int:
        k = self.read_ue()
        return (k + 1) // 2 if k & 1 else -(k // 2)

    def byte_align(self) -> None:
        self._pos = min(-(-self._pos // 8) * 8, self._end)

    def expect_end(self) -> None:
        """All remaining bits must be alignment zeros of the last byte."""
        if self.bits_left >= 8:
            raise self._fail("trailing garbage after payload")
        if self.bits_left and self.read_bits(self.bits_left):
            raise self._fail("non-zero padding bits")


def ue_bits(v: int) -> str:
    w = BitWriter()
    w.write_ue(v)
    return _bitstring(w)


def se_bits(v: int) -> str:
    w = BitWriter()
    w.write_se(v)
    return _bitstring(w)


def _bitstring(w: BitWriter) -> str:
    s = "".join(f"{b:08b}" for b in w.getvalue())
    return s[: w.bits_written]


def ue_decode(bits: str) -> int:
    """Decode one ue() codeword from a string of '0'/'1'."""
    return _reader_from_bitstring(bits).read_ue()


def se_decode(bits: str) -> int:
    return _reader_from_bitstring(bits).read_se()


def _reader_from_bitstring(bits: str) -> BitReader:
    n = len(bits)
    padded = bits + "0" * (-n % 8)
    data = int(padded, 2).to_bytes(len(padded) // 8, "big") if padded else b""
    r = BitReader(data)
    r._end = n
    return r


def ue_len(v):
    """Length in bits of ue(v); works elementwise on arrays."""
    if isinstance(v, (int, np.integer)):
        return 2 * (int(v) + 1).bit_length() - 1
    _, e = np.frexp(np.asarray(v, dtype=np.float64) + 1.0)
    return 2 * e.astype(np.int64) - 1


def se_len(v):
    if isinstance(v, (int, np.integer)):
        v = int(v)
        return ue_len(2 * v - 1 if v > 0 else -2 * v)
    v = np.asarray(v, dtype=np.int64)
    return ue_len(np.where(v > 0, 2 * v - 1, -2 * v))


def mv_bits_scalar(mvd) -> int:
    return se_len(int(mvd[0])) + se_len(int(mvd[1]))


# --------------------------------------------------------------------------
# Sequence header


@dataclass
class ToolFlags:
    ibc: bool = True
    quarter_pel_ibc: bool = True
    per_tile_filtering: bool = True
    border_extension: bool = True
    deblock_enabled: bool = True
    sao_enabled: bool = True
    collocated_start: bool = True

    ORDER = (
        "ibc",
        "quarter_pel_ibc",
        "per_tile_filtering",
        "border_extension",
        "deblock_enabled",
        "sao_enabled",
        "collocated_start",
    )

    def as_bits(self) -> int:
        v = 0
        for name in self.ORDER:
            v = (v << 1) | int(getattr(self, name))
        return v

    @classmethod
    def from_bits(cls, v: int) -> "ToolFlags":
        n = len(cls.ORDER)
        return cls(**{name: bool((v >> (n - 1 - i)) & 1) for i, name in enumerate(cls.ORDER)})


@dataclass
class SequenceHeader:
    view_width: int
    view_height: int
    n_views: int
    coding_mode: CodingMode
    base_qp: int
    view_order: tuple[int, ...] = ()
    delta_qp: tuple[int, ...] = ()
    flags: ToolFlags = field(default_factory=ToolFlags)
    gop: GopKind = GopKind.ALL_INTRA
    intra_period: int = 8
    frame_count: int = 0
    version: int = VERSION

    def __post_init__(self):
        self.coding_mode = CodingMode(self.coding_mode)
        self.gop = GopKind(self.gop)
        if not self.view_order:
            self.view_order = tuple(range(self.n_views))
        if not self.delta_qp:
            self.delta_qp = (0,) * self.n_views
        self.view_order = tuple(self.view_order)
        self.delta_qp = tuple(self.delta_qp)

    @property
    def n_tiles(self) -> int:
        return self.n_views

    def tile_qp(self, k: int) -> int:
        return self.base_qp + self.delta_qp[k]

    def validate(self) -> None:
        if self.n_views < 1:
            raise BitstreamError("header declares no views")
        if self.view_width <= 0 or self.view_height <= 0 or self.view_width % 16 or self.view_height % 16:
            raise BitstreamError(
                f"view size {self.view_width}x{self.view_height} is not a positive multiple of 16"
            )
        try:
            validate_order(self.view_order, self.n_views)
        except ValueError as exc:
            raise BitstreamError(f"invalid view order: {exc}") from None
        if len(self.delta_qp) != self.n_tiles:
            raise BitstreamError("delta QP list length does not match the tile count")
        if self.coding_mode != CodingMode.ASCC_TILES and any(self.delta_qp):
            raise BitstreamError("per-tile delta QP is only allowed in tile mode")
        if not QP_MIN <= self.base_qp <= QP_MAX:
            raise BitstreamError(f"base QP {self.base_qp} out of range")
        for k in range(self.n_tiles):
            if not QP_MIN <= self.tile_qp(k) <= QP_MAX:
                raise BitstreamError(f"tile {k} QP {self.tile_qp(k)} outside [{QP_MIN}, {QP_MAX}]")
        if self.intra_period < 1:
            raise BitstreamError("intra period must be at least 1")


def write_header(h: SequenceHeader) -> bytes:
    h.validate()
    w = BitWriter()
    for b in MAGIC:
        w.write_bits(b, 8)
    w.write_bits(h.version, 8)
    w.write_ue(h.view_width)
    w.write_ue(h.view_height)
    w.write_ue(h.n_views)
    w.write_ue(int(h.coding_mode))
    w.write_ue(h.base_qp)
    w.write_bits(h.flags.as_bits(), len(ToolFlags.ORDER))
    w.write_ue(int(h.gop))
    w.write_ue(h.intra_period)
    w.write_ue(h.frame_count)
    if h.n_views > 1:
        for cam in h.view_order:
            w.write_ue(cam)
        for d in h.delta_qp:
            w.write_se(d)
    w.byte_align()
    return w.getvalue()


def read_header(data: bytes) -> tuple[SequenceHeader, int]:
    """Parse a header; returns it with the byte offset just past it."""
    r = BitReader(data)
    try:
        magic = bytes(r.read_bits(8) for _ in range(4))
    except BitstreamError:
        raise BitstreamError("not an MVSC stream") from None
    if magic != MAGIC:
        raise BitstreamError("not an MVSC stream")
    version = r.read_bits(8)
    if version != VERSION:
        raise BitstreamError(f"unsupported MVSC version {version}")
    vw = r.read_ue()
    vh = r.read_ue()
    n_views = r.read_ue()
    mode_code = r.read_ue()
    if mode_code not in CodingMode._value2member_map_:
        raise BitstreamError(f"unsupported mode {mode_code}")
    base_qp = r.read_ue()
    flags = ToolFlags.from_bits(r.read_bits(len(ToolFlags.ORDER)))
    gop_code = r.read_ue()
    if gop_code not in GopKind._value2member_map_:
        raise BitstreamError(f"unsupported GOP kind {gop_code}")
    intra_period = r.read_ue()
    frame_count = r.read_ue()
    if not 1 <= n_views <= 8:
        raise BitstreamError(f"unsupported view count {n_views}")
    if n_views > 1:
        order = tuple(r.read_ue() for _ in range(n_views))
        deltas = tuple(r.read_se() for _ in range(n_views))
    else:
        order, deltas = (0,), (0,)
    r.byte_align()
    h = SequenceHeader(
        view_width=vw,
        view_height=vh,
        n_views=n_views,
        coding_mode=CodingMode(mode_code),
        base_qp=base_qp,
        view_order=order,
        delta_qp=deltas,
        flags=flags,
        gop=GopKind(gop_code),
        intra_period=intra_period,
        frame_count=frame_count,
        version=version,
    )
    h.validate()
    return h, r.bits_read // 8


# --------------------------------------------------------------------------
# Length-prefixed framing


def frame_chunk(payload: bytes) -> bytes:
    return struct.pack(">I", len(payload)) + payload


def split_chunks(data: bytes, offset: int = 0, count: int | None = None, frame: int | None = None):
    """Yield ``(payload, start_offset)`` for consecutive length-prefixed chunks."""
    n = 0
    while offset < len(data) and (count is None or n < count):
        if offset + 4 > len(data):
            raise BitstreamError("truncated length prefix", frame if frame is not None else n)
        (size,) = struct.unpack_from(">I", data, offset)
        start = offset + 4
        if start + size > len(data):
            raise BitstreamError(
                f"length mismatch: declared {size} bytes, {len(data) - start} available",
                frame if frame is not None else n,
            )
        yield data[start:start + size], offset
        offset = start + size
        n += 1


@dataclass
class FramePayload:
    frame_type: int
    tiles: list[bytes]

    @property
    def header_bits(self) -> int:
        return 8

    def tile_bits(self) -> list[int]:
        return [8 * len(t) for t in self.tiles]


def write_frame_payload(p: FramePayload) -> bytes:
    """Frame payload without its own outer length prefix."""
    w = BitWriter()
    w.write_bits(p.frame_type & 1, 1)
    w.byte_align()
    return w.getvalue() + b"".join(frame_chunk(t) for t in p.tiles)


def read_frame_payload(data: bytes, n_tiles: int, frame: int | None = None) -> FramePayload:
    if not data:
        raise BitstreamError("empty frame payload", frame)
    frame_type = data[0] >> 7
    if data[0] & 0x7F:
        raise BitstreamError("reserved frame header bits set", frame)
    tiles = []
    offset = 1
    for k in range(n_tiles):
        if offset + 4 > len(data):
            raise BitstreamError("truncated tile length prefix", frame, k)
        (size,) = struct.unpack_from(">I", data, offset)
        start = offset + 4
        if start + size > len(data):
            raise BitstreamError("tile length mismatch", frame, k)
        tiles.append(data[start:start + size])
        offset = start + size
    if offset != len(data):
        raise BitstreamError("trailing garbage after last tile", frame)
    return FramePayload(frame_type, tiles)


def framing_bits(n_tiles: int) -> int:
    """Bits in a framed frame payload that belong to no tile."""
    return LENGTH_BITS + 8 + n_tiles * LENGTH_BITS


# --------------------------------------------------------------------------
# Residual syntax


def write_levels(w: BitWriter, levels: np.ndarray) -> None:
    """One 8x8 block: coded-block flag, then (run, level) pairs and an EOB run."""
    z = np.asarray(levels, dtype=np.int64).reshape(64)[ZIGZAG]
    nz = np.flatnonzero(z)
    if nz.size == 0:
        w.write_bits(0, 1)
        return
    runs = np.diff(nz, prepend=-1) - 1
    vals = z[nz]
    mapped = np.where(vals > 0, 2 * vals - 1, -2 * vals)
    codes = np.empty(2 * nz.size + 1, dtype=np.int64)
    codes[0] = 1
    codes[1::2] = runs + 1
    codes[2::2] = mapped + 1
    lens = np.empty_like(codes)
    lens[0] = 1
    lens[1:] = ue_len(codes[1:] - 1)
    last = int(nz[-1])
    codes, lens = codes.tolist(), lens.tolist()
    if last < 63:
        # A run reaching past the last position marks end of block.
        codes.append(64 - last)
        lens.append(ue_len(63 - last))
    w.write_codes(codes, lens)


def read_levels(r: BitReader) -> np.ndarray:
    z = [0] * 64
    if not r.read_flag():
        return np.zeros((8, 8), dtype=np.int64)
    read_ue = r.read_ue
    pos = 0
    first = True
    while pos < 64:
        run = read_ue()
        if pos + run == 64 and not first:
            break
        if pos + run > 63:
            raise BitstreamError("coefficient run past end of block", *r._where)
        k = read_ue()
        if k == 0:
            raise BitstreamError("zero level in coefficient run", *r._where)
        z[pos + run] = (k + 1) >> 1 if k & 1 else -(k >> 1)
        pos += run + 1
        first = False
    return np.array(z, dtype=np.int64)[UNZIGZAG].reshape(8, 8)


def levels_bits(levels: np.ndarray) -> np.ndarray:
    """Bit cost of ``write_levels`` for each block of a ``(..., 8, 8)`` stack."""
    lv = np.asarray(levels, dtype=np.int64)
    lead = lv.shape[:-2]
    z = lv.reshape(-1, 64)[:, ZIGZAG]
    nb = z.shape[0]
    bits = np.ones(nb, dtype=np.int64)
    mask = z != 0
    idx = np.flatnonzero(mask)
    if idx.size:
        blk = idx // 64
        pos = idx % 64
        prev = np.empty_like(pos)
        prev[0] = -1
        prev[1:] = pos[:-1]
        first = np.ones(idx.size, dtype=bool)
        first[1:] = blk[1:] != blk[:-1]
        prev[first] = -1
        runs = pos - prev - 1
        cost = ue_len(runs) + se_len(z.ravel()[idx])
        np.add.at(bits, blk, cost)
        last = np.full(nb, 63)
        last_flag = np.ones(idx.size, dtype=bool)
        last_flag[:-1] = blk[1:] != blk[:-1]
        last[blk[last_flag]] = pos[last_flag]
        coded = mask.any(axis=1)
        eob = coded & (last < 63)
        bits[eob] += ue_len(63 - last[eob])
    return bits.reshape(lead)
