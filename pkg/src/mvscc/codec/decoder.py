from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..bitstream import (
    BitReader,
    CodingMode,
    SequenceHeader,
    framing_bits,
    read_frame_payload,
    read_header,
    read_levels,
    split_chunks,
)
from ..errors import BitstreamError
from ..frames_io import Frame, Sequence
from ..packing import PackedLayout, unpack
from ..prediction import MotionVector, PredMode
from .core import FRAME_P, PictureCoder, Region, read_sao, reconstruct_blocks, split_cu


@dataclass
class DecodedFrameStats:
    index: int
    frame_type: str
    bits: int
    tile_bits: list[int]
    framing_bits: int
    mode_counts: list[dict[str, int]] = field(default_factory=list)


class _FrameDecoder:
    def __init__(self, header: SequenceHeader, frame_index: int, frame_type: int, previous):
        self.index = frame_index
        self.pc = PictureCoder(header, frame_type, previous)

    def decode(self, tiles: list[bytes]) -> list[dict[str, int]]:
        pc = self.pc
        if len(tiles) != pc.n_regions:
            raise BitstreamError(f"expected {pc.n_regions} tiles, found {len(tiles)}", self.index)
        for k, data in enumerate(tiles):
            region = pc.begin_region(k)
            r = BitReader(data, self.index, k)
            for cx, cy in region.cu_positions():
                self._decode_cu(region, r, cx, cy)
            sao = read_sao(r) if pc.flags.sao_enabled else None
            r.byte_align()
            r.expect_end()
            pc.end_region(region, sao=sao)
        pc.finish_frame()
        return [reg.stats.mode_counts for reg in pc.regions]

    def _decode_cu(self, region: Region, r: BitReader, cx: int, cy: int) -> None:
        pc = self.pc
        code = r.read_ue()
        if code not in PredMode._value2member_map_ or PredMode(code) not in pc.modes_allowed(region):
            raise BitstreamError(f"prediction mode {code} not allowed at CU ({cx}, {cy})", self.index, region.index)
        mode = PredMode(code)
        if mode.is_intra:
            pred = pc.predict_intra(region, mode, cx, cy)
        else:
            ddx, ddy = r.read_se(), r.read_se()
            if mode == PredMode.IBC:
                u = region.mv_unit
                p = region.ibc_predictor
                mv = MotionVector(p.dx + u * ddx, p.dy + u * ddy)
                pred = pc.predict_ibc(pc.ibc_area(region, cx, cy), mv, cx, cy)
                region.last_ibc = mv
            else:
                p = region.inter_predictor
                mv = MotionVector(p.dx + ddx, p.dy + ddy)
                pred = pc.predict_inter(mv, cx, cy)
                region.last_inter = mv
            if pred is None:
                raise BitstreamError(
                    f"{mode.name} vector {tuple(mv)} at CU ({cx}, {cy}) reads outside the legal area",
                    self.index,
                    region.index,
                )
        levels = np.stack([read_levels(r) for _ in range(6)])
        recon = reconstruct_blocks(split_cu(*pred).astype(np.int64), levels, region.qp)
        pc.store(cx, cy, recon)
        region.stats.mode_counts[mode.name] += 1
        region.stats.cu_modes.append((cx, cy, mode.name))


def _decode_single(data: bytes):
    header, offset = read_header(data)
    if header.coding_mode == CodingMode.SIMULCAST and header.n_views > 1:
        raise BitstreamError("nested simulcast stream")
    packed = header.coding_mode != CodingMode.SIMULCAST
    layout = PackedLayout(header.n_views if packed else 1, header.view_width, header.view_height)
    views: list[list[Frame]] = [[] for _ in range(header.n_views)]
    stats: list[DecodedFrameStats] = []
    previous = None
    try:
        chunks = split_chunks(data, offset, header.frame_count)
        end = offset
        for i in range(header.frame_count):
            try:
                chunk, start = next(chunks)
                end = start + 4 + len(chunk)
            except StopIteration:
                raise BitstreamError("stream ends before the declared frame count", i) from None
            except BitstreamError as exc:
                raise BitstreamError(str(exc).split(": ", 1)[-1], i) from None
            payload = read_frame_payload(chunk, layout.n_tiles if header.coding_mode == CodingMode.ASCC_TILES else 1, i)
            if payload.frame_type == FRAME_P and previous is None:
                raise BitstreamError("P frame without a reference frame", i)
            dec = _FrameDecoder(header, i, payload.frame_type, previous)
            modes = dec.decode(payload.tiles)
            frame = dec.pc.output()
            previous = dec.pc.as_reference()
            parts = unpack(frame, layout, header.view_order) if packed and header.n_views > 1 else [frame]
            for k, f in enumerate(parts):
                views[k].append(f)
            stats.append(
                DecodedFrameStats(
                    index=i,
                    frame_type="IP"[payload.frame_type],
                    bits=8 * (len(chunk) + 4),
                    tile_bits=payload.tile_bits(),
                    framing_bits=framing_bits(len(payload.tiles)),
                    mode_counts=modes,
                )
            )
        if end != len(data):
            raise BitstreamError("trailing garbage after last frame")
    except BitstreamError as exc:
        exc.partial = ([Sequence(v) for v in views], header, stats)
        raise
    return [Sequence(v) for v in views], header, stats


def decode_sequence(data: bytes) -> tuple[list[Sequence], SequenceHeader, list[DecodedFrameStats]]:
    """Decode an MVSC stream to camera-ordered views.

    On a bitstream error the exception's ``partial`` attribute holds whatever
    was decoded before the failure.
    """
    header, offset = read_header(data)
    if header.coding_mode != CodingMode.SIMULCAST or header.n_views == 1:
        return _decode_single(data)
    views, stats_per_view = [], []
    try:
        end = offset
        for k, (sub, start) in enumerate(split_chunks(data, offset, header.n_views)):
            end = start + 4 + len(sub)
            try:
                v, sub_header, st = _decode_single(sub)
            except BitstreamError as exc:
                done = exc.partial[0][0] if exc.partial else Sequence()
                err = BitstreamError(f"view {k}: {exc}")
                err.partial = (views + [done], header, stats_per_view)
                raise err from exc
            if (sub_header.view_width, sub_header.view_height) != (header.view_width, header.view_height):
                raise BitstreamError(f"view {k} size differs from the stream header")
            views.append(v[0])
            stats_per_view.append(st)
        if len(views) != header.n_views:
            raise BitstreamError(f"stream holds {len(views)} of {header.n_views} views")
        if end != len(data):
            raise BitstreamError("trailing garbage after last view")
    except BitstreamError as exc:
        if exc.partial is None:
            exc.partial = (views, header, stats_per_view)
        raise
    merged = [
        DecodedFrameStats(
            index=fs[0].index,
            frame_type=fs[0].frame_type,
            bits=sum(f.bits for f in fs),
            tile_bits=[f.tile_bits[0] for f in fs],
            framing_bits=sum(f.framing_bits for f in fs),
            mode_counts=[f.mode_counts[0] for f in fs],
        )
        for fs in zip(*stats_per_view)
    ]
    return views, header, merged
