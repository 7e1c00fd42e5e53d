from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..bitstream import (
    BitWriter,
    CodingMode,
    FramePayload,
    GopKind,
    SequenceHeader,
    frame_chunk,
    framing_bits,
    levels_bits,
    mv_bits_scalar,
    ue_len,
    write_frame_payload,
    write_header,
    write_levels,
)
from ..errors import ConfigError
from ..frames_io import Frame, Sequence, mean_psnr, psnr
from ..packing import pack, unpack
from ..prediction import PredMode, SearchParams, ibc_search, mcp_search
from ..transform import INTER_ROUNDING, INTRA_ROUNDING, forward_transform8, qstep
from .config import CodecConfig
from .core import FRAME_I, FRAME_P, PictureCoder, Region, TileStats, reconstruct_blocks, split_cu, write_sao


@dataclass
class FrameStats:
    index: int
    frame_type: str
    bits: int
    tile_bits: list[int]
    header_bits: int
    framing_bits: int
    tiles: list[TileStats] = field(default_factory=list)
    psnr_y: float = float("nan")
    tile_psnr_y: list[float] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def mode_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for t in self.tiles:
            for k, v in t.mode_counts.items():
                out[k] = out.get(k, 0) + v
        return out


class EncodeResult(NamedTuple):
    data: bytes
    stats: list[FrameStats]
    recon: list[Sequence]


class _Candidate(NamedTuple):
    mode: PredMode
    mv: tuple[int, int] | None
    mvd: tuple[int, int] | None
    pred: np.ndarray
    side_bits: int


def frame_type_for(index: int, gop: GopKind, intra_period: int) -> int:
    if gop == GopKind.ALL_INTRA or index % intra_period == 0:
        return FRAME_I
    return FRAME_P


class _FrameEncoder:
    def __init__(self, header: SequenceHeader, config: CodecConfig, original: Frame, frame_type, previous):
        self.config = config
        self.orig = original
        self.oy = original.y.astype(np.int32)
        self.ou = original.u.astype(np.int32)
        self.ov = original.v.astype(np.int32)
        self.pc = PictureCoder(header, frame_type, previous, config.lambda_scale)

    def encode(self) -> tuple[FramePayload, list[TileStats]]:
        pc = self.pc
        writers = []
        for k in range(pc.n_regions):
            region = pc.begin_region(k)
            w = BitWriter()
            for cx, cy in region.cu_positions():
                self._encode_cu(region, w, cx, cy)
            pc.end_region(region, original=self.oy)
            writers.append(w)
        sao = pc.finish_frame(original=self.oy)
        tiles = []
        for region, w in zip(pc.regions, writers):
            if pc.flags.sao_enabled:
                write_sao(w, sao[region.index])
            w.byte_align()
            data = w.getvalue()
            region.stats.bits = 8 * len(data)
            tiles.append(data)
        return FramePayload(pc.frame_type, tiles), [r.stats for r in pc.regions]

    def _candidates(self, region: Region, cx: int, cy: int) -> list[_Candidate]:
        pc = self.pc
        out = []
        for mode in pc.modes_allowed(region):
            code_bits = ue_len(int(mode))
            if mode.is_intra:
                pred = pc.predict_intra(region, mode, cx, cy)
                out.append(_Candidate(mode, None, None, split_cu(*pred), code_bits))
            elif mode == PredMode.IBC:
                area = pc.ibc_area(region, cx, cy)
                params = SearchParams(
                    self.config.search_h,
                    self.config.search_v,
                    region.collocated_start(pc, cx, cy),
                    region.mv_unit == 1,
                )
                ref = pc.ref0[0] if pc.ref0 is not None else None
                block = self.oy[cy:cy + 16, cx:cx + 16]
                found = ibc_search(block, pc.y, area, params, region.lam, ref, region.ibc_predictor)
                if found is None:
                    continue
                pred = pc.predict_ibc(area, found.mv, cx, cy)
                mvd = found.mv - region.ibc_predictor
                mvd = (mvd[0] // region.mv_unit, mvd[1] // region.mv_unit)
                out.append(_Candidate(mode, found.mv, mvd, split_cu(*pred), code_bits + mv_bits_scalar(mvd)))
            else:
                block = self.oy[cy:cy + 16, cx:cx + 16]
                found = mcp_search(block, pc.previous[0], (cx, cy), region.lam, predictor=region.inter_predictor)
                pred = pc.predict_inter(found.mv, cx, cy)
                mvd = tuple(found.mv - region.inter_predictor)
                out.append(_Candidate(mode, found.mv, mvd, split_cu(*pred), code_bits + mv_bits_scalar(mvd)))
        return out

    def _encode_cu(self, region: Region, w: BitWriter, cx: int, cy: int) -> None:
        cands = self._candidates(region, cx, cy)
        hx, hy = cx // 2, cy // 2
        orig = split_cu(
            self.oy[cy:cy + 16, cx:cx + 16], self.ou[hy:hy + 8, hx:hx + 8], self.ov[hy:hy + 8, hx:hx + 8]
        ).astype(np.int64)
        pred = np.stack([c.pred for c in cands]).astype(np.int64)
        coeffs = forward_transform8(orig[None] - pred)
        f = np.array([INTRA_ROUNDING if c.mode != PredMode.INTER else INTER_ROUNDING for c in cands])
        mag = np.floor(np.abs(coeffs) / qstep(region.qp) + f[:, None, None, None]).astype(np.int64)
        levels = np.where(coeffs < 0, -mag, mag)
        bits = levels_bits(levels).sum(axis=1) + np.array([c.side_bits for c in cands])
        recon = reconstruct_blocks(pred, levels, region.qp)
        err = recon - orig[None]
        ssd = (err * err).sum(axis=(1, 2, 3))
        cost = ssd + region.lam * bits
        i = int(np.argmin(cost))
        c = cands[i]

        w.write_ue(int(c.mode))
        if c.mvd is not None:
            w.write_se(c.mvd[0])
            w.write_se(c.mvd[1])
        for b in levels[i]:
            write_levels(w, b)
        self.pc.store(cx, cy, recon[i])

        st = region.stats
        st.mode_counts[c.mode.name] += 1
        st.cu_modes.append((cx, cy, c.mode.name))
        if c.mode == PredMode.IBC:
            region.last_ibc = c.mv
            base = region.ibc_default
            st.ibc_count += 1
            st.ibc_vector_l1 += abs(c.mv[0] - base[0]) + abs(c.mv[1] - base[1])
            st.ibc_vector_bits += mv_bits_scalar(c.mvd)
            if not levels[i].any():
                st.zero_residual_ibc += 1
        elif c.mode == PredMode.INTER:
            region.last_inter = c.mv


def _views_to_frames(views: list[Sequence]) -> tuple[int, int, int]:
    if not views:
        raise ConfigError("no views to encode")
    n_frames = len(views[0])
    sizes = {v.size for v in views}
    if len(sizes) != 1 or any(len(v) != n_frames for v in views):
        raise ConfigError("all views must have the same size and frame count")
    size = sizes.pop()
    if size is None:
        return 0, 16, 16
    w, h = size
    if w % 16 or h % 16:
        raise ConfigError(f"view size {w}x{h} must be a multiple of 16 (pad first)")
    return n_frames, w, h


def _encode_single(views: list[Sequence], config: CodecConfig, header: SequenceHeader):
    """Encode one packed (or single-view) stream; returns bytes, stats, recon views."""
    n_frames = header.frame_count
    out = bytearray(write_header(header))
    stats = []
    recon: list[list[Frame]] = [[] for _ in views]
    previous = None
    layout_order = header.view_order
    for i in range(n_frames):
        t0 = time.perf_counter()
        frames = [v[i] for v in views]
        if len(frames) > 1:
            packed, layout = pack(frames, layout_order)
        else:
            packed, layout = frames[0], None
        ftype = frame_type_for(i, header.gop, header.intra_period)
        enc = _FrameEncoder(header, config, packed, ftype, previous)
        payload, tstats = enc.encode()
        chunk = frame_chunk(write_frame_payload(payload))
        out += chunk
        rec = enc.pc.output()
        previous = enc.pc.as_reference()
        seconds = time.perf_counter() - t0
        rec_views = unpack(rec, layout, layout_order) if layout is not None else [rec]
        for k, rv in enumerate(rec_views):
            recon[k].append(rv)
        view_psnr = [psnr(f.y, r.y) for f, r in zip(frames, rec_views)]
        tile_bits = payload.tile_bits()
        if enc.pc.tiled:
            tile_psnr = [view_psnr[cam] for cam in layout_order]
        else:
            tile_psnr = [mean_psnr(view_psnr)]
        stats.append(
            FrameStats(
                index=i,
                frame_type="IP"[ftype],
                bits=8 * len(chunk),
                tile_bits=tile_bits,
                header_bits=payload.header_bits,
                framing_bits=framing_bits(len(tile_bits)),
                tiles=tstats,
                psnr_y=mean_psnr(view_psnr),
                tile_psnr_y=tile_psnr,
                seconds=seconds,
            )
        )
    return bytes(out), stats, [Sequence(r, views[0].fps) for r in recon]


def encode(views: list[Sequence], config: CodecConfig) -> EncodeResult:
    """Encode camera-ordered views; the result also carries the encoder-side reconstruction."""
    n_frames, w, h = _views_to_frames(views)
    n_views = len(views)
    header = config.header(n_views, w, h, n_frames)
    if config.coding_mode != CodingMode.SIMULCAST or n_views == 1:
        data, stats, recon = _encode_single(views, config, header)
        return EncodeResult(data, stats, recon)

    out = bytearray(write_header(header))
    per_view = []
    recon = []
    for v in views:
        sub_header = config.header(1, w, h, n_frames)
        data, stats, rec = _encode_single([v], config, sub_header)
        out += frame_chunk(data)
        per_view.append(stats)
        recon.append(rec[0])
    return EncodeResult(bytes(out), _merge_simulcast_stats(per_view), recon)


def _merge_simulcast_stats(per_view: list[list[FrameStats]]) -> list[FrameStats]:
    merged = []
    for frames in zip(*per_view):
        merged.append(
            FrameStats(
                index=frames[0].index,
                frame_type=frames[0].frame_type,
                bits=sum(f.bits for f in frames),
                tile_bits=[f.tile_bits[0] for f in frames],
                header_bits=sum(f.header_bits for f in frames),
                framing_bits=sum(f.framing_bits for f in frames),
                tiles=[f.tiles[0] for f in frames],
                psnr_y=mean_psnr(f.psnr_y for f in frames),
                tile_psnr_y=[f.psnr_y for f in frames],
                seconds=sum(f.seconds for f in frames),
            )
        )
    return merged


def encode_sequence(views: list[Sequence], config: CodecConfig) -> tuple[bytes, list[FrameStats]]:
    res = encode(views, config)
    return res.data, res.stats
