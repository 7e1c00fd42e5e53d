"""Picture reconstruction state shared by the encoder and the decoder.

Both sides drive a :class:`PictureCoder` through the same sequence of calls
(regions in coding order, CUs in raster order within a region), so every
prediction reads exactly the samples the other side has at that moment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..bitstream import BitReader, BitWriter, CodingMode, SequenceHeader
from ..errors import BitstreamError
from ..frames_io import Frame
from ..loop_filter import SaoParams, apply_tile_filters, filter_tile
from ..packing import PackedLayout
from ..prediction import (
    BORDER_PAD,
    CU,
    AreaMode,
    MotionVector,
    PredMode,
    ReferenceArea,
    ZERO_MV,
    extend_borders,
    interpolate_chroma,
    interpolate_luma,
    intra_predict,
    reference_area,
    support_bbox,
)
from ..transform import dequantize, inverse_transform8
from .config import lagrangian

CH = CU // 2
FRAME_I, FRAME_P = 0, 1


def split_cu(py: np.ndarray, pu: np.ndarray, pv: np.ndarray) -> np.ndarray:
    """``(6, 8, 8)`` stack: four luma blocks in raster order, then U and V."""
    luma = py.reshape(2, 8, 2, 8).transpose(0, 2, 1, 3).reshape(4, 8, 8)
    return np.concatenate([luma, pu[None], pv[None]], axis=0)


def merge_cu(blocks: np.ndarray):
    luma = blocks[:4].reshape(2, 2, 8, 8).transpose(0, 2, 1, 3).reshape(16, 16)
    return luma, blocks[4], blocks[5]


def reconstruct_blocks(pred: np.ndarray, levels: np.ndarray, qp: int) -> np.ndarray:
    res = inverse_transform8(dequantize(levels, qp))
    return np.clip(pred + res, 0, 255)


def write_sao(w: BitWriter, p: SaoParams) -> None:
    w.write_ue(p.start_band)
    for o in p.offsets:
        w.write_se(o)


def read_sao(r: BitReader) -> SaoParams:
    start = r.read_ue()
    offsets = tuple(r.read_se() for _ in range(4))
    try:
        return SaoParams(start, offsets)
    except ValueError as exc:
        raise BitstreamError(str(exc), *r._where) from None


@dataclass
class TileStats:
    bits: int = 0
    mode_counts: dict[str, int] = field(default_factory=lambda: {m.name: 0 for m in PredMode})
    ibc_count: int = 0
    ibc_vector_l1: int = 0
    ibc_vector_bits: int = 0
    zero_residual_ibc: int = 0
    # (x, y, mode name) per CU in coding order
    cu_modes: list[tuple[int, int, str]] = field(default_factory=list)

    @property
    def cu_count(self) -> int:
        return sum(self.mode_counts.values())

    @property
    def ibc_fraction(self) -> float:
        n = self.cu_count
        return self.mode_counts["IBC"] / n if n else 0.0


class Region:
    """One coding region: a tile, or the whole frame in raster coding."""

    def __init__(self, coder: "PictureCoder", index: int):
        hdr = coder.header
        self.index = index
        self.bounds = (
            coder.layout.tile_bounds(index) if coder.tiled else (0, 0, coder.layout.frame_width, coder.layout.frame_height)
        )
        self.qp = hdr.tile_qp(index) if coder.tiled else hdr.base_qp
        self.lam = lagrangian(self.qp, coder.lambda_scale)
        flags = hdr.flags
        self.ibc = flags.ibc
        self.mv_unit = 1 if flags.quarter_pel_ibc else 4
        tw = coder.layout.tile_width
        if coder.tiled and index > 0 and flags.collocated_start:
            self.ibc_default = MotionVector(-4 * index * tw, 0)
        else:
            self.ibc_default = ZERO_MV
        self.last_ibc: MotionVector | None = None
        self.last_inter: MotionVector | None = None
        self.stats = TileStats()

    def cu_positions(self):
        x0, y0, x1, y1 = self.bounds
        for cy in range(y0, y1, CU):
            for cx in range(x0, x1, CU):
                yield cx, cy

    @property
    def ibc_predictor(self) -> MotionVector:
        return self.last_ibc if self.last_ibc is not None else self.ibc_default

    @property
    def inter_predictor(self) -> MotionVector:
        return self.last_inter if self.last_inter is not None else ZERO_MV

    def collocated_start(self, coder: "PictureCoder", cx: int, cy: int) -> tuple[int, int]:
        if self.ibc_default != ZERO_MV:
            return cx + (self.ibc_default.dx >> 2), cy
        return cx, cy


class PictureCoder:
    def __init__(
        self,
        header: SequenceHeader,
        frame_type: int,
        previous: tuple[np.ndarray, np.ndarray, np.ndarray] | None,
        lambda_scale: float = 1.0,
    ):
        self.header = header
        self.frame_type = frame_type
        self.lambda_scale = lambda_scale
        mode = header.coding_mode
        self.tiled = mode == CodingMode.ASCC_TILES
        packed = mode != CodingMode.SIMULCAST
        n_tiles = header.n_views if packed else 1
        self.layout = PackedLayout(n_tiles, header.view_width, header.view_height)
        self.n_regions = n_tiles if self.tiled else 1
        fw, fh = self.layout.frame_width, self.layout.frame_height
        self.y = np.zeros((fh, fw), dtype=np.int32)
        self.u = np.zeros((fh // 2, fw // 2), dtype=np.int32)
        self.v = np.zeros((fh // 2, fw // 2), dtype=np.int32)
        self.previous = previous if frame_type == FRAME_P else None
        self.ref0: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self.ref_pad = BORDER_PAD if header.flags.border_extension else 0
        self.sao: list[SaoParams | None] = [None] * self.n_regions
        self.regions: list[Region] = []

    @property
    def flags(self):
        return self.header.flags

    def begin_region(self, index: int) -> Region:
        region = Region(self, index)
        self.regions.append(region)
        return region

    def modes_allowed(self, region: Region) -> list[PredMode]:
        modes = [PredMode.INTRA_DC, PredMode.INTRA_H, PredMode.INTRA_V]
        if region.ibc:
            modes.append(PredMode.IBC)
        if self.previous is not None:
            modes.append(PredMode.INTER)
        return modes

    def ibc_area(self, region: Region, cx: int, cy: int) -> ReferenceArea:
        if self.tiled:
            area = reference_area(AreaMode.TILE_REFERENCE, self.layout, region.index, (cx, cy), self.ref_pad)
            if region.index > 0 and self.ref0 is None:
                raise RuntimeError("reference tile used before it was finished")
            return area
        return reference_area(AreaMode.RASTER_CAUSAL, self.layout, 0, (cx, cy))

    def neighbours(self, region: Region, cx: int, cy: int):
        x0, y0, _, _ = region.bounds
        has_top, has_left = cy > y0, cx > x0
        hx, hy = cx // 2, cy // 2
        top = (self.y[cy - 1, cx:cx + CU], self.u[hy - 1, hx:hx + CH], self.v[hy - 1, hx:hx + CH]) if has_top else (None,) * 3
        left = (self.y[cy:cy + CU, cx - 1], self.u[hy:hy + CH, hx - 1], self.v[hy:hy + CH, hx - 1]) if has_left else (None,) * 3
        return top, left

    def predict_intra(self, region: Region, mode: PredMode, cx: int, cy: int):
        top, left = self.neighbours(region, cx, cy)
        return tuple(intra_predict(mode, t, l, s) for t, l, s in zip(top, left, (CU, CH, CH)))

    def predict_ibc(self, area: ReferenceArea, mv: MotionVector, cx: int, cy: int):
        where = area.locate(mv)
        if where is None:
            return None
        if where == "reference":
            pad = self.ref_pad
            planes, off = self.ref0, pad
        else:
            planes, off = (self.y, self.u, self.v), 0
        return self._fetch(planes, off, mv, cx, cy)

    def inter_legal(self, mv: MotionVector, cx: int, cy: int) -> bool:
        x0, y0, x1, y1 = (int(v) for v in support_bbox(cx, cy, mv[0], mv[1]))
        p = BORDER_PAD
        return x0 >= -p and y0 >= -p and x1 <= self.layout.frame_width + p and y1 <= self.layout.frame_height + p

    def predict_inter(self, mv: MotionVector, cx: int, cy: int):
        if not self.inter_legal(mv, cx, cy):
            return None
        return self._fetch(self.previous, BORDER_PAD, mv, cx, cy)

    @staticmethod
    def _fetch(planes, off: int, mv, cx: int, cy: int):
        py = interpolate_luma(planes[0], mv, (cx + off, cy + off), CU)
        pu = interpolate_chroma(planes[1], mv, (cx // 2 + off // 2, cy // 2 + off // 2), CH)
        pv = interpolate_chroma(planes[2], mv, (cx // 2 + off // 2, cy // 2 + off // 2), CH)
        return py, pu, pv

    def store(self, cx: int, cy: int, recon_blocks: np.ndarray) -> None:
        y, u, v = merge_cu(recon_blocks)
        self.y[cy:cy + CU, cx:cx + CU] = y
        self.u[cy // 2:cy // 2 + CH, cx // 2:cx // 2 + CH] = u
        self.v[cy // 2:cy // 2 + CH, cx // 2:cx // 2 + CH] = v

    # -- filtering --------------------------------------------------------

    def _filter_now(self) -> bool:
        return self.tiled and self.flags.per_tile_filtering

    def _filter(self, region: Region, original: np.ndarray | None) -> None:
        flags = self.flags
        if not (flags.deblock_enabled or flags.sao_enabled):
            return
        if original is not None:
            self.y, params = filter_tile(original, self.y, region.bounds, region.qp, flags.deblock_enabled, flags.sao_enabled)
            self.sao[region.index] = params
        else:
            self.y = apply_tile_filters(self.y, region.bounds, region.qp, flags.deblock_enabled, self.sao[region.index])

    def end_region(self, region: Region, original: np.ndarray | None = None, sao: SaoParams | None = None) -> None:
        """Finish a region; the encoder passes the original luma, the decoder the signalled SAO."""
        if original is None:
            self.sao[region.index] = sao
        if self._filter_now():
            self._filter(region, original)
        if self.tiled and region.index == 0 and self.n_regions > 1:
            w = self.layout.tile_width
            pad = self.ref_pad
            self.ref0 = (
                extend_borders(self.y[:, :w], pad),
                extend_borders(self.u[:, :w // 2], pad // 2),
                extend_borders(self.v[:, :w // 2], pad // 2),
            )

    def finish_frame(self, original: np.ndarray | None = None) -> list[SaoParams | None]:
        """Apply deferred filters; returns the SAO parameters of every region."""
        if not self._filter_now():
            for region in self.regions:
                self._filter(region, original)
        return self.sao

    def output(self) -> Frame:
        return Frame(self.y.astype(np.uint8), self.u.astype(np.uint8), self.v.astype(np.uint8))

    def as_reference(self):
        p = BORDER_PAD
        return (extend_borders(self.y, p), extend_borders(self.u, p // 2), extend_borders(self.v, p // 2))
