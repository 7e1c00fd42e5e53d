"""Intra prediction, sub-pel interpolation and block-vector search.

Vectors are in quarter-pel luma units and point from the current block to its
reference block.  Positions are luma ``(x, y)`` in packed-frame coordinates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import as_strided
from scipy.signal import correlate

from .bitstream import se_len

CU = 16
# Border extension covers the full search range plus filter support.
BORDER_PAD = 72

LUMA_TAPS = np.array(
    [
        [0, 0, 0, 64, 0, 0, 0, 0],
        [-1, 4, -10, 58, 17, -5, 1, 0],
        [-1, 4, -11, 40, 40, -11, 4, -1],
        [0, 1, -5, 17, 58, -10, 4, -1],
    ],
    dtype=np.int32,
)
TAP_BEFORE, TAP_AFTER = 3, 4


class MotionVector(NamedTuple):
    dx: int
    dy: int

    @property
    def l1(self) -> int:
        return abs(self.dx) + abs(self.dy)

    def __sub__(self, other):
        return MotionVector(self.dx - other[0], self.dy - other[1])


ZERO_MV = MotionVector(0, 0)


class PredMode(enum.IntEnum):
    INTRA_DC = 0
    INTRA_H = 1
    INTRA_V = 2
    IBC = 3
    INTER = 4

    @property
    def is_intra(self) -> bool:
        return self <= PredMode.INTRA_V


INTRA_MODES = (PredMode.INTRA_DC, PredMode.INTRA_H, PredMode.INTRA_V)


# --------------------------------------------------------------------------
# Intra


def intra_predict(mode: PredMode, top, left, size: int) -> np.ndarray:
    """DC / horizontal / vertical prediction; missing neighbours fall back to DC."""
    mode = PredMode(mode)
    if mode == PredMode.INTRA_V and top is not None:
        return np.broadcast_to(np.asarray(top, dtype=np.int32)[None, :size], (size, size)).copy()
    if mode == PredMode.INTRA_H and left is not None:
        return np.broadcast_to(np.asarray(left, dtype=np.int32)[:size, None], (size, size)).copy()
    parts = [np.asarray(a, dtype=np.int64)[:size] for a in (top, left) if a is not None]
    if not parts:
        dc = 128
    else:
        n = sum(p.size for p in parts)
        dc = (int(sum(int(p.sum()) for p in parts)) + n // 2) // n
    return np.full((size, size), dc, dtype=np.int32)


# --------------------------------------------------------------------------
# Interpolation


def extend_borders(plane: np.ndarray, pad: int) -> np.ndarray:
    if pad < 0:
        raise ValueError("pad must be non-negative")
    if pad == 0:
        return np.array(plane, copy=True)
    return np.pad(plane, pad, mode="edge")


def _check_support(ref: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> None:
    if x0 < 0 or y0 < 0 or x1 > ref.shape[1] or y1 > ref.shape[0]:
        raise ValueError(
            f"interpolation support [{x0},{x1})x[{y0},{y1}) outside reference {ref.shape[1]}x{ref.shape[0]}"
        )


def _dims(size) -> tuple[int, int]:
    if isinstance(size, (int, np.integer)):
        return int(size), int(size)
    return int(size[0]), int(size[1])


def _taps_along(a: np.ndarray, axis: int) -> np.ndarray:
    """Read-only view with a trailing axis of 8 consecutive samples along ``axis``."""
    r, c = a.shape
    sr, sc = a.strides
    if axis == 1:
        return as_strided(a, (r, c - 7, 8), (sr, sc, sc), writeable=False)
    return as_strided(a, (r - 7, c, 8), (sr, sc, sr), writeable=False)


def interpolate_luma(reference: np.ndarray, mv, block_pos, size) -> np.ndarray:
    """Predict a block at ``block_pos`` (array coordinates) displaced by ``mv``.

    ``size`` is an int for square blocks or ``(width, height)``.
    """
    dx, dy = int(mv[0]), int(mv[1])
    x, y = block_pos
    sw, sh = _dims(size)
    ix, fx = x + (dx >> 2), dx & 3
    iy, fy = y + (dy >> 2), dy & 3
    bx, ax = (TAP_BEFORE, TAP_AFTER) if fx else (0, 0)
    by, ay = (TAP_BEFORE, TAP_AFTER) if fy else (0, 0)
    _check_support(reference, ix - bx, iy - by, ix + sw + ax, iy + sh + ay)
    ref = reference.astype(np.int32, copy=False)
    if not fx and not fy:
        return ref[iy:iy + sh, ix:ix + sw].copy()
    rows = ref[iy - by:iy + sh + ay]
    if fx:
        h = _taps_along(rows[:, ix - 3:ix + sw + 4], 1) @ LUMA_TAPS[fx]
        shift = 6
    else:
        h = rows[:, ix:ix + sw]
        shift = 0
    if fy:
        v = _taps_along(h, 0) @ LUMA_TAPS[fy]
        shift += 6
    else:
        v = h
    return np.clip((v + (1 << (shift - 1))) >> shift, 0, 255)


def interpolate_chroma(reference: np.ndarray, mv, block_pos, size) -> np.ndarray:
    """Bilinear chroma prediction; the luma quarter-pel vector is an eighth-pel chroma vector."""
    dx, dy = int(mv[0]), int(mv[1])
    x, y = block_pos
    sw, sh = _dims(size)
    ix, fx = x + (dx >> 3), dx & 7
    iy, fy = y + (dy >> 3), dy & 7
    _check_support(reference, ix, iy, ix + sw + (1 if fx else 0), iy + sh + (1 if fy else 0))
    ref = reference.astype(np.int32, copy=False)
    if not fx and not fy:
        return ref[iy:iy + sh, ix:ix + sw].copy()
    a = ref[iy:iy + sh, ix:ix + sw]
    b = ref[iy:iy + sh, ix + 1:ix + sw + 1] if fx else a
    c = ref[iy + 1:iy + sh + 1, ix:ix + sw] if fy else a
    d = ref[iy + 1:iy + sh + 1, ix + 1:ix + sw + 1] if fx and fy else (b if fx else c)
    acc = (8 - fx) * (8 - fy) * a + fx * (8 - fy) * b + (8 - fx) * fy * c + fx * fy * d
    return (acc + 32) >> 6


def support_bbox(cx, cy, dx, dy, size: int = CU):
    """Luma-coordinate bounding box read by luma and chroma prediction of a block.

    Works elementwise on integer arrays of vector components.
    """
    if np.ndim(dx) == 0 and np.ndim(dy) == 0 and np.ndim(cx) == 0 and np.ndim(cy) == 0:
        return _support_scalar(int(cx), int(cy), int(dx), int(dy), size)
    dx = np.asarray(dx)
    dy = np.asarray(dy)

    def axis(c, d):
        i = c + (d >> 2)
        frac = (d & 3) != 0
        l0 = i - np.where(frac, TAP_BEFORE, 0)
        l1 = i + size + np.where(frac, TAP_AFTER, 0)
        ci = c // 2 + (d >> 3)
        c0 = 2 * ci
        c1 = 2 * (ci + size // 2 + ((d & 7) != 0))
        return np.minimum(l0, c0), np.maximum(l1, c1)

    x0, x1 = axis(cx, dx)
    y0, y1 = axis(cy, dy)
    return x0, y0, x1, y1


def _support_axis(c: int, d: int, size: int) -> tuple[int, int]:
    i = c + (d >> 2)
    frac = (d & 3) != 0
    l0 = i - (TAP_BEFORE if frac else 0)
    l1 = i + size + (TAP_AFTER if frac else 0)
    ci = c // 2 + (d >> 3)
    return min(l0, 2 * ci), max(l1, 2 * (ci + size // 2 + ((d & 7) != 0)))


def _support_scalar(cx: int, cy: int, dx: int, dy: int, size: int):
    x0, x1 = _support_axis(cx, dx, size)
    y0, y1 = _support_axis(cy, dy, size)
    return x0, y0, x1, y1


# --------------------------------------------------------------------------
# Reference areas


class AreaMode(enum.Enum):
    RASTER_CAUSAL = "raster"
    TILE_REFERENCE = "tile"
    TEMPORAL = "temporal"


Rect = tuple[int, int, int, int]


@dataclass(frozen=True)
class ReferenceArea:
    """Samples a block may be predicted from.

    ``region`` is the current coding region (a tile, or the whole frame in
    raster coding); its already coded CUs form the causal part.  ``reference_rect``
    is an extra rectangle served from a separate picture: the border-extended
    reference tile, or the padded previous frame for inter prediction.
    Blocks that fit in ``reference_rect`` are served from it first.
    """

    mode: AreaMode
    region: Rect | None
    block: tuple[int, int, int]
    reference_rect: Rect | None = None

    @property
    def has_causal(self) -> bool:
        if self.region is None:
            return False
        x0, y0, _, _ = self.region
        cx, cy, _ = self.block
        return (cx, cy) != (x0, y0)

    def is_empty(self) -> bool:
        return not self.has_causal and self.reference_rect is None

    def causal_contains(self, x0, y0, x1, y1):
        if not self.has_causal:
            return np.zeros(np.broadcast(x0, y0).shape, dtype=bool) if np.ndim(x0) else False
        rx0, ry0, rx1, _ = self.region
        cx, cy, s = self.block
        inside = (x0 >= rx0) & (x1 <= rx1) & (y0 >= ry0)
        return inside & ((y1 <= cy) | ((y1 <= cy + s) & (x1 <= cx)))

    def reference_contains(self, x0, y0, x1, y1):
        if self.reference_rect is None:
            return np.zeros(np.broadcast(x0, y0).shape, dtype=bool) if np.ndim(x0) else False
        a0, b0, a1, b1 = self.reference_rect
        return (x0 >= a0) & (y0 >= b0) & (x1 <= a1) & (y1 <= b1)

    def locate(self, mv) -> str | None:
        """``"reference"``, ``"causal"`` or ``None`` (illegal) for a vector."""
        cx, cy, s = self.block
        box = _support_scalar(cx, cy, int(mv[0]), int(mv[1]), s)
        if self.reference_contains(*box):
            return "reference"
        if self.causal_contains(*box):
            return "causal"
        return None


def reference_area(
    mode: AreaMode,
    layout,
    current_tile: int,
    current_block: tuple[int, int],
    border_pad: int = BORDER_PAD,
    size: int = CU,
) -> ReferenceArea:
    """Legal IBC area for a block under raster or tile coding order.

    In raster order the whole packed frame is one region.  In tile order, side
    tiles additionally see the complete (border-extended) tile 0.
    """
    cx, cy = current_block
    if mode == AreaMode.RASTER_CAUSAL:
        region = (0, 0, layout.frame_width, layout.frame_height)
        return ReferenceArea(mode, region, (cx, cy, size))
    region = layout.tile_bounds(current_tile)
    ref = None
    if current_tile > 0:
        ref = (-border_pad, -border_pad, layout.tile_width + border_pad, layout.frame_height + border_pad)
    return ReferenceArea(mode, region, (cx, cy, size), ref)


# --------------------------------------------------------------------------
# Search


@dataclass(frozen=True)
class SearchParams:
    range_h: int = 64
    range_v: int = 64
    start: tuple[int, int] | None = None
    fractional_refine: bool = True

    def __post_init__(self):
        if self.range_h < 0 or self.range_v < 0:
            raise ValueError("search ranges must be non-negative")


class SearchResult(NamedTuple):
    mv: MotionVector
    cost: float
    ssd: int


def mv_bits(mv, predictor, unit: int = 1):
    """Signed Exp-Golomb cost of a vector delta coded in ``unit`` quarter-pels."""
    return se_len((np.asarray(mv[0]) - predictor[0]) // unit) + se_len(
        (np.asarray(mv[1]) - predictor[1]) // unit
    )


def _ssd_map(picture: np.ndarray, block: np.ndarray, px0: int, py0: int, nx: int, ny: int) -> np.ndarray:
    """SSD of ``block`` against every placement with top-left in the given grid (array coords)."""
    s = block.shape[0]
    sub = picture[py0:py0 + ny + s - 1, px0:px0 + nx + s - 1].astype(np.int64)
    b = block.astype(np.int64)
    sq = sub * sub
    ii = np.zeros((sq.shape[0] + 1, sq.shape[1] + 1), dtype=np.int64)
    ii[1:, 1:] = sq.cumsum(0).cumsum(1)
    box = ii[s:, s:] - ii[:-s, s:] - ii[s:, :-s] + ii[:-s, :-s]
    cross = np.rint(correlate(sub.astype(np.float64), b.astype(np.float64), mode="valid", method="fft"))
    return box - 2 * cross.astype(np.int64) + int((b * b).sum())


def _pick(cost, l1, dy, dx) -> int:
    order = np.lexsort((dx, dy, l1, cost))
    return int(order[0])


class _Sources:
    """Resolve a vector to the picture array and block position it reads from."""

    def __init__(self, area: ReferenceArea, causal: np.ndarray | None, reference: np.ndarray | None):
        self.area = area
        self.causal = causal
        self.reference = reference

    def fetch(self, mv, block: np.ndarray) -> int | None:
        where = self.area.locate(mv)
        if where is None:
            return None
        cx, cy, s = self.area.block
        if where == "reference":
            ox, oy = self.area.reference_rect[:2]
            pic = self.reference
        else:
            ox, oy = 0, 0
            pic = self.causal
        pred = interpolate_luma(pic, mv, (cx - ox, cy - oy), s)
        d = pred.astype(np.int64) - block
        return int((d * d).sum())


def block_search(
    block: np.ndarray,
    area: ReferenceArea,
    causal: np.ndarray | None,
    reference: np.ndarray | None,
    params: SearchParams,
    lam: float,
    predictor=ZERO_MV,
    mv_unit: int = 1,
) -> SearchResult | None:
    """Full-pel window scan followed by optional half/quarter-pel refinement.

    Cost is luma SSD plus ``lam`` times the vector-delta bits.  Ties prefer the
    shorter vector, then raster order of the reference position.
    """
    cx, cy, s = area.block
    block = np.asarray(block, dtype=np.int64)
    sx, sy = params.start if params.start is not None else (cx, cy)
    wx0, wx1 = sx - params.range_h, sx + params.range_h + 1
    wy0, wy1 = sy - params.range_v, sy + params.range_v + 1
    nx, ny = wx1 - wx0, wy1 - wy0
    rx = np.arange(wx0, wx1)[None, :].repeat(ny, 0)
    ry = np.arange(wy0, wy1)[:, None].repeat(nx, 1)
    dxq, dyq = 4 * (rx - cx), 4 * (ry - cy)
    ssd = np.full((ny, nx), -1, dtype=np.int64)
    bx0, by0, bx1, by1 = support_bbox(cx, cy, dxq, dyq, s)

    sources = []
    if area.has_causal and causal is not None:
        sources.append((causal, 0, 0, area.causal_contains(bx0, by0, bx1, by1)))
    if area.reference_rect is not None and reference is not None:
        ox, oy = area.reference_rect[:2]
        sources.append((reference, ox, oy, area.reference_contains(bx0, by0, bx1, by1)))
    # Later sources take priority, matching ReferenceArea.locate.
    for pic, ox, oy, legal in sources:
        if not legal.any():
            continue
        gx0 = max(wx0, ox)
        gy0 = max(wy0, oy)
        gx1 = min(wx1, ox + pic.shape[1] - s + 1)
        gy1 = min(wy1, oy + pic.shape[0] - s + 1)
        if gx1 <= gx0 or gy1 <= gy0:
            continue
        m = _ssd_map(pic, block, gx0 - ox, gy0 - oy, gx1 - gx0, gy1 - gy0)
        sl = (slice(gy0 - wy0, gy1 - wy0), slice(gx0 - wx0, gx1 - wx0))
        ok = legal[sl]
        ssd[sl] = np.where(ok, m, ssd[sl])
    valid = ssd >= 0
    if not valid.any():
        return None
    vdx, vdy, vssd = dxq[valid], dyq[valid], ssd[valid]
    cost = vssd + lam * mv_bits((vdx, vdy), predictor, mv_unit)
    i = _pick(cost, np.abs(vdx) + np.abs(vdy), vdy, vdx)
    best = SearchResult(MotionVector(int(vdx[i]), int(vdy[i])), float(cost[i]), int(vssd[i]))
    if not params.fractional_refine:
        return best

    src = _Sources(area, causal, reference)
    for step in (2, 1):
        cands = [best]
        for oy in (-step, 0, step):
            for ox in (-step, 0, step):
                if ox == 0 and oy == 0:
                    continue
                mv = MotionVector(best.mv.dx + ox, best.mv.dy + oy)
                d = src.fetch(mv, block)
                if d is None:
                    continue
                c = d + lam * int(mv_bits(mv, predictor, 1))
                cands.append(SearchResult(mv, float(c), d))
        best = min(cands, key=lambda r: (r.cost, r.mv.l1, r.mv.dy, r.mv.dx))
    return best


def ibc_search(
    block: np.ndarray,
    recon: np.ndarray,
    area: ReferenceArea,
    params: SearchParams,
    lam: float,
    reference: np.ndarray | None = None,
    predictor=ZERO_MV,
) -> SearchResult | None:
    """Intra block copy search; ``None`` means IBC is unavailable for this block.

    ``reference`` is the border-extended reference tile addressed by
    ``area.reference_rect``.  Full-pel searches code vectors in whole pixels.
    """
    if area.is_empty():
        return None
    unit = 1 if params.fractional_refine else 4
    return block_search(block, area, recon, reference, params, lam, predictor, unit)


MCP_RANGE = 24


def mcp_search(
    block: np.ndarray,
    previous: np.ndarray,
    block_pos: tuple[int, int],
    lam: float,
    pad: int = BORDER_PAD,
    predictor=ZERO_MV,
    search_range: int = MCP_RANGE,
) -> SearchResult:
    """Quarter-pel motion search in the previous frame, padded by ``pad`` samples."""
    h, w = previous.shape
    rect = (-pad, -pad, w - pad, h - pad)
    area = ReferenceArea(AreaMode.TEMPORAL, None, (block_pos[0], block_pos[1], block.shape[0]), rect)
    params = SearchParams(search_range, search_range, None, True)
    return block_search(block, area, None, previous, params, lam, predictor, 1)
