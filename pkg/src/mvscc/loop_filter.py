"""Deblocking and band-offset SAO, confined to one tile at a time.

Only luma is filtered.  Edges on tile or frame boundaries are never touched,
so the result inside a tile depends on that tile's samples alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BLOCK = 8
N_BANDS = 32
SAO_BANDS = 4
MAX_START_BAND = N_BANDS - SAO_BANDS
SAO_MAX_OFFSET = 7


@dataclass(frozen=True)
class SaoParams:
    start_band: int = 0
    offsets: tuple[int, int, int, int] = (0, 0, 0, 0)

    def __post_init__(self):
        if not 0 <= self.start_band <= MAX_START_BAND:
            raise ValueError(f"SAO start band {self.start_band} outside [0, {MAX_START_BAND}]")
        if len(self.offsets) != SAO_BANDS or any(abs(o) > SAO_MAX_OFFSET for o in self.offsets):
            raise ValueError(f"SAO offsets must be {SAO_BANDS} values in [-7, 7]")
        object.__setattr__(self, "offsets", tuple(int(o) for o in self.offsets))


def beta(qp: int) -> int:
    return max(0, qp - 16)


def _bounds(plane: np.ndarray, bounds) -> tuple[int, int, int, int]:
    if bounds is None:
        return 0, 0, plane.shape[1], plane.shape[0]
    x0, y0, x1, y1 = bounds
    if any(v % BLOCK for v in (x0, y0, x1, y1)):
        raise ValueError(f"tile bounds {bounds} are not {BLOCK}-aligned")
    return x0, y0, x1, y1


def _filter_edges(s: np.ndarray, b: int) -> None:
    """Filter vertical edges at columns 8, 16, ... of ``s`` in place."""
    w = s.shape[1]
    cols = np.arange(BLOCK, w, BLOCK)
    if b <= 0 or cols.size == 0:
        return
    p1 = s[:, cols - 2]
    p0 = s[:, cols - 1]
    q0 = s[:, cols]
    q1 = s[:, cols + 1]
    on = np.abs(p0 - q0) < b
    np0 = (p1 + 2 * p0 + q0 + 2) >> 2
    nq0 = (q1 + 2 * q0 + p0 + 2) >> 2
    s[:, cols - 1] = np.where(on, np0, p0)
    s[:, cols] = np.where(on, nq0, q0)


def deblock_tile(recon: np.ndarray, bounds=None, qp: int = 32) -> np.ndarray:
    """Return ``recon`` with internal 8x8 edges of the tile smoothed."""
    x0, y0, x1, y1 = _bounds(recon, bounds)
    out = np.array(recon, copy=True)
    s = out[y0:y1, x0:x1].astype(np.int32)
    b = beta(qp)
    _filter_edges(s, b)
    st = s.T.copy()
    _filter_edges(st, b)
    out[y0:y1, x0:x1] = st.T
    return out


def _band_stats(orig: np.ndarray, recon: np.ndarray):
    r = recon.astype(np.int64).ravel()
    e = orig.astype(np.int64).ravel() - r
    band = r >> 3
    cnt = np.bincount(band, minlength=N_BANDS)
    tot = np.bincount(band, weights=e, minlength=N_BANDS).astype(np.int64)
    return r, e, band, cnt, tot


def _rounded_mean(tot: np.ndarray, cnt: np.ndarray) -> np.ndarray:
    safe = np.maximum(cnt, 1)
    mag = (2 * np.abs(tot) + safe) // (2 * safe)
    off = np.where(tot < 0, -mag, mag)
    return np.clip(np.where(cnt > 0, off, 0), -SAO_MAX_OFFSET, SAO_MAX_OFFSET)


def sao_ssd(orig: np.ndarray, recon: np.ndarray, params: SaoParams) -> int:
    out = sao_apply(recon, params).astype(np.int64)
    d = orig.astype(np.int64) - out
    return int((d * d).sum())


def sao_estimate(orig: np.ndarray, recon: np.ndarray) -> SaoParams:
    """Band offsets from the rounded mean error; start band chosen by least SSD."""
    r, e, band, cnt, tot = _band_stats(orig, recon)
    offsets = _rounded_mean(tot, cnt)
    # SSD of each band after adding its offset (with clipping), minus before.
    gain = np.zeros(N_BANDS, dtype=np.int64)
    for b in np.flatnonzero((cnt > 0) & (offsets != 0)):
        sel = band == b
        rb, eb = r[sel], e[sel]
        nb = np.clip(rb + offsets[b], 0, 255)
        d = (rb + eb) - nb
        gain[b] = int((d * d).sum()) - int((eb * eb).sum())
    window = np.convolve(gain, np.ones(SAO_BANDS, dtype=np.int64), mode="valid")
    start = int(np.argmin(window))
    return SaoParams(start, tuple(int(o) for o in offsets[start:start + SAO_BANDS]))


def sao_apply(tile: np.ndarray, params: SaoParams) -> np.ndarray:
    t = np.asarray(tile)
    s = t.astype(np.int32)
    lut = np.zeros(N_BANDS, dtype=np.int32)
    lut[params.start_band:params.start_band + SAO_BANDS] = params.offsets
    return np.clip(s + lut[s >> 3], 0, 255).astype(t.dtype)


def filter_tile(
    original: np.ndarray,
    recon: np.ndarray,
    bounds,
    qp: int,
    deblock: bool = True,
    sao: bool = True,
) -> tuple[np.ndarray, SaoParams | None]:
    """Deblock, estimate SAO against ``original`` and apply it inside ``bounds``.

    ``original`` and ``recon`` are full planes; only the tile region changes.
    """
    x0, y0, x1, y1 = _bounds(recon, bounds)
    out = deblock_tile(recon, (x0, y0, x1, y1), qp) if deblock else np.array(recon, copy=True)
    params = None
    if sao:
        region = out[y0:y1, x0:x1]
        params = sao_estimate(original[y0:y1, x0:x1], region)
        out[y0:y1, x0:x1] = sao_apply(region, params)
    return out, params


def apply_tile_filters(recon: np.ndarray, bounds, qp: int, deblock: bool, sao: SaoParams | None) -> np.ndarray:
    """Decoder side of ``filter_tile`` given the signalled SAO parameters."""
    x0, y0, x1, y1 = _bounds(recon, bounds)
    out = deblock_tile(recon, (x0, y0, x1, y1), qp) if deblock else np.array(recon, copy=True)
    if sao is not None:
        out[y0:y1, x0:x1] = sao_apply(out[y0:y1, x0:x1], sao)
    return out
