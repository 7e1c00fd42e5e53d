"""Deterministic synthetic multiview content.

CAMERA_LIKE views are sub-pel shifted crops of one wider master picture, so
the true inter-view disparity is known exactly.  SCREEN_LIKE content is made
of flat rectangles and repeated glyphs with integer displacements only.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy.ndimage import gaussian_filter

from .frames_io import Frame, Sequence
from .prediction import TAP_AFTER, interpolate_chroma, interpolate_luma


class ContentKind(enum.Enum):
    CAMERA_LIKE = "camera"
    SCREEN_LIKE = "screen"


# Global motion per frame, luma quarter-pel units.
CAMERA_MOTION = (3, 1)
# Screen content scrolls by whole pixels.
SCREEN_MOTION = (0, 1)

GLYPH_W, GLYPH_H = 5, 7
N_GLYPHS = 12


def view_center(n_views: int) -> int:
    return (n_views - 1) // 2


def view_shifts(n_views: int, disparity: int) -> list[int]:
    """Horizontal offset of each camera view relative to the center view."""
    c = view_center(n_views)
    return [(k - c) * disparity for k in range(n_views)]


def synth_multiview(
    kind: ContentKind | str,
    n_views: int,
    view_w: int,
    view_h: int,
    n_frames: int,
    disparity: int = 0,
    noise_amp: float = 0.0,
    seed: int = 0,
) -> list[Sequence]:
    """Camera-ordered views; ``disparity`` is in quarter-pel luma units."""
    kind = ContentKind(kind) if not isinstance(kind, ContentKind) else kind
    if n_views < 1 or n_frames < 0:
        raise ValueError("need at least one view and a non-negative frame count")
    if view_w <= 0 or view_h <= 0 or view_w % 2 or view_h % 2:
        raise ValueError("view dimensions must be positive and even")
    rng = np.random.default_rng(seed)
    if kind is ContentKind.CAMERA_LIKE:
        return _camera(rng, n_views, view_w, view_h, n_frames, disparity, noise_amp)
    return _screen(rng, n_views, view_w, view_h, n_frames, disparity)


def _margin(n_views: int, n_frames: int, disparity: int, motion: tuple[int, int], unit: int) -> int:
    reach = max(abs(s) for s in view_shifts(n_views, disparity))
    reach += max(n_frames - 1, 0) * max(abs(m) for m in motion)
    m = math.ceil(reach / unit) + TAP_AFTER + 4
    return m + (m & 1)


def _camera(rng, n_views, w, h, n_frames, disparity, noise_amp) -> list[Sequence]:
    m = _margin(n_views, n_frames, disparity, CAMERA_MOTION, 4)
    mh, mw = h + 2 * m, w + 2 * m
    yy, xx = np.mgrid[0:mh, 0:mw].astype(np.float64)
    ax, ay = rng.uniform(-1, 1, 2) * 60.0 / max(mw, mh)
    luma = 125.0 + ax * (xx - mw / 2) + ay * (yy - mh / 2)
    for sigma, amp in ((6.0, 30.0), (2.0, 16.0)):
        field = gaussian_filter(rng.standard_normal((mh, mw)), sigma, mode="wrap")
        luma += amp * field / field.std()
    master_y = np.clip(np.rint(luma), 16, 235).astype(np.int32)

    chroma = []
    for _ in range(2):
        field = gaussian_filter(rng.standard_normal((mh // 2, mw // 2)), 4.0, mode="wrap")
        chroma.append(np.clip(np.rint(128 + 12 * field / field.std()), 16, 240).astype(np.int32))

    shifts = view_shifts(n_views, disparity)
    views = []
    for k in range(n_views):
        frames = []
        for t in range(n_frames):
            mv = (shifts[k] + t * CAMERA_MOTION[0], t * CAMERA_MOTION[1])
            y = interpolate_luma(master_y, mv, (m, m), (w, h))
            u = interpolate_chroma(chroma[0], mv, (m // 2, m // 2), (w // 2, h // 2))
            v = interpolate_chroma(chroma[1], mv, (m // 2, m // 2), (w // 2, h // 2))
            if noise_amp > 0:
                y = y + np.rint(rng.normal(0.0, noise_amp, y.shape))
            frames.append(Frame(_u8(y), _u8(u), _u8(v)))
        views.append(Sequence(frames))
    return views


def _glyphs(rng) -> np.ndarray:
    g = rng.random((N_GLYPHS, GLYPH_H, GLYPH_W)) < 0.45
    g[:, :, 0] |= rng.random((N_GLYPHS, GLYPH_H)) < 0.5
    return g


def _screen(rng, n_views, w, h, n_frames, disparity) -> list[Sequence]:
    step = int(round(disparity / 4))
    m = _margin(n_views, n_frames, step, SCREEN_MOTION, 1)
    mh, mw = h + 2 * m, w + 2 * m
    light = rng.random() < 0.5
    bg = 235 if light else 32
    planes = [np.full((mh, mw), bg, np.int32), np.full((mh, mw), 128, np.int32), np.full((mh, mw), 128, np.int32)]

    for _ in range(max(3, (mw * mh) // 2048)):
        x0, y0 = rng.integers(0, mw - 8), rng.integers(0, mh - 8)
        rw, rh = rng.integers(8, max(9, mw // 3)), rng.integers(6, max(7, mh // 3))
        color = (int(rng.integers(40, 220)), int(rng.integers(64, 192)), int(rng.integers(64, 192)))
        for p, c in zip(planes, color):
            p[y0:y0 + rh, x0:x0 + rw] = c

    glyphs = _glyphs(rng)
    ink = 16 if light else 230
    line_h, adv = GLYPH_H + 5, GLYPH_W + 2
    for row in range(4, mh - GLYPH_H, line_h):
        if rng.random() < 0.3:
            continue
        x = int(rng.integers(2, 12))
        while x + GLYPH_W < mw:
            if rng.random() < 0.15:
                x += adv
                continue
            g = glyphs[rng.integers(0, N_GLYPHS)]
            region = planes[0][row:row + GLYPH_H, x:x + GLYPH_W]
            region[g] = ink
            planes[1][row:row + GLYPH_H, x:x + GLYPH_W][g] = 128
            planes[2][row:row + GLYPH_H, x:x + GLYPH_W][g] = 128
            x += adv

    c = view_center(n_views)
    views = []
    for k in range(n_views):
        frames = []
        for t in range(n_frames):
            ox = m + (k - c) * step + t * SCREEN_MOTION[0]
            oy = m + t * SCREEN_MOTION[1]
            y = planes[0][oy:oy + h, ox:ox + w]
            u = _subsample(planes[1][oy:oy + h, ox:ox + w])
            v = _subsample(planes[2][oy:oy + h, ox:ox + w])
            frames.append(Frame(_u8(y), _u8(u), _u8(v)))
        views.append(Sequence(frames))
    return views


def _subsample(p: np.ndarray) -> np.ndarray:
    s = p[0::2, 0::2] + p[1::2, 0::2] + p[0::2, 1::2] + p[1::2, 1::2]
    return (s + 2) >> 2


def _u8(a) -> np.ndarray:
    return np.clip(a, 0, 255).astype(np.uint8)
