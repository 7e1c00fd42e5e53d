"""8x8 integer DCT, scalar quantizer and their inverses.

All functions accept a single ``(8, 8)`` block or a stack ``(..., 8, 8)``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

QP_MIN, QP_MAX = 0, 51
FWD_SHIFT1, FWD_SHIFT2 = 3, 4
INV_SCALE_BITS = 16
INV_SHIFT1, INV_SHIFT2 = 12, 13
INTRA_ROUNDING = 1.0 / 3.0
INTER_ROUNDING = 1.0 / 6.0


def round_half_away(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def rshift_round(x: np.ndarray, shift: int) -> np.ndarray:
    """Integer right shift rounding half away from zero."""
    half = 1 << (shift - 1)
    mag = (np.abs(x) + half) >> shift
    return np.where(x < 0, -mag, mag)


def dct_basis8() -> np.ndarray:
    """Orthonormal float DCT-II basis, rows are frequencies."""
    k = np.arange(8)[:, None]
    n = np.arange(8)[None, :]
    c = np.where(k == 0, math.sqrt(1 / 8), math.sqrt(2 / 8))
    return c * np.cos(np.pi * k * (2 * n + 1) / 16)


@lru_cache(maxsize=None)
def _matrix() -> np.ndarray:
    m = round_half_away(64.0 * dct_basis8())
    m.setflags(write=False)
    return m


def transform_matrix8() -> np.ndarray:
    return _matrix()


@lru_cache(maxsize=None)
def _inverse_matrix() -> np.ndarray:
    # The rounded forward matrix is not orthogonal, so the inverse uses a
    # finely scaled integer approximation of its true inverse.
    k = round_half_away(np.linalg.inv(_matrix().astype(np.float64)) * (1 << INV_SCALE_BITS))
    k.setflags(write=False)
    return k


def inverse_matrix8() -> np.ndarray:
    return _inverse_matrix()


def forward_transform8(block) -> np.ndarray:
    r = np.asarray(block, dtype=np.int64)
    m = _matrix()
    t = rshift_round(m @ r, FWD_SHIFT1)
    return rshift_round(t @ m.T, FWD_SHIFT2)


def inverse_transform8(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.int64)
    k = _inverse_matrix()
    t = rshift_round(k @ c, INV_SHIFT1)
    r = rshift_round(t @ k.T, INV_SHIFT2)
    return np.clip(r, -512, 511)


def clamp_qp(qp: int) -> int:
    return min(max(int(qp), QP_MIN), QP_MAX)


def check_qp(qp: int) -> int:
    if not QP_MIN <= qp <= QP_MAX:
        raise ValueError(f"QP {qp} outside [{QP_MIN}, {QP_MAX}]")
    return int(qp)


def qstep(qp: int) -> float:
    check_qp(qp)
    return 2.0 ** ((qp - 4) / 6.0)


def quantize(coeffs, qp: int, intra: bool) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.int64)
    f = INTRA_ROUNDING if intra else INTER_ROUNDING
    mag = np.floor(np.abs(c) / qstep(qp) + f).astype(np.int64)
    return np.where(c < 0, -mag, mag)


def dequantize(levels, qp: int) -> np.ndarray:
    return round_half_away(np.asarray(levels, dtype=np.float64) * qstep(qp))


def _zigzag() -> np.ndarray:
    cells = [(i, j) for i in range(8) for j in range(8)]
    cells.sort(key=lambda c: (c[0] + c[1], c[0] if (c[0] + c[1]) % 2 else -c[0]))
    return np.array([i * 8 + j for i, j in cells], dtype=np.intp)


ZIGZAG = _zigzag()
ZIGZAG.setflags(write=False)
UNZIGZAG = np.argsort(ZIGZAG)
UNZIGZAG.setflags(write=False)
