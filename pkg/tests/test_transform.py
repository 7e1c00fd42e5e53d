import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.fft import dctn

from mvscc.transform import (
    UNZIGZAG,
    ZIGZAG,
    dct_basis8,
    dequantize,
    forward_transform8,
    inverse_transform8,
    qstep,
    quantize,
    transform_matrix8,
)

residuals = arrays(np.int64, (8, 8), elements=st.integers(-255, 255))


def _half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def _oracle_matrix():
    rows = []
    for k in range(8):
        ck = math.sqrt((1 if k == 0 else 2) / 8)
        rows.append([_half_away(64 * ck * math.cos(math.pi * k * (2 * n + 1) / 16)) for n in range(8)])
    return np.array(rows)


def _shift(x: int, s: int) -> int:
    # round half away from zero, then divide by 2**s
    q, r = divmod(abs(x), 1 << s)
    if 2 * r >= (1 << s):
        q += 1
    return q if x >= 0 else -q


def _oracle_forward(block):
    m = _oracle_matrix().tolist()
    b = np.asarray(block).tolist()
    t = [[_shift(sum(m[k][n] * b[n][j] for n in range(8)), 3) for j in range(8)] for k in range(8)]
    return np.array([[_shift(sum(t[i][n] * m[k][n] for n in range(8)), 4) for k in range(8)] for i in range(8)])


def test_matrix_matches_formula():
    assert np.array_equal(transform_matrix8(), _oracle_matrix())


def test_dc_row_is_23():
    assert transform_matrix8()[0].tolist() == [23] * 8


def test_matrix_memoized_and_read_only():
    a, b = transform_matrix8(), transform_matrix8()
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        a[0, 0] = 1


def test_float_basis_rows_orthogonal():
    b = dct_basis8()
    assert np.allclose(b @ b.T, np.eye(8), atol=1e-12)


def test_zero_block():
    assert not forward_transform8(np.zeros((8, 8), int)).any()


def test_constant_block_is_dc_only():
    c = forward_transform8(np.full((8, 8), 8))
    assert c[0, 0] != 0
    c[0, 0] = 0
    assert not c.any()


def test_forward_matches_scalar_oracle(rng):
    for _ in range(30):
        r = rng.integers(-255, 256, (8, 8))
        assert np.array_equal(forward_transform8(r), _oracle_forward(r))


def test_forward_tracks_float_dct(rng):
    # 64-scaled matrix and a total shift of 7 give 32x the orthonormal DCT.
    r = rng.integers(-255, 256, (500, 8, 8))
    c = forward_transform8(r)
    ref = 32 * dctn(r.astype(float), axes=(-2, -1), norm="ortho")
    err = np.abs(c - ref).max(axis=(1, 2))
    assert np.all(err <= 0.03 * np.linalg.norm(ref, axis=(1, 2)))


def test_round_trip_within_one(rng):
    r = rng.integers(-255, 256, (20000, 8, 8))
    back = inverse_transform8(forward_transform8(r))
    assert np.max(np.abs(back - r)) <= 1


@given(residuals)
def test_round_trip_property(r):
    assert np.max(np.abs(inverse_transform8(forward_transform8(r)) - r)) <= 1


def test_inverse_output_clamped():
    huge = np.zeros((8, 8), np.int64)
    huge[0, 0] = 10**6
    out = inverse_transform8(huge)
    assert out.max() <= 511 and out.min() >= -512


def test_stacked_blocks_match_single(rng):
    r = rng.integers(-255, 256, (5, 8, 8))
    stacked = forward_transform8(r)
    for i in range(5):
        assert np.array_equal(stacked[i], forward_transform8(r[i]))


@pytest.mark.parametrize("qp,step", [(4, 1.0), (10, 2.0), (22, 8.0)])
def test_qstep(qp, step):
    assert qstep(qp) == step


def test_qstep_range():
    with pytest.raises(ValueError):
        qstep(52)
    with pytest.raises(ValueError):
        qstep(-1)


def test_quantize_examples():
    c = np.zeros((8, 8), np.int64)
    assert not quantize(c, 37, True).any()
    c[0, 0] = 100
    assert quantize(c, 4, True)[0, 0] == 100
    assert quantize(c, 22, True)[0, 0] == 12
    c[0, 0] = -100
    assert quantize(c, 22, True)[0, 0] == -12


def test_inter_dead_zone_is_wider():
    c = np.full((8, 8), 13, np.int64)  # 13/8 = 1.625
    assert quantize(c, 22, True)[0, 0] == 1  # floor(1.958)
    c[:] = 15  # 1.875
    assert quantize(c, 22, True)[0, 0] == 2
    assert quantize(c, 22, False)[0, 0] == 2
    c[:] = 14  # 1.75
    assert quantize(c, 22, False)[0, 0] == 1


def test_dequantize_examples():
    lv = np.zeros((8, 8), np.int64)
    assert not dequantize(lv, 30).any()
    lv[0, 0] = 12
    assert dequantize(lv, 22)[0, 0] == 96
    lv[0, 0] = 3
    assert dequantize(lv, 5)[0, 0] == 3
    lv[0, 0] = -3
    assert dequantize(lv, 5)[0, 0] == -3


def test_near_lossless_at_qp4(rng):
    r = rng.integers(-255, 256, (2000, 8, 8))
    for intra in (True, False):
        rec = inverse_transform8(dequantize(quantize(forward_transform8(r), 4, intra), 4))
        assert np.max(np.abs(rec - r)) <= 1


@given(residuals)
def test_levels_non_increasing_in_qp(r):
    c = forward_transform8(r)
    sums = [int(np.abs(quantize(c, qp, True)).sum()) for qp in range(0, 52)]
    assert all(a >= b for a, b in zip(sums, sums[1:]))


def test_zigzag_is_standard_scan():
    assert ZIGZAG[:10].tolist() == [0, 1, 8, 16, 9, 2, 3, 10, 17, 24]
    assert ZIGZAG[-1] == 63
    assert np.array_equal(ZIGZAG[UNZIGZAG], np.arange(64))
    # the scan walks anti-diagonals
    diag = [(i // 8) + (i % 8) for i in ZIGZAG.tolist()]
    assert diag == sorted(diag)
