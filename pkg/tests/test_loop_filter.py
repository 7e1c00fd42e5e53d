import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mvscc.loop_filter import (
    SaoParams,
    apply_tile_filters,
    beta,
    deblock_tile,
    filter_tile,
    sao_apply,
    sao_estimate,
    sao_ssd,
)


def test_beta():
    assert [beta(q) for q in (0, 16, 17, 32, 40, 51)] == [0, 0, 1, 16, 24, 35]


def test_constant_tile_unchanged():
    t = np.full((16, 32), 99, np.uint8)
    assert np.array_equal(deblock_tile(t, None, 40), t)


@given(arrays(np.uint8, (16, 16)), st.integers(0, 16))
def test_low_qp_disables_deblocking(t, qp):
    assert np.array_equal(deblock_tile(t, None, qp), t)


def test_step_edge_example():
    t = np.full((8, 16), 100, np.uint8)
    t[:, 8:] = 120
    out = deblock_tile(t, None, 40)
    assert np.all(out[:, 7] == 105) and np.all(out[:, 8] == 115)
    assert np.all(out[:, :7] == 100) and np.all(out[:, 9:] == 120)


def test_step_edge_beyond_beta_untouched():
    t = np.full((8, 16), 100, np.uint8)
    t[:, 8:] = 124
    assert np.array_equal(deblock_tile(t, None, 40), t)


def _oracle_deblock(plane, bounds, qp):
    x0, y0, x1, y1 = bounds
    s = plane.astype(int).copy()
    b = beta(qp)
    for x in range(x0 + 8, x1, 8):
        for y in range(y0, y1):
            p1, p0, q0, q1 = s[y, x - 2], s[y, x - 1], s[y, x], s[y, x + 1]
            if abs(p0 - q0) < b:
                s[y, x - 1] = (p1 + 2 * p0 + q0 + 2) >> 2
                s[y, x] = (q1 + 2 * q0 + p0 + 2) >> 2
    for y in range(y0 + 8, y1, 8):
        for x in range(x0, x1):
            p1, p0, q0, q1 = s[y - 2, x], s[y - 1, x], s[y, x], s[y + 1, x]
            if abs(p0 - q0) < b:
                s[y - 1, x] = (p1 + 2 * p0 + q0 + 2) >> 2
                s[y, x] = (q1 + 2 * q0 + p0 + 2) >> 2
    return s


def test_deblock_matches_scalar_oracle():
    rng = np.random.default_rng(1)
    for _ in range(10):
        base = rng.integers(60, 200, (32, 48))
        plane = np.clip(base + rng.integers(-12, 13, base.shape), 0, 255).astype(np.uint8)
        bounds = (16, 0, 48, 32)
        qp = int(rng.integers(17, 52))
        assert np.array_equal(deblock_tile(plane, bounds, qp), _oracle_deblock(plane, bounds, qp))


def test_tile_edges_never_filtered():
    t = np.full((16, 32), 100, np.uint8)
    t[:, 16:] = 104
    out = deblock_tile(t, (16, 0, 32, 16), 40)
    assert np.array_equal(out, t)
    out = deblock_tile(t, None, 40)
    assert out[0, 15] != 100


def test_misaligned_bounds_rejected():
    with pytest.raises(ValueError, match="aligned"):
        deblock_tile(np.zeros((16, 16), np.uint8), (4, 0, 16, 16), 30)


# --------------------------------------------------------------------------
# SAO


def test_sao_apply_examples():
    t = np.array([[10, 254, 100]], np.uint8)
    assert np.array_equal(sao_apply(t, SaoParams()), t)
    assert sao_apply(t, SaoParams(1, (5, 0, 0, 0)))[0, 0] == 15
    assert sao_apply(t, SaoParams(28, (0, 0, 0, 7)))[0, 1] == 255


def test_sao_params_validation():
    with pytest.raises(ValueError):
        SaoParams(29)
    with pytest.raises(ValueError):
        SaoParams(0, (8, 0, 0, 0))
    with pytest.raises(ValueError):
        SaoParams(0, (0, 0, 0))


def test_sao_estimate_examples():
    rng = np.random.default_rng(2)
    orig = rng.integers(0, 256, (16, 16), dtype=np.uint8)
    assert sao_estimate(orig, orig) == SaoParams(0, (0, 0, 0, 0))
    o = np.full((8, 8), 83, np.uint8)
    p = sao_estimate(o, o - 3)
    band = 80 // 8
    assert band in range(p.start_band, p.start_band + 4)
    assert p.offsets[band - p.start_band] == 3
    assert np.array_equal(sao_apply(o - 3, p), o)


def _round_half_away(x):
    return int(np.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def _oracle_sao(orig, recon):
    o = orig.astype(int).ravel()
    r = recon.astype(int).ravel()
    best = None
    for start in range(29):
        offs = []
        for b in range(start, start + 4):
            sel = (r >> 3) == b
            offs.append(0 if not sel.any() else max(-7, min(7, _round_half_away((o[sel] - r[sel]).mean()))))
        p = SaoParams(start, tuple(offs))
        ssd = sao_ssd(orig, recon, p)
        if best is None or ssd < best[0]:
            best = (ssd, p)
    return best


@given(st.integers(0, 2**31 - 1), st.integers(1, 12))
def test_sao_estimate_is_optimal_over_start_bands(seed, amp):
    rng = np.random.default_rng(seed)
    orig = rng.integers(0, 256, (16, 16)).astype(np.uint8)
    recon = np.clip(orig.astype(int) + rng.integers(-amp, amp + 1, orig.shape) + rng.integers(-4, 5), 0, 255).astype(np.uint8)
    p = sao_estimate(orig, recon)
    want_ssd, want = _oracle_sao(orig, recon)
    assert sao_ssd(orig, recon, p) == want_ssd
    assert p == want
    # never worse than no SAO
    d = orig.astype(int) - recon
    assert want_ssd <= int((d * d).sum())


def test_sao_exhaustive_offsets_small_tile():
    rng = np.random.default_rng(3)
    orig = rng.integers(96, 128, (4, 4)).astype(np.uint8)
    recon = np.clip(orig.astype(int) + rng.integers(-5, 6, orig.shape), 0, 255).astype(np.uint8)
    p = sao_estimate(orig, recon)
    got = sao_ssd(orig, recon, p)
    bands = sorted(set((recon.ravel() >> 3).tolist()))
    assert len(bands) <= 4
    start = min(bands[0], 28)
    grid = np.stack(np.meshgrid(*[np.arange(-7, 8)] * 4, indexing="ij"), -1).reshape(-1, 4)
    best = min(sao_ssd(orig, recon, SaoParams(start, tuple(int(v) for v in g))) for g in grid)
    assert got == best


# --------------------------------------------------------------------------
# tile filtering


def test_filter_tile_identity_with_flags_off():
    rng = np.random.default_rng(4)
    orig = rng.integers(0, 256, (16, 32), dtype=np.uint8)
    recon = rng.integers(0, 256, (16, 32), dtype=np.uint8)
    out, params = filter_tile(orig, recon, (0, 0, 16, 16), 40, deblock=False, sao=False)
    assert np.array_equal(out, recon) and params is None


def test_decoder_equivalence():
    rng = np.random.default_rng(5)
    orig = rng.integers(0, 256, (32, 64), dtype=np.uint8)
    recon = np.clip(orig.astype(int) + rng.integers(-6, 7, orig.shape), 0, 255).astype(np.uint8)
    for bounds in ((0, 0, 32, 32), (32, 0, 64, 32)):
        out, params = filter_tile(orig, recon, bounds, 37)
        assert np.array_equal(apply_tile_filters(recon, bounds, 37, True, params), out)


def test_tile_isolation():
    rng = np.random.default_rng(6)
    orig = rng.integers(0, 256, (32, 96), dtype=np.uint8)
    recon = np.clip(orig.astype(int) + rng.integers(-6, 7, orig.shape), 0, 255).astype(np.uint8)
    bounds = [(32 * k, 0, 32 * k + 32, 32) for k in range(3)]

    def filtered(o, r):
        out = r.copy()
        for b in bounds:
            out, _ = filter_tile(o, out, b, 40)
        return out

    base = filtered(orig, recon)
    for k in range(3):
        o2, r2 = orig.copy(), recon.copy()
        sl = np.s_[1:31, 32 * k + 1:32 * k + 31]
        r2[sl] = rng.integers(0, 256, r2[sl].shape)
        o2[sl] = rng.integers(0, 256, o2[sl].shape)
        out = filtered(o2, r2)
        for j in range(3):
            if j != k:
                cols = np.s_[:, 32 * j:32 * j + 32]
                assert np.array_equal(out[cols], base[cols])
