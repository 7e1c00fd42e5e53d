import csv
import io
import json
import math
import time

import pytest

from mvscc.bench import BdRow, BenchResult, BenchSequence, RawRow, _bd_cell, run_bench, run_cell
from mvscc.bitstream import GopKind
from mvscc.codec import PRESETS
from mvscc.plots import plot_rd_curves
from mvscc.report import BD_COLUMNS, RAW_COLUMNS, emit_report, parse_report_csv, rd_dumps
from mvscc.synth import ContentKind, synth_multiview

AI = [GopKind.ALL_INTRA]


def _seq(name="cam", n=2, w=32, h=32, frames=1, disparity=8, noise=0.5, seed=0):
    return BenchSequence(name, synth_multiview(ContentKind.CAMERA_LIKE, n, w, h, frames, disparity=disparity, noise_amp=noise, seed=seed))


@pytest.fixture(scope="module")
def small_result():
    return run_bench([_seq()], ("simulcast", "scc", "ascc"), scenarios=AI, overrides={"search_h": 16, "search_v": 8})


def test_smoke_cell_under_ten_seconds():
    seq = _seq(w=64, h=64, frames=4)
    t0 = time.perf_counter()
    kbps, p, sec, bits = run_cell(seq.views, PRESETS["ascc"].config)
    assert time.perf_counter() - t0 < 10
    assert kbps > 0 and math.isfinite(p) and bits % 8 == 0
    assert kbps == pytest.approx(bits * 25 / 4 / 1000)


def test_identical_views_ascc_beats_simulcast_everywhere():
    base = _seq(n=1, w=48, h=48).views[0]
    res = run_bench([BenchSequence("same", [base, base, base])], ("simulcast", "ascc"), scenarios=AI)
    for qp in (25, 30, 35, 40):
        assert res.row("same", "ascc", "ALL_INTRA", qp).kbps < res.row("same", "simulcast", "ALL_INTRA", qp).kbps


def test_single_mode_gives_empty_bd_table():
    res = run_bench([_seq()], ("ascc",), qps=(30, 40), scenarios=AI)
    assert len(res.raw) == 2 and res.bd == [] and res.failures == []


def test_raw_and_bd_tables(small_result):
    res = small_result
    assert len(res.raw) == 12 and not res.failures
    pairs = {(b.anchor, b.test) for b in res.bd}
    assert pairs == {("simulcast", "scc"), ("simulcast", "ascc"), ("scc", "ascc")}
    for b in res.bd:
        assert math.isfinite(b.bd_rate_pct) and math.isfinite(b.time_pct)
    assert [r.key for r in res.raw] == sorted(r.key for r in res.raw)


def test_invariant_to_mode_order(small_result):
    other = run_bench([_seq()], ("ascc", "simulcast", "scc"), scenarios=AI, overrides={"search_h": 16, "search_v": 8})
    strip = lambda rows: [(r.key, r.kbps, r.psnr_y) for r in rows]  # noqa: E731
    assert strip(other.raw) == strip(small_result.raw)
    assert [(b.key, b.bd_rate_pct) for b in other.bd] == [(b.key, b.bd_rate_pct) for b in small_result.bd]


def test_failures_are_recorded_not_raised():
    bad = BenchSequence("odd", synth_multiview(ContentKind.CAMERA_LIKE, 1, 24, 16, 1))
    res = run_bench([bad, _seq(n=1)], ("simulcast",), qps=(30, 35), scenarios=AI)
    assert [f[0][0] for f in res.failures] == ["odd", "odd"]
    assert len(res.raw) == 2
    with pytest.raises(KeyError):
        run_bench([_seq()], ("nope",))


def test_degenerate_curve_becomes_bd_failure():
    res = BenchResult(
        raw=[RawRow("s", m, "ALL_INTRA", q, 10.0 - q / 10, 40.0, 0.1) for m in ("simulcast", "ascc") for q in (25, 30, 35, 40)]
    )
    _bd_cell(res, "s", "ALL_INTRA", "simulcast", "ascc")
    assert res.bd == [] and "duplicate" in res.failures[0][1]


def test_empty_result_headers_only():
    out = emit_report(BenchResult(), "csv").decode()
    assert out == ",".join(RAW_COLUMNS) + "\n\n" + ",".join(BD_COLUMNS) + "\n"
    assert json.loads(emit_report(BenchResult(), "json")) == {"raw": [], "bd": []}


def test_one_row_round_trip():
    row = RawRow("seq a", "ascc", "IPPP", 30, 123.456789, 41.123456, 0.98765)
    out = emit_report(BenchResult(raw=[row]), "csv").decode()
    lines = out.splitlines()
    assert lines[1] == "seq a,ascc,IPPP,30,123.46,41.1235,0.988"
    raw, bd = parse_report_csv(out)
    assert raw == [RawRow("seq a", "ascc", "IPPP", 30, 123.46, 41.1235, 0.988)] and bd == []


def test_csv_round_trip_of_bench(small_result):
    raw, bd = parse_report_csv(emit_report(small_result, "csv"))
    assert [r.key for r in raw] == [r.key for r in small_result.raw]
    for a, b in zip(raw, small_result.raw):
        assert a.kbps == round(b.kbps, 2) and a.psnr_y == round(b.psnr_y, 4)
    assert [b.key for b in bd] == [b.key for b in small_result.bd]


def test_json_and_csv_agree(small_result):
    doc = json.loads(emit_report(small_result, "json"))
    raw, bd = parse_report_csv(emit_report(small_result, "csv"))
    assert [(r["kbps"], r["psnr_y"], r["seconds"]) for r in doc["raw"]] == [(r.kbps, r.psnr_y, r.seconds) for r in raw]
    assert [(b["bd_rate_pct"], b["time_pct"]) for b in doc["bd"]] == [(b.bd_rate_pct, b.time_pct) for b in bd]


def test_non_finite_values():
    res = BenchResult(
        raw=[RawRow("s", "m", "ALL_INTRA", 25, 1.0, math.inf, 0.0)],
        bd=[BdRow("s", "ALL_INTRA", "a", "b", -5.0, math.nan)],
    )
    text = emit_report(res, "csv").decode()
    assert "inf" in text and "nan" in text
    doc = json.loads(emit_report(res, "json"))
    assert doc["raw"][0]["psnr_y"] is None and doc["bd"][0]["time_pct"] is None
    with pytest.raises(ValueError):
        emit_report(res, "xml")


def test_parse_rejects_foreign_csv():
    with pytest.raises(ValueError, match="not a bench report"):
        parse_report_csv("a,b\n1,2\n")


def test_rd_dumps(small_result):
    dumps = rd_dumps(small_result)
    assert set(dumps) == {f"cam_{m}_all_intra.dat" for m in ("simulcast", "scc", "ascc")}
    lines = dumps["cam_ascc_all_intra.dat"].splitlines()
    assert lines[0].startswith("#") and len(lines) == 5
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:])), delimiter=" "))
    assert all(len(r) == 2 for r in rows)


def test_plots_written(small_result, tmp_path):
    paths = plot_rd_curves(small_result, tmp_path)
    assert [p.name for p in paths] == ["rd_cam_all_intra.png"]
    assert paths[0].read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
