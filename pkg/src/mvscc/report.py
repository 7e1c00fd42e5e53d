"""CSV / JSON emission of bench results and gnuplot-ready RD dumps."""

from __future__ import annotations

import csv
import io
import json
import math

from .bench import BdRow, BenchResult, RawRow

RAW_COLUMNS = ("sequence", "mode", "scenario", "qp", "kbps", "psnr_y", "seconds")
BD_COLUMNS = ("sequence", "scenario", "anchor", "test", "bd_rate_pct", "time_pct")

RATE_DECIMALS = 2
PSNR_DECIMALS = 4
PCT_DECIMALS = 2
SECONDS_DECIMALS = 3

FORMATS = ("csv", "json")


def _fmt(x: float, decimals: int) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.{decimals}f}"


def _raw_cells(r: RawRow) -> list[str]:
    return [
        r.sequence,
        r.mode,
        r.scenario,
        str(r.qp),
        _fmt(r.kbps, RATE_DECIMALS),
        _fmt(r.psnr_y, PSNR_DECIMALS),
        _fmt(r.seconds, SECONDS_DECIMALS),
    ]


def _bd_cells(r: BdRow) -> list[str]:
    return [r.sequence, r.scenario, r.anchor, r.test, _fmt(r.bd_rate_pct, PCT_DECIMALS), _fmt(r.time_pct, PCT_DECIMALS)]


def _num(cell: str) -> float | None:
    x = float(cell)
    return x if math.isfinite(x) else None


def emit_report(result: BenchResult, fmt: str = "csv") -> bytes:
    """Raw table then BD table.  CSV separates them with one blank line.

    JSON carries the same rounded values; non-finite values become null.
    """
    raw = [_raw_cells(r) for r in sorted(result.raw, key=lambda r: r.key)]
    bd = [_bd_cells(r) for r in sorted(result.bd, key=lambda r: r.key)]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RAW_COLUMNS)
        w.writerows(raw)
        buf.write("\n")
        w.writerow(BD_COLUMNS)
        w.writerows(bd)
        return buf.getvalue().encode()
    if fmt == "json":
        doc = {
            "raw": [
                {"sequence": c[0], "mode": c[1], "scenario": c[2], "qp": int(c[3]),
                 "kbps": _num(c[4]), "psnr_y": _num(c[5]), "seconds": _num(c[6])}
                for c in raw
            ],
            "bd": [
                {"sequence": c[0], "scenario": c[1], "anchor": c[2], "test": c[3],
                 "bd_rate_pct": _num(c[4]), "time_pct": _num(c[5])}
                for c in bd
            ],
        }
        return (json.dumps(doc, indent=2, allow_nan=False) + "\n").encode()
    raise ValueError(f"unknown report format {fmt!r}; expected one of {FORMATS}")


def parse_report_csv(data: bytes | str) -> tuple[list[RawRow], list[BdRow]]:
    """Inverse of the CSV emission (values at report precision)."""
    text = data.decode() if isinstance(data, bytes) else data
    raw_part, _, bd_part = text.partition("\n\n")
    raw_rows, bd_rows = [], []
    reader = csv.reader(io.StringIO(raw_part))
    header = next(reader, None)
    if header is not None and tuple(header) != RAW_COLUMNS:
        raise ValueError("not a bench report: unexpected raw table header")
    for c in reader:
        if c:
            raw_rows.append(RawRow(c[0], c[1], c[2], int(c[3]), float(c[4]), float(c[5]), float(c[6])))
    reader = csv.reader(io.StringIO(bd_part))
    header = next(reader, None)
    if header is not None and tuple(header) != BD_COLUMNS:
        raise ValueError("not a bench report: unexpected BD table header")
    for c in reader:
        if c:
            bd_rows.append(BdRow(c[0], c[1], c[2], c[3], float(c[4]), float(c[5])))
    return raw_rows, bd_rows


def rd_dumps(result: BenchResult) -> dict[str, str]:
    """Two-column ``kbps psnr_y`` text per curve, keyed by a file-safe name."""
    curves: dict[tuple[str, str, str], list[RawRow]] = {}
    for r in result.raw:
        curves.setdefault((r.sequence, r.mode, r.scenario), []).append(r)
    out = {}
    for (seq, mode, scen), rows in sorted(curves.items()):
        lines = [f"# {seq} {mode} {scen}: kbps psnr_y"]
        for r in sorted(rows, key=lambda r: r.qp):
            lines.append(f"{_fmt(r.kbps, RATE_DECIMALS)} {_fmt(r.psnr_y, PSNR_DECIMALS)}")
        out[f"{safe_name(seq)}_{mode}_{scen.lower()}.dat"] = "\n".join(lines) + "\n"
    return out


def safe_name(s: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in s)
