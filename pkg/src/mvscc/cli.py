"""Command-line front end: ``mvscc <command> [flags]``.

Exit status is 0 on success, 1 on usage errors and 2 on data or format errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .bench import BENCH_FPS, QP_LADDER, BenchSequence, run_bench
from .bitstream import CodingMode, GopKind
from .codec import PRESETS, CodecConfig, decode_sequence, encode
from .errors import ConfigError, FormatError
from .frames_io import Sequence, load_yuv, mean_psnr, pad_replicate, psnr, save_yuv
from .metrics import CurveError, RDCurve, bd_rate
from .packing import PackedLayout, pack, unpack, view_packing_order
from .report import FORMATS, emit_report, rd_dumps
from .synth import ContentKind, synth_multiview

log = logging.getLogger("mvscc")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

MODE_NAMES = {"simulcast": CodingMode.SIMULCAST, "scc": CodingMode.SCC_RASTER, "ascc": CodingMode.ASCC_TILES}
GOP_NAMES = {"ai": GopKind.ALL_INTRA, "ippp": GopKind.IPPP}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_size(text: str) -> tuple[int, int]:
    """``"WxH"`` to ``(W, H)``; both must be positive integers."""
    parts = text.lower().split("x")
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise argparse.ArgumentTypeError(f"size must look like WIDTHxHEIGHT, got {text!r}")
    w, h = int(parts[0]), int(parts[1])
    if w <= 0 or h <= 0:
        raise argparse.ArgumentTypeError(f"size must be positive, got {text!r}")
    return w, h


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return items


def _codec_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("codec")
    g.add_argument("--mode", choices=sorted(MODE_NAMES), default="ascc", help="coding mode (default ascc)")
    g.add_argument("--qp", type=int, default=32, help="base QP, 0..51 (default 32)")
    g.add_argument("--dqp", type=_int_list, default=None, help="per-tile QP deltas in tile order, e.g. 0,3,3")
    g.add_argument("--gop", choices=sorted(GOP_NAMES), default="ai", help="ai = all intra, ippp = P frames")
    g.add_argument("--intra-period", type=int, default=8, help="I-frame spacing for ippp (default 8)")
    g.add_argument("--search-h", type=int, default=64, help="horizontal IBC search range, pixels")
    g.add_argument("--search-v", type=int, default=64, help="vertical IBC search range, pixels")
    g.add_argument("--lambda-scale", type=float, default=1.0, help="multiplier on the RD lambda")
    g.add_argument("--no-ibc", action="store_true", help="disable intra block copy")
    g.add_argument("--no-quarter-pel", action="store_true", help="full-pel IBC vectors only")
    g.add_argument("--no-sao", action="store_true", help="disable sample adaptive offset")
    g.add_argument("--no-deblock", action="store_true", help="disable deblocking")
    g.add_argument("--no-border-ext", action="store_true", help="no border extension of the reference tile")
    g.add_argument("--no-collocated", action="store_true", help="start side-tile IBC search at the current block")
    g.add_argument("--no-tile-filter", action="store_true", help="filter after the whole frame, not per tile")


def _config_from(args) -> CodecConfig:
    mode = MODE_NAMES[args.mode]
    return CodecConfig(
        coding_mode=mode,
        base_qp=args.qp,
        delta_qp=tuple(args.dqp or ()),
        gop=GOP_NAMES[args.gop],
        intra_period=args.intra_period,
        search_h=args.search_h,
        search_v=args.search_v,
        ibc=not args.no_ibc,
        quarter_pel_ibc=not args.no_quarter_pel,
        per_tile_filtering=not args.no_tile_filter,
        border_extension=not args.no_border_ext,
        deblock=not args.no_deblock,
        sao=not args.no_sao,
        collocated_start=not args.no_collocated,
        lambda_scale=args.lambda_scale,
    )


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mvscc", description="Frame-compatible multiview coding with intra block copy.")
    p.add_argument("--version", action="version", version=f"mvscc {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("pack", help="pack views side by side into one YUV file")
    s.add_argument("--views", type=_str_list, required=True, help="comma list of view files, left to right")
    s.add_argument("--size", type=parse_size, required=True, help="view size WxH")
    s.add_argument("--frames", type=int, default=None, help="read at most this many frames")
    s.add_argument("--out", required=True, help="packed YUV output")

    s = sub.add_parser("unpack", help="split a packed YUV file into views")
    s.add_argument("--in", dest="input", required=True, help="packed YUV input")
    s.add_argument("--size", type=parse_size, required=True, help="view size WxH")
    s.add_argument("--n-views", type=int, required=True, help="number of packed views")
    s.add_argument("--frames", type=int, default=None, help="read at most this many frames")
    s.add_argument("--out-prefix", required=True, help="writes <prefix><k>.yuv in camera order")

    s = sub.add_parser("encode", help="encode views to an MVSC stream")
    s.add_argument("--views", type=_str_list, required=True, help="comma list of view files, left to right")
    s.add_argument("--size", type=parse_size, required=True, help="view size WxH")
    s.add_argument("--frames", type=int, default=None, help="encode at most this many frames")
    s.add_argument("--fps", type=float, default=BENCH_FPS, help="frame rate for the kbps figure")
    s.add_argument("--out", required=True, help="MVSC output file")
    _codec_flags(s)

    s = sub.add_parser("decode", help="decode an MVSC stream to per-view YUV files")
    s.add_argument("--in", dest="input", required=True, help="MVSC input")
    s.add_argument("--out-prefix", required=True, help="writes <prefix><k>.yuv in camera order")

    s = sub.add_parser("psnr", help="luma PSNR between two YUV files")
    s.add_argument("--ref", required=True, help="reference YUV")
    s.add_argument("--test", required=True, help="test YUV")
    s.add_argument("--size", type=parse_size, required=True, help="frame size WxH")
    s.add_argument("--frames", type=int, default=None, help="compare at most this many frames")

    s = sub.add_parser("bdrate", help="BD-rate of a test RD curve against an anchor")
    s.add_argument("--anchor", required=True, help="CSV with kbps,psnr_y columns (or two bare columns)")
    s.add_argument("--test", required=True, help="CSV with kbps,psnr_y columns (or two bare columns)")
    s.add_argument("--sequence", default=None, help="row filter for bench report files")
    s.add_argument("--scenario", default=None, help="row filter for bench report files")
    s.add_argument("--anchor-mode", default=None, help="row filter on the anchor file's mode column")
    s.add_argument("--test-mode", default=None, help="row filter on the test file's mode column")

    s = sub.add_parser("synth", help="write synthetic multiview content")
    s.add_argument("--kind", choices=[k.value for k in ContentKind], default="camera", help="content type")
    s.add_argument("--n-views", type=int, default=3, help="number of views")
    s.add_argument("--size", type=parse_size, default=(96, 64), help="view size WxH (default 96x64)")
    s.add_argument("--frames", type=int, default=4, help="frames per view")
    s.add_argument("--disparity", type=int, default=12, help="inter-view shift, quarter-pels")
    s.add_argument("--noise", type=float, default=0.5, help="sensor noise standard deviation")
    s.add_argument("--seed", type=int, default=0, help="random seed")
    s.add_argument("--out-prefix", required=True, help="writes <prefix><k>.yuv in camera order")

    s = sub.add_parser("bench", help="RD benchmark over presets, QPs and scenarios")
    s.add_argument("--views", type=_str_list, default=None, help="comma list of view files; default synthetic")
    s.add_argument("--size", type=parse_size, default=(96, 64), help="view size WxH (default 96x64)")
    s.add_argument("--frames", type=int, default=4, help="frames per sequence")
    s.add_argument("--name", default=None, help="sequence name for --views input")
    s.add_argument("--kind", choices=[k.value for k in ContentKind], default="camera",
                   help="synthetic content used when --views is absent")
    s.add_argument("--modes", type=_str_list, default=["simulcast", "scc", "ascc"],
                   help=f"presets to run: {','.join(PRESETS)}")
    s.add_argument("--qps", type=_int_list, default=list(QP_LADDER), help="QP ladder (default 25,30,35,40)")
    s.add_argument("--scenarios", type=_str_list, default=["ai", "ippp"], help="ai and/or ippp")
    s.add_argument("--intra-period", type=int, default=None, help="override the I-frame spacing")
    s.add_argument("--search-h", type=int, default=None, help="override the horizontal IBC search range")
    s.add_argument("--search-v", type=int, default=None, help="override the vertical IBC search range")
    s.add_argument("--seed", type=int, default=0, help="seed for synthetic content")
    s.add_argument("--format", choices=FORMATS, default="csv", help="report format")
    s.add_argument("--out", default=None, help="report file (default standard output)")
    s.add_argument("--figures", default=None, help="directory for RD curve PNGs")
    s.add_argument("--dat", default=None, help="directory for two-column RD dumps")
    return p


# --------------------------------------------------------------------------
# Commands


def _load_views(paths: list[str], size, frames) -> list[Sequence]:
    w, h = size
    return [load_yuv(p, w, h, frames) for p in paths]


def _pad_views(views: list[Sequence]) -> list[Sequence]:
    size = views[0].size
    if size is None or (size[0] % 16 == 0 and size[1] % 16 == 0):
        return views
    log.warning("padding %dx%d views to a multiple of 16 by edge replication", *size)
    return [Sequence([pad_replicate(f, 16) for f in v], v.fps) for v in views]


def _write_views(views: list[Sequence], prefix: str) -> list[str]:
    out = []
    for k, v in enumerate(views):
        path = f"{prefix}{k}.yuv"
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        save_yuv(path, v)
        out.append(path)
    return out


def cmd_pack(args) -> int:
    views = _pad_views(_load_views(args.views, args.size, args.frames))
    order = view_packing_order(len(views))
    n = min(len(v) for v in views)
    frames = [pack([v[i] for v in views], order)[0] for i in range(n)]
    save_yuv(args.out, Sequence(frames))
    print(f"packed {len(views)} views x {n} frames order={','.join(map(str, order))}", file=sys.stderr)
    return EXIT_OK


def cmd_unpack(args) -> int:
    w, h = args.size
    if args.n_views < 1:
        raise UsageError("--n-views must be at least 1")
    packed = load_yuv(args.input, w * args.n_views, h, args.frames)
    order = view_packing_order(args.n_views)
    layout = PackedLayout(args.n_views, w, h)
    views = [[] for _ in range(args.n_views)]
    for f in packed:
        for k, part in enumerate(unpack(f, layout, order)):
            views[k].append(part)
    _write_views([Sequence(v) for v in views], args.out_prefix)
    return EXIT_OK


def stats_line(frames: int, bits: int, kbps: float, psnr_y: float, seconds: float) -> str:
    return f"frames={frames} bits={bits} kbps={kbps:.2f} psnr_y={psnr_y:.4f} sec={seconds:.3f}"


def cmd_encode(args) -> int:
    views = _pad_views(_load_views(args.views, args.size, args.frames))
    n = min(len(v) for v in views)
    views = [Sequence(v.frames[:n], args.fps) for v in views]
    config = _config_from(args)
    t0 = time.perf_counter()
    res = encode(views, config)
    seconds = time.perf_counter() - t0
    Path(args.out).write_bytes(res.data)
    bits = 8 * len(res.data)
    kbps = bits * args.fps / max(n, 1) / 1000.0
    print(stats_line(n, bits, kbps, mean_psnr(s.psnr_y for s in res.stats), seconds))
    return EXIT_OK


def cmd_decode(args) -> int:
    data = Path(args.input).read_bytes()
    views, header, stats = decode_sequence(data)
    paths = _write_views(views, args.out_prefix)
    print(f"decoded {header.n_views} views x {header.frame_count} frames: {' '.join(paths)}", file=sys.stderr)
    return EXIT_OK


def cmd_psnr(args) -> int:
    w, h = args.size
    ref = load_yuv(args.ref, w, h, args.frames)
    test = load_yuv(args.test, w, h, args.frames)
    if len(ref) != len(test):
        raise FormatError(f"frame counts differ: {len(ref)} vs {len(test)}")
    scores = [psnr(a.y, b.y) for a, b in zip(ref, test)]
    print(f"{mean_psnr(scores):.4f}")
    return EXIT_OK


def _read_curve(path: str, args, mode_filter) -> RDCurve:
    text = Path(path).read_text()
    text = text.split("\n\n", 1)[0]
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise FormatError(f"{path}: no RD points")
    head = [c.strip().lower() for c in rows[0]]
    if "kbps" in head and "psnr_y" in head:
        body = [dict(zip(head, r)) for r in rows[1:]]
        for col, want in (("sequence", args.sequence), ("scenario", args.scenario), ("mode", mode_filter)):
            if want is not None and col in head:
                body = [r for r in body if r[col] == want]
        for col in ("sequence", "scenario", "mode"):
            if col in head and len({r[col] for r in body}) > 1:
                raise FormatError(f"{path}: rows span several values of '{col}'; filter with --{col} options")
        pairs = [(r["kbps"], r["psnr_y"]) for r in body]
    else:
        pairs = [(r[0], r[1]) for r in rows]
    try:
        return RDCurve.from_pairs([float(a) for a, _ in pairs], [float(b) for _, b in pairs])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def cmd_bdrate(args) -> int:
    anchor = _read_curve(args.anchor, args, args.anchor_mode)
    test = _read_curve(args.test, args, args.test_mode)
    print(f"{bd_rate(anchor, test):.2f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    w, h = args.size
    views = synth_multiview(args.kind, args.n_views, w, h, args.frames, args.disparity, args.noise, args.seed)
    _write_views(views, args.out_prefix)
    return EXIT_OK


def _bench_sequences(args) -> list[BenchSequence]:
    w, h = args.size
    if args.views:
        views = _pad_views(_load_views(args.views, args.size, args.frames))
        return [BenchSequence(args.name or Path(args.views[0]).stem, views)]
    n = args.frames
    if args.kind == ContentKind.SCREEN_LIKE.value:
        return [BenchSequence("screen_d16", synth_multiview("screen", 3, w, h, n, 16, 0.0, args.seed))]
    # Non-integer and integer disparity.
    return [
        BenchSequence("camera_d9", synth_multiview("camera", 3, w, h, n, 9, 0.5, args.seed)),
        BenchSequence("camera_d8", synth_multiview("camera", 3, w, h, n, 8, 0.5, args.seed)),
    ]


def cmd_bench(args) -> int:
    try:
        scenarios = [GOP_NAMES[s] for s in args.scenarios]
    except KeyError as exc:
        raise UsageError(f"unknown scenario {exc.args[0]!r}; use ai and/or ippp") from None
    unknown = [m for m in args.modes if m not in PRESETS]
    if unknown:
        raise UsageError(f"unknown mode(s) {', '.join(unknown)}; known: {', '.join(PRESETS)}")
    overrides = {k: v for k, v in (("search_h", args.search_h), ("search_v", args.search_v)) if v is not None}
    progress = (lambda m: print(m, file=sys.stderr)) if args.verbose else None
    result = run_bench(
        _bench_sequences(args), args.modes, args.qps, scenarios, args.intra_period,
        overrides=overrides, progress=progress,
    )
    report = emit_report(result, args.format)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_bytes(report)
    else:
        sys.stdout.buffer.write(report)
        sys.stdout.flush()
    if args.dat:
        d = Path(args.dat)
        d.mkdir(parents=True, exist_ok=True)
        for name, text in rd_dumps(result).items():
            (d / name).write_text(text)
    if args.figures:
        from .plots import plot_rd_curves

        for path in plot_rd_curves(result, args.figures):
            print(f"wrote {path}", file=sys.stderr)
    for key, msg in result.failures:
        print(f"failed {'/'.join(map(str, key))}: {msg}", file=sys.stderr)
    return EXIT_DATA if result.failures and not result.raw else EXIT_OK


COMMANDS = {
    "pack": cmd_pack,
    "unpack": cmd_unpack,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "psnr": cmd_psnr,
    "bdrate": cmd_bdrate,
    "synth": cmd_synth,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mvscc {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ConfigError, CurveError, OSError, ValueError) as exc:
        print(f"mvscc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
