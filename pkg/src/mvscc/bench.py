"""Experiment runner over sequences, coding presets, QPs and GOP scenarios."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from .bitstream import GopKind
from .codec import PRESETS, CodecConfig, Preset, decode_sequence, encode
from .frames_io import Sequence, mean_psnr, psnr
from .metrics import CurveError, RDCurve, bd_rate

log = logging.getLogger(__name__)

QP_LADDER = (25, 30, 35, 40)
SCENARIOS = (GopKind.ALL_INTRA, GopKind.IPPP)
BENCH_FPS = 25.0


@dataclass(frozen=True)
class BenchSequence:
    name: str
    views: list[Sequence]


@dataclass(frozen=True)
class RawRow:
    sequence: str
    mode: str
    scenario: str
    qp: int
    kbps: float
    psnr_y: float
    seconds: float
    bits: int = 0
    frames: int = 0

    @property
    def key(self):
        return (self.sequence, self.mode, self.scenario, self.qp)


@dataclass(frozen=True)
class BdRow:
    sequence: str
    scenario: str
    anchor: str
    test: str
    bd_rate_pct: float
    time_pct: float

    @property
    def key(self):
        return (self.sequence, self.scenario, self.anchor, self.test)


@dataclass
class BenchResult:
    raw: list[RawRow] = field(default_factory=list)
    bd: list[BdRow] = field(default_factory=list)
    failures: list[tuple[tuple, str]] = field(default_factory=list)

    def row(self, sequence: str, mode: str, scenario: str, qp: int) -> RawRow | None:
        for r in self.raw:
            if r.key == (sequence, mode, scenario, qp):
                return r
        return None

    def bd_value(self, sequence: str, scenario: str, anchor: str, test: str) -> float | None:
        for r in self.bd:
            if r.key == (sequence, scenario, anchor, test):
                return r.bd_rate_pct
        return None

    def curve(self, sequence: str, mode: str, scenario: str) -> list[RawRow]:
        rows = [r for r in self.raw if (r.sequence, r.mode, r.scenario) == (sequence, mode, scenario)]
        return sorted(rows, key=lambda r: r.qp)


def _scenario_name(gop: GopKind) -> str:
    return GopKind(gop).name


def _resolve(modes) -> list[Preset]:
    out = []
    for m in modes:
        if isinstance(m, Preset):
            out.append(m)
        elif isinstance(m, str):
            if m not in PRESETS:
                raise KeyError(f"unknown mode {m!r}; known: {', '.join(PRESETS)}")
            out.append(PRESETS[m])
        else:
            raise TypeError(f"mode must be a preset or preset name, not {type(m).__name__}")
    return out


def run_cell(views: list[Sequence], config: CodecConfig, fps: float = BENCH_FPS, verify: bool = True):
    """Encode, decode and score one configuration; returns (kbps, psnr_y, seconds, bits)."""
    t0 = time.perf_counter()
    res = encode(views, config)
    seconds = time.perf_counter() - t0
    decoded, _, _ = decode_sequence(res.data)
    if verify:
        for k, (d, r) in enumerate(zip(decoded, res.recon)):
            if not d.equals(r):
                raise RuntimeError(f"closed-loop mismatch in view {k}")
    n_frames = len(views[0])
    bits = 8 * len(res.data)
    kbps = bits * fps / max(n_frames, 1) / 1000.0
    scores = [psnr(o.y, d.y) for v, dv in zip(views, decoded) for o, d in zip(v, dv)]
    return kbps, mean_psnr(scores), seconds, bits


def run_bench(
    sequences: Iterable[BenchSequence],
    modes: Iterable[str | Preset] = ("simulcast", "scc", "ascc"),
    qps: Iterable[int] = QP_LADDER,
    scenarios: Iterable[GopKind] = SCENARIOS,
    intra_period: int | None = None,
    fps: float = BENCH_FPS,
    overrides: dict | None = None,
    progress: Callable[[str], None] | None = None,
) -> BenchResult:
    """Run every (sequence, mode, scenario, QP) cell, then the BD-rate table.

    A failing cell is recorded in ``failures`` and the run continues.
    ``overrides`` are CodecConfig fields applied to every preset.
    """
    presets = _resolve(modes)
    qps = sorted(set(qps))
    scenarios = [GopKind(s) for s in scenarios]
    sequences = list(sequences)
    result = BenchResult()
    for seq in sequences:
        for preset in presets:
            for gop in scenarios:
                for qp in qps:
                    cfg = replace(preset.config, base_qp=qp, gop=gop, **(overrides or {}))
                    if intra_period is not None:
                        cfg = replace(cfg, intra_period=intra_period)
                    key = (seq.name, preset.name, _scenario_name(gop), qp)
                    try:
                        kbps, p, sec, bits = run_cell(seq.views, cfg, fps)
                    except Exception as exc:  # one bad cell must not sink the run
                        log.warning("cell %s failed: %s", key, exc)
                        result.failures.append((key, f"{type(exc).__name__}: {exc}"))
                        continue
                    result.raw.append(RawRow(*key, kbps, p, sec, bits, len(seq.views[0])))
                    if progress:
                        progress(f"{seq.name} {preset.name} {key[2]} qp={qp} kbps={kbps:.2f} psnr_y={p:.4f}")
    result.raw.sort(key=lambda r: r.key)
    names = {p.name for p in presets}
    for seq in sequences:
        for gop in scenarios:
            for preset in presets:
                for anchor in preset.anchors:
                    if anchor in names:
                        _bd_cell(result, seq.name, _scenario_name(gop), anchor, preset.name)
    result.bd.sort(key=lambda r: r.key)
    result.failures.sort(key=lambda f: tuple(str(k) for k in f[0]))
    return result


def _bd_cell(result: BenchResult, seq: str, scenario: str, anchor: str, test: str) -> None:
    a, t = result.curve(seq, anchor, scenario), result.curve(seq, test, scenario)
    key = (seq, scenario, anchor, test)
    try:
        ca = RDCurve.from_pairs([r.kbps for r in a], [r.psnr_y for r in a], [r.qp for r in a])
        ct = RDCurve.from_pairs([r.kbps for r in t], [r.psnr_y for r in t], [r.qp for r in t])
        bd = bd_rate(ca, ct)
    except CurveError as exc:
        result.failures.append((key, f"bd-rate: {exc}"))
        return
    ta, tt = sum(r.seconds for r in a), sum(r.seconds for r in t)
    time_pct = (tt / ta - 1.0) * 100.0 if ta > 0 else float("nan")
    result.bd.append(BdRow(seq, scenario, anchor, test, bd, time_pct))
