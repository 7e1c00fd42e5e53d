"""Rate-distortion curves and the Bjontegaard delta-rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

BD_SAMPLES = 1000
MIN_POINTS = 4


class CurveError(ValueError):
    pass


@dataclass(frozen=True)
class RDPoint:
    bitrate: float  # kbit/s over all views
    psnr_y: float
    qp: int | None = None


@dataclass(frozen=True)
class RDCurve:
    points: tuple[RDPoint, ...]

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < MIN_POINTS:
            raise CurveError(f"need at least {MIN_POINTS} RD points, got {len(pts)}")
        for p in pts:
            if not math.isfinite(p.psnr_y):
                raise CurveError("RD point with infinite or undefined PSNR")
            if not (math.isfinite(p.bitrate) and p.bitrate > 0):
                raise CurveError(f"bitrate must be positive and finite, got {p.bitrate}")
        if len({p.psnr_y for p in pts}) != len(pts):
            raise CurveError("duplicate PSNR values make the cubic fit degenerate")
        if all(p.qp is not None for p in pts):
            by_qp = sorted(pts, key=lambda p: p.qp)
            if len({p.qp for p in pts}) != len(pts) or any(
                b.bitrate >= a.bitrate for a, b in zip(by_qp, by_qp[1:])
            ):
                raise CurveError("bitrate must strictly decrease as QP increases")

    @classmethod
    def from_pairs(cls, rates: Iterable[float], psnrs: Iterable[float], qps=None) -> "RDCurve":
        rates, psnrs = list(rates), list(psnrs)
        if len(rates) != len(psnrs):
            raise CurveError("rate and PSNR lists differ in length")
        qps = list(qps) if qps is not None else [None] * len(rates)
        return cls(tuple(RDPoint(float(r), float(p), q) for r, p, q in zip(rates, psnrs, qps)))

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.bitrate for p in self.points])

    @property
    def psnrs(self) -> np.ndarray:
        return np.array([p.psnr_y for p in self.points])


def _fit(curve: RDCurve) -> np.ndarray:
    return np.polyfit(curve.psnrs, np.log10(curve.rates), 3)


def overlap(anchor: RDCurve, test: RDCurve) -> tuple[float, float]:
    lo = max(anchor.psnrs.min(), test.psnrs.min())
    hi = min(anchor.psnrs.max(), test.psnrs.max())
    if not hi > lo:
        raise CurveError("RD curves have no overlapping PSNR range")
    return float(lo), float(hi)


def bd_rate(anchor: RDCurve, test: RDCurve, samples: int = BD_SAMPLES) -> float:
    """Average rate difference of ``test`` against ``anchor`` in percent.

    Negative values mean ``test`` needs less rate for the same quality.
    """
    lo, hi = overlap(anchor, test)
    pa, pt = _fit(anchor), _fit(test)
    x = np.linspace(lo, hi, samples)
    diff = np.polyval(pt, x) - np.polyval(pa, x)
    avg = np.trapezoid(diff, x) / (hi - lo)
    return float((10.0 ** avg - 1.0) * 100.0)
