"""RD curve figures for bench reports."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bench import BenchResult  # noqa: E402
from .report import safe_name  # noqa: E402


def plot_rd_curves(result: BenchResult, out_dir: str | Path, prefix: str = "rd") -> list[Path]:
    """One PNG per (sequence, scenario) with every mode's curve; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups: dict[tuple[str, str], dict[str, list]] = {}
    for r in result.raw:
        if not math.isfinite(r.psnr_y):
            continue
        groups.setdefault((r.sequence, r.scenario), {}).setdefault(r.mode, []).append(r)
    paths = []
    for (seq, scen), modes in sorted(groups.items()):
        fig, ax = plt.subplots(figsize=(5.5, 4.0), dpi=100)
        for mode, rows in sorted(modes.items()):
            rows.sort(key=lambda r: r.qp)
            ax.plot([r.kbps for r in rows], [r.psnr_y for r in rows], marker="o", label=mode)
        ax.set_xlabel("bitrate [kbit/s]")
        ax.set_ylabel("PSNR-Y [dB]")
        ax.set_title(f"{seq} ({scen})")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / f"{prefix}_{safe_name(seq)}_{scen.lower()}.png"
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths
