from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..bitstream import CodingMode, GopKind, SequenceHeader, ToolFlags
from ..errors import ConfigError
from ..packing import view_packing_order
from ..transform import QP_MAX, QP_MIN

DEFAULT_INTRA_PERIOD = 8
LAMBDA_BASE = 0.85


def lagrangian(qp: int, scale: float = 1.0) -> float:
    return scale * LAMBDA_BASE * 2.0 ** ((qp - 12) / 3.0)


@dataclass(frozen=True)
class CodecConfig:
    coding_mode: CodingMode = CodingMode.ASCC_TILES
    base_qp: int = 32
    delta_qp: tuple[int, ...] = ()
    gop: GopKind = GopKind.ALL_INTRA
    intra_period: int = DEFAULT_INTRA_PERIOD
    search_h: int = 64
    search_v: int = 64
    ibc: bool = True
    quarter_pel_ibc: bool = True
    per_tile_filtering: bool = True
    border_extension: bool = True
    deblock: bool = True
    sao: bool = True
    collocated_start: bool = True
    lambda_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "coding_mode", CodingMode(self.coding_mode))
        object.__setattr__(self, "gop", GopKind(self.gop))
        object.__setattr__(self, "delta_qp", tuple(int(d) for d in self.delta_qp))

    def validate(self, n_views: int) -> None:
        if not QP_MIN <= self.base_qp <= QP_MAX:
            raise ConfigError(f"base QP {self.base_qp} outside [{QP_MIN}, {QP_MAX}]")
        if self.coding_mode == CodingMode.ASCC_TILES and n_views < 2:
            raise ConfigError("tile mode needs at least two views")
        if self.delta_qp:
            if len(self.delta_qp) != n_views:
                raise ConfigError(f"expected {n_views} delta QPs, got {len(self.delta_qp)}")
            if self.coding_mode != CodingMode.ASCC_TILES and any(self.delta_qp):
                raise ConfigError("per-tile delta QP requires tile mode")
            if self.delta_qp[0] != 0:
                raise ConfigError("tile 0 always uses the base QP; its delta must be 0")
            for k, d in enumerate(self.delta_qp):
                if not QP_MIN <= self.base_qp + d <= QP_MAX:
                    raise ConfigError(f"tile {k} QP {self.base_qp + d} out of range")
        if self.intra_period < 1:
            raise ConfigError("intra period must be at least 1")
        if self.search_h < 0 or self.search_v < 0:
            raise ConfigError("search ranges must be non-negative")
        if self.lambda_scale <= 0:
            raise ConfigError("lambda scale must be positive")

    def effective_flags(self) -> ToolFlags:
        """Tool flags as signalled, with switches that do not apply to the mode cleared."""
        mode = self.coding_mode
        tiles = mode == CodingMode.ASCC_TILES
        ibc = self.ibc and mode != CodingMode.SIMULCAST
        return ToolFlags(
            ibc=ibc,
            quarter_pel_ibc=ibc and self.quarter_pel_ibc,
            per_tile_filtering=tiles and self.per_tile_filtering,
            border_extension=tiles and ibc and self.border_extension,
            deblock_enabled=self.deblock,
            sao_enabled=self.sao,
            collocated_start=tiles and ibc and self.collocated_start,
        )

    def header(self, n_views: int, view_w: int, view_h: int, frame_count: int) -> SequenceHeader:
        self.validate(n_views)
        return SequenceHeader(
            view_width=view_w,
            view_height=view_h,
            n_views=n_views,
            coding_mode=self.coding_mode,
            base_qp=self.base_qp,
            view_order=view_packing_order(n_views),
            delta_qp=self.delta_qp or (0,) * n_views,
            flags=self.effective_flags(),
            gop=self.gop,
            intra_period=self.intra_period,
            frame_count=frame_count,
        )

    def with_qp(self, qp: int) -> "CodecConfig":
        return replace(self, base_qp=qp)


@dataclass(frozen=True)
class Preset:
    name: str
    config: CodecConfig
    description: str = ""
    anchors: tuple[str, ...] = field(default=())


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset("simulcast", CodecConfig(CodingMode.SIMULCAST, ibc=False),
               "each view coded on its own, intra/inter only"),
        Preset("scc", CodecConfig(CodingMode.SCC_RASTER, quarter_pel_ibc=False),
               "packed frame, CTU raster order, full-pel IBC", ("simulcast",)),
        Preset("scc_qpel", CodecConfig(CodingMode.SCC_RASTER, quarter_pel_ibc=True),
               "packed frame, CTU raster order, quarter-pel IBC", ("simulcast", "scc")),
        Preset("ascc", CodecConfig(CodingMode.ASCC_TILES),
               "tiles, collocated-start quarter-pel IBC, per-tile filtering",
               ("simulcast", "scc", "ascc_fpel", "ascc_nocol")),
        Preset("ascc_fpel", CodecConfig(CodingMode.ASCC_TILES, quarter_pel_ibc=False),
               "tile mode with full-pel IBC", ("simulcast",)),
        Preset("ascc_nocol", CodecConfig(CodingMode.ASCC_TILES, collocated_start=False),
               "tile mode searching around the current block", ("simulcast",)),
    )
}
