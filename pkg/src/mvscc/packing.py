"""Side-by-side frame-compatible packing of multiview pictures.

Views are placed into equal-width tiles.  Tile 0 always holds the centre
camera; the remaining cameras follow in order of increasing distance from the
centre, left before right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames_io import Frame

CU_SIZE = 16
MAX_VIEWS = 8

ViewOrder = tuple[int, ...]


def view_packing_order(n_views: int) -> ViewOrder:
    """Camera index stored in each tile, e.g. ``(1, 0, 2)`` for three views."""
    if not 1 <= n_views <= MAX_VIEWS:
        raise ValueError(f"number of views must be in 1..{MAX_VIEWS}, got {n_views}")
    if n_views == 2:
        return (0, 1)
    center = (n_views - 1) // 2
    order = [center]
    for d in range(1, n_views):
        for cam in (center - d, center + d):
            if 0 <= cam < n_views:
                order.append(cam)
    return tuple(order)


def validate_order(order, n_views: int | None = None) -> ViewOrder:
    order = tuple(int(c) for c in order)
    n = len(order) if n_views is None else n_views
    if sorted(order) != list(range(n)):
        raise ValueError(f"view order {list(order)} is not a permutation of 0..{n - 1}")
    return order


@dataclass(frozen=True)
class PackedLayout:
    n_tiles: int
    tile_width: int
    frame_height: int

    def __post_init__(self):
        if self.n_tiles < 1:
            raise ValueError("layout needs at least one tile")
        if self.tile_width <= 0 or self.tile_width % CU_SIZE:
            raise ValueError(f"tile width must be a positive multiple of {CU_SIZE}")
        if self.frame_height <= 0 or self.frame_height % CU_SIZE:
            raise ValueError(f"frame height must be a positive multiple of {CU_SIZE}")

    @property
    def tile_x_offsets(self) -> tuple[int, ...]:
        return tuple(k * self.tile_width for k in range(self.n_tiles))

    @property
    def frame_width(self) -> int:
        return self.n_tiles * self.tile_width

    def tile_bounds(self, k: int) -> tuple[int, int, int, int]:
        """Luma ``(x0, y0, x1, y1)`` of tile ``k``."""
        x0 = k * self.tile_width
        return x0, 0, x0 + self.tile_width, self.frame_height


def pack(views: list[Frame], order: ViewOrder) -> tuple[Frame, PackedLayout]:
    if not views:
        raise ValueError("nothing to pack")
    order = validate_order(order, len(views))
    w, h = views[0].width, views[0].height
    for v in views[1:]:
        if (v.width, v.height) != (w, h):
            raise ValueError("all views must share dimensions")
    layout = PackedLayout(len(views), w, h)
    planes = [
        np.concatenate([views[cam].planes[p] for cam in order], axis=1) for p in range(3)
    ]
    return Frame(*planes), layout


def unpack(packed: Frame, layout: PackedLayout, order: ViewOrder) -> list[Frame]:
    """Split a packed frame back into views indexed by camera position."""
    order = validate_order(order, layout.n_tiles)
    if packed.width != layout.frame_width or packed.height != layout.frame_height:
        raise ValueError(
            f"packed frame {packed.width}x{packed.height} does not match layout "
            f"{layout.frame_width}x{layout.frame_height}"
        )
    views: list[Frame | None] = [None] * layout.n_tiles
    tw = layout.tile_width
    for k, cam in enumerate(order):
        y = packed.y[:, k * tw:(k + 1) * tw]
        u = packed.u[:, k * tw // 2:(k + 1) * tw // 2]
        v = packed.v[:, k * tw // 2:(k + 1) * tw // 2]
        views[cam] = Frame(y.copy(), u.copy(), v.copy())
    return views
