"""Occupancy grids with summed-area-table queries.

A :class:`CollisionGrid` is indexed ``[x, y]``: ``x`` in ``[0, width)``,
``y`` in ``[0, height)``. Rectangles are ``(x, y, w, h)`` in cells and cover
``[x, x+w) x [y, y+h)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import BoundsError
from .geometry import Aabb

Rect = tuple[int, int, int, int]

CHEBYSHEV = "chebyshev"
ROW_FIRST = "row_first"


class CollisionGrid:
    """Binary occupancy bitmap plus an inclusive-exclusive prefix-sum table.

    ``prefix[i, j]`` counts occupied cells in ``[0, i) x [0, j)``. After a
    mark only the rows from the lowest touched ``x`` onward are stale; they
    are recomputed on the next query. ``naive=True`` rebuilds the whole
    table on every mark instead (used for differential testing).
    """

    def __init__(self, width: int, height: int, cell_size: float = 1.0, naive: bool = False):
        if width <= 0 or height <= 0:
            raise ValueError(f"grid dimensions must be positive, got {width}x{height}")
        if not cell_size > 0:
            raise ValueError("cell_size must be positive")
        self.width = int(width)
        self.height = int(height)
        self.cell_size = float(cell_size)
        self.naive = naive
        self.occupancy = np.zeros((self.width, self.height), dtype=np.uint8)
        self._prefix = np.zeros((self.width + 1, self.height + 1), dtype=np.int64)
        self._dirty_from: int | None = None

    @classmethod
    def for_extent(cls, extent_u: float, extent_v: float, cell_size: float = 1.0, naive: bool = False) -> "CollisionGrid":
        """Grid covering a face of ``extent_u x extent_v`` cm, rounded up to whole cells."""
        return cls(cells_up(extent_u, cell_size), cells_up(extent_v, cell_size), cell_size, naive)

    def __repr__(self) -> str:
        return f"CollisionGrid({self.width}x{self.height}, cell={self.cell_size}, occupied={self.occupied_count()})"

    def _check(self, rect: Rect) -> None:
        x, y, w, h = rect
        if w <= 0 or h <= 0:
            raise BoundsError(f"rect {rect} has non-positive size")
        if x < 0 or y < 0 or x + w > self.width or y + h > self.height:
            raise BoundsError(f"rect {rect} exceeds {self.width}x{self.height} grid")

    @property
    def prefix(self) -> np.ndarray:
        self._refresh()
        return self._prefix

    def _refresh(self) -> None:
        d = self._dirty_from
        if d is None:
            return
        rows = np.cumsum(self.occupancy[d:], axis=1, dtype=np.int64)
        self._prefix[d + 1 :, 1:] = self._prefix[d, 1:] + np.cumsum(rows, axis=0)
        self._dirty_from = None

    def mark_rect(self, rect: Rect) -> None:
        self._check(rect)
        x, y, w, h = rect
        self.occupancy[x : x + w, y : y + h] = 1
        self._dirty_from = x if self._dirty_from is None else min(self._dirty_from, x)
        if self.naive:
            self._dirty_from = 0
            self._refresh()

    def count_in(self, rect: Rect) -> int:
        self._check(rect)
        x, y, w, h = rect
        p = self.prefix
        return int(p[x + w, y + h] - p[x, y + h] - p[x + w, y] + p[x, y])

    def is_free(self, rect: Rect) -> bool:
        return self.count_in(rect) == 0

    def occupied_count(self) -> int:
        return int(self.prefix[-1, -1])

    def free_mask(self, w: int, h: int) -> np.ndarray:
        """Boolean array ``[x, y]`` over placements whose w x h rect is all free."""
        if w > self.width or h > self.height:
            return np.zeros((0, 0), dtype=bool)
        p = self.prefix
        s = p[w:, h:] - p[:-w, h:] - p[w:, :-h] + p[:-w, :-h]
        return s == 0

    def iter_free_rects(
        self,
        size: tuple[int, int],
        preferred: tuple[float, float],
        order: str = CHEBYSHEV,
        stride: tuple[int, int] = (1, 1),
    ) -> Iterator[tuple[int, int]]:
        """Yield free placement positions, best first.

        ``chebyshev``: by Chebyshev distance of the rect center from
        ``preferred``, then ascending x, then ascending y.
        ``row_first``: by |center_y - preferred_y|, then |center_x - preferred_x|,
        then x, then y (used for wall surfaces, y being the vertical axis).
        ``stride`` restricts candidates to multiples of (sx, sy).
        """
        w, h = int(size[0]), int(size[1])
        if w <= 0 or h <= 0:
            raise ValueError(f"size must be positive, got {size}")
        if order not in (CHEBYSHEV, ROW_FIRST):
            raise ValueError(f"unknown search order {order!r}")
        best = None
        if order == CHEBYSHEV and tuple(stride) == (1, 1):
            best = self._nearest_windowed(w, h, preferred)
            if best is None:
                return
            yield best
        xs, ys, keys = self._ranked_candidates(w, h, preferred, order, stride)
        if not len(xs):
            return
        if best is None:
            # lexicographic minimum without a full sort; ties keep the first (x, y)
            sel = np.arange(len(xs))
            for k in keys:
                kk = k[sel]
                sel = sel[kk == kk.min()]
            best = (int(xs[sel[0]]), int(ys[sel[0]]))
            yield best
        # np.lexsort is stable and treats the last key as primary
        for idx in np.lexsort(tuple(reversed(keys))):
            pos = (int(xs[idx]), int(ys[idx]))
            if pos != best:
                yield pos

    def _ranked_candidates(self, w, h, preferred, order, stride):
        free = self.free_mask(w, h)
        sx, sy = stride
        if (sx, sy) != (1, 1) and free.size:
            lattice = np.zeros_like(free)
            lattice[::sx, ::sy] = True
            free = free & lattice
        xs, ys = np.nonzero(free)  # C-order: ascending x, then y
        dx = np.abs(xs + w / 2.0 - preferred[0])
        dy = np.abs(ys + h / 2.0 - preferred[1])
        keys = [np.maximum(dx, dy)] if order == CHEBYSHEV else [dy, dx]
        return xs, ys, keys

    def _nearest_windowed(self, w: int, h: int, preferred: tuple[float, float]) -> tuple[int, int] | None:
        """Chebyshev-nearest free position, searching square windows of doubling radius.

        Every candidate within radius r of ``preferred`` lies in the window,
        so the first hit with distance <= r is the global minimum.
        """
        if w > self.width or h > self.height:
            return None
        p = self.prefix
        px, py = preferred[0] - w / 2.0, preferred[1] - h / 2.0
        max_x, max_y = self.width - w, self.height - h
        r = float(max(w, h, 16))
        while True:
            x0, x1 = max(0, math.ceil(px - r)), min(max_x, math.floor(px + r))
            y0, y1 = max(0, math.ceil(py - r)), min(max_y, math.floor(py + r))
            covers_all = x0 == 0 and y0 == 0 and x1 == max_x and y1 == max_y
            if x0 <= x1 and y0 <= y1:
                s = (
                    p[x0 + w : x1 + w + 1, y0 + h : y1 + h + 1]
                    - p[x0 : x1 + 1, y0 + h : y1 + h + 1]
                    - p[x0 + w : x1 + w + 1, y0 : y1 + 1]
                    + p[x0 : x1 + 1, y0 : y1 + 1]
                )
                free = s == 0
                if free.any():
                    dx = np.abs(np.arange(x0, x1 + 1) - px)[:, None]
                    dy = np.abs(np.arange(y0, y1 + 1) - py)[None, :]
                    dist = np.where(free, np.maximum(dx, dy), np.inf)
                    i = int(np.argmin(dist))  # first minimum in C-order: smallest x, then y
                    if dist.flat[i] <= r or covers_all:
                        ix, iy = divmod(i, y1 - y0 + 1)
                        return x0 + ix, y0 + iy
            if covers_all:
                return None
            r *= 2.0

    def find_free_rect(
        self,
        size: tuple[int, int],
        preferred: tuple[float, float],
        order: str = CHEBYSHEV,
        stride: tuple[int, int] = (1, 1),
    ) -> tuple[int, int] | None:
        return next(self.iter_free_rects(size, preferred, order, stride), None)

    def to_pbm(self) -> bytes:
        """Plain (P1) portable bitmap; image rows are grid y, columns grid x."""
        lines = [f"P1\n{self.width} {self.height}"]
        for row in self.occupancy.T:
            lines.append(" ".join("1" if v else "0" for v in row))
        return ("\n".join(lines) + "\n").encode("ascii")


def cells_up(extent: float, cell_size: float) -> int:
    return max(1, math.ceil(extent / cell_size))


def outward_cells(lo: float, hi: float, cell_size: float, limit: int) -> tuple[int, int]:
    """Cell index range [a, b) covering the cm interval [lo, hi], clipped to [0, limit)."""
    a = math.floor(lo / cell_size)
    b = math.ceil(hi / cell_size)
    return max(0, a), min(limit, b)


def mark_interval_rect(grid: CollisionGrid, u0: float, v0: float, u1: float, v1: float) -> None:
    """Mark a cm rectangle on ``grid``, rounded outward and clipped to the grid."""
    a, b = outward_cells(u0, u1, grid.cell_size, grid.width)
    c, d = outward_cells(v0, v1, grid.cell_size, grid.height)
    if a < b and c < d:
        grid.mark_rect((a, c, b - a, d - c))


@dataclass
class SurfaceMaps:
    """Per-anchor face grids: front/left/right span the anchor's height."""

    front: CollisionGrid
    left: CollisionGrid
    right: CollisionGrid
    top: CollisionGrid

    @classmethod
    def for_box(cls, box: Aabb, cell_size: float = 1.0, naive: bool = False) -> "SurfaceMaps":
        L, W, H = box.length, box.width, box.height
        return cls(
            front=CollisionGrid.for_extent(L, H, cell_size, naive),
            left=CollisionGrid.for_extent(W, H, cell_size, naive),
            right=CollisionGrid.for_extent(W, H, cell_size, naive),
            top=CollisionGrid.for_extent(L, W, cell_size, naive),
        )

    def face(self, name: str) -> CollisionGrid:
        if name not in ("front", "left", "right", "top"):
            raise ValueError(f"unknown face {name!r}")
        return getattr(self, name)
