"""Exact axis-aligned box kernel.

Coordinates are centimetres. ``x`` runs across the stage (audience left to
right), ``y`` runs from the downstage edge (y=0) to the back wall (y=N) and
``h`` is height above the floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

CM3_PER_M3 = 1_000_000.0


@dataclass(frozen=True)
class Aabb:
    x0: float
    y0: float
    x1: float
    y1: float
    h0: float
    h1: float

    def __post_init__(self) -> None:
        for name in ("x0", "y0", "x1", "y1", "h0", "h1"):
            object.__setattr__(self, name, float(getattr(self, name)))
        vals = (self.x0, self.y0, self.x1, self.y1, self.h0, self.h1)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite coordinate in {vals}")
        if not (self.x0 < self.x1):
            raise ValueError(f"x0 < x1 violated ({self.x0} >= {self.x1})")
        if not (self.y0 < self.y1):
            raise ValueError(f"y0 < y1 violated ({self.y0} >= {self.y1})")
        if not (self.h0 < self.h1):
            raise ValueError(f"h0 < h1 violated ({self.h0} >= {self.h1})")

    @classmethod
    def from_extent(cls, x: float, y: float, h: float, length: float, width: float, height: float) -> "Aabb":
        return cls(x, y, x + length, y + width, h, h + height)

    @property
    def length(self) -> float:
        return self.x1 - self.x0

    @property
    def width(self) -> float:
        return self.y1 - self.y0

    @property
    def height(self) -> float:
        return self.h1 - self.h0

    @property
    def volume(self) -> float:
        return self.length * self.width * self.height

    @property
    def footprint_center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1, self.h0, self.h1)

    def corners(self) -> list[tuple[float, float, float]]:
        return [(x, y, h) for x in (self.x0, self.x1) for y in (self.y0, self.y1) for h in (self.h0, self.h1)]


class ProjectionMode(str, Enum):
    PERSPECTIVE = "perspective"
    ORTHOGRAPHIC = "orthographic"


@dataclass(frozen=True)
class StageConfig:
    """Stage extent and audience geometry.

    ``audience_left`` / ``audience_right`` are the extreme front-row eye
    positions; their y must be negative (in front of the stage).
    """

    stage_size: float = 1000.0
    back_wall_y: float | None = None
    audience_left: tuple[float, float, float] = (-100.0, -500.0, 120.0)
    audience_right: tuple[float, float, float] = (1100.0, -500.0, 120.0)
    eye_height: float = 120.0
    projection_mode: ProjectionMode = ProjectionMode.PERSPECTIVE

    def __post_init__(self) -> None:
        object.__setattr__(self, "stage_size", float(self.stage_size))
        if not (math.isfinite(self.stage_size) and self.stage_size > 0):
            raise ValueError(f"stage_size must be positive, got {self.stage_size}")
        if self.back_wall_y is None:
            object.__setattr__(self, "back_wall_y", self.stage_size)
        object.__setattr__(self, "back_wall_y", float(self.back_wall_y))
        object.__setattr__(self, "audience_left", tuple(float(v) for v in self.audience_left))
        object.__setattr__(self, "audience_right", tuple(float(v) for v in self.audience_right))
        object.__setattr__(self, "projection_mode", ProjectionMode(self.projection_mode))
        for name in ("audience_left", "audience_right"):
            pt = getattr(self, name)
            if len(pt) != 3:
                raise ValueError(f"{name} must be a 3D point")
            if not pt[1] < 0:
                raise ValueError(f"{name} must have y < 0 (in front of the stage), got {pt[1]}")
        if self.audience_left[0] > self.audience_right[0]:
            raise ValueError("audience_left.x must not exceed audience_right.x")

    @property
    def N(self) -> float:
        return self.stage_size

    def stage_box(self) -> Aabb:
        n = self.stage_size
        return Aabb(0.0, 0.0, n, n, 0.0, n)


def _overlap(a0: float, a1: float, b0: float, b1: float) -> float:
    return max(0.0, min(a1, b1) - max(a0, b0))


def intersection_volume(a: Aabb, b: Aabb) -> float:
    """Overlap volume in cm^3; touching faces give 0."""
    dx = _overlap(a.x0, a.x1, b.x0, b.x1)
    if dx == 0.0:
        return 0.0
    dy = _overlap(a.y0, a.y1, b.y0, b.y1)
    if dy == 0.0:
        return 0.0
    return dx * dy * _overlap(a.h0, a.h1, b.h0, b.h1)


def intersects(a: Aabb, b: Aabb) -> bool:
    return intersection_volume(a, b) > 0.0


def intersection_box(a: Aabb, b: Aabb) -> Aabb | None:
    x0, x1 = max(a.x0, b.x0), min(a.x1, b.x1)
    y0, y1 = max(a.y0, b.y0), min(a.y1, b.y1)
    h0, h1 = max(a.h0, b.h0), min(a.h1, b.h1)
    if x0 < x1 and y0 < y1 and h0 < h1:
        return Aabb(x0, y0, x1, y1, h0, h1)
    return None


def clip_to_stage(a: Aabb, cfg: StageConfig) -> Aabb | None:
    return intersection_box(a, cfg.stage_box())


def out_of_bound_volume(a: Aabb, cfg: StageConfig) -> float:
    inside = clip_to_stage(a, cfg)
    if inside is None:
        return a.volume
    if inside == a:
        return 0.0
    return a.volume - inside.volume


def in_bounds(a: Aabb, cfg: StageConfig) -> bool:
    n = cfg.stage_size
    return a.x0 >= 0 and a.y0 >= 0 and a.h0 >= 0 and a.x1 <= n and a.y1 <= n and a.h1 <= n


def _membership(boxes: Sequence[Aabb], xs: np.ndarray, ys: np.ndarray, hs: np.ndarray) -> np.ndarray:
    """Boolean cell grid over compressed coordinates: cell covered by some box."""
    grid = np.zeros((len(xs) - 1, len(ys) - 1, len(hs) - 1), dtype=bool)
    for b in boxes:
        i0, i1 = np.searchsorted(xs, [b.x0, b.x1])
        j0, j1 = np.searchsorted(ys, [b.y0, b.y1])
        k0, k1 = np.searchsorted(hs, [b.h0, b.h1])
        grid[i0:i1, j0:j1, k0:k1] = True
    return grid


def union_volume(boxes: Iterable[Aabb]) -> float:
    boxes = list(boxes)
    if not boxes:
        return 0.0
    return union_intersection_volume(boxes, boxes)


def union_intersection_volume(set_a: Iterable[Aabb], set_b: Iterable[Aabb]) -> float:
    """Exact volume of (union of set_a) intersected with (union of set_b).

    Coordinate compression: every box boundary on each axis splits space
    into cells that are either fully inside or fully outside each box.
    """
    set_a, set_b = list(set_a), list(set_b)
    if not set_a or not set_b:
        return 0.0
    both = set_a + set_b
    xs = np.unique([v for b in both for v in (b.x0, b.x1)])
    ys = np.unique([v for b in both for v in (b.y0, b.y1)])
    hs = np.unique([v for b in both for v in (b.h0, b.h1)])
    covered = _membership(set_a, xs, ys, hs) & _membership(set_b, xs, ys, hs)
    if not covered.any():
        return 0.0
    cell = np.diff(xs)[:, None, None] * np.diff(ys)[None, :, None] * np.diff(hs)[None, None, :]
    return float(math.fsum(cell[covered].tolist()))


def to_m3(cm3: float) -> float:
    return cm3 / CM3_PER_M3


__all__ = [
    "Aabb",
    "CM3_PER_M3",
    "ProjectionMode",
    "StageConfig",
    "clip_to_stage",
    "in_bounds",
    "intersection_box",
    "intersection_volume",
    "intersects",
    "out_of_bound_volume",
    "to_m3",
    "union_intersection_volume",
    "union_volume",
]
