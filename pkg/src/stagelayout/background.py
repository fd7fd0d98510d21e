"""Back-wall allocation for background elements and the generation spec.

The wall is a CollisionGrid indexed ``[x, h]`` (h grows upward). Occlusion
boxes are marked first, rounded outward, so every allocated element is
visible from every seat between the extreme viewers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .collision import CollisionGrid, cells_up, mark_interval_rect
from .errors import NoSpaceError
from .geometry import StageConfig
from .projection import OcclusionBox
from .schema import FORMAT_TAG, BackgroundRequest


@dataclass(frozen=True)
class WallBox:
    label: str
    x0: float
    x1: float
    h0: float
    h1: float


@dataclass(frozen=True)
class Region:
    label: str
    box: tuple[float, float, float, float]  # normalized x0, y0, x1, y1; top-left origin


@dataclass
class BackgroundSpec:
    prompt_text: str
    regions: list[Region] = field(default_factory=list)
    image_size_hint: int = 512

    def to_dict(self, stage_id: str = "") -> dict:
        return {
            "format": FORMAT_TAG,
            "kind": "background",
            "stage_id": stage_id,
            "prompt_text": self.prompt_text,
            "image_size_hint": self.image_size_hint,
            "regions": [{"label": r.label, "box": list(r.box)} for r in self.regions],
        }


def rect_overlap_area(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    """Intersection area of two (x0, x1, h0, h1) rectangles; touching edges give 0."""
    dx = min(a[1], b[1]) - max(a[0], b[0])
    dh = min(a[3], b[3]) - max(a[2], b[2])
    return max(0.0, dx) * max(0.0, dh)


def allocate_background(
    requests: Iterable[BackgroundRequest | tuple[str, float, float]],
    occlusions: Iterable[OcclusionBox],
    cfg: StageConfig,
    cell_size: float = 1.0,
) -> list[WallBox]:
    n = cfg.stage_size
    cells = cells_up(n, cell_size)
    wall = CollisionGrid(cells, cells, cell_size)
    for occ in occlusions:
        mark_interval_rect(wall, occ.wall_x0, occ.wall_h0, occ.wall_x1, occ.wall_h1)
    centre = (n / 2.0 / cell_size, n / 2.0 / cell_size)
    placed = []
    for req in requests:
        label, width, height = (req.label, req.width, req.height) if isinstance(req, BackgroundRequest) else req
        if not (0 < width <= n and 0 < height <= n):
            raise NoSpaceError(f"background request {label!r}: size {width:g}x{height:g} not within (0, {n:g}]", label)
        size = (cells_up(width, cell_size), cells_up(height, cell_size))
        for x, h in wall.iter_free_rects(size, centre):
            x0, h0 = x * cell_size, h * cell_size
            if x0 + width <= n and h0 + height <= n:
                break
        else:
            raise NoSpaceError(f"background request {label!r}: no unoccluded wall area", label)
        wall.mark_rect((x, h, size[0], size[1]))
        placed.append(WallBox(label, x0, x0 + width, h0, h0 + height))
    return placed


def normalize(box: WallBox, n: float) -> tuple[float, float, float, float]:
    return (box.x0 / n, 1.0 - box.h1 / n, box.x1 / n, 1.0 - box.h0 / n)


def denormalize(label: str, box: tuple[float, float, float, float], n: float) -> WallBox:
    u0, v0, u1, v1 = box
    return WallBox(label, u0 * n, u1 * n, (1.0 - v1) * n, (1.0 - v0) * n)


def _fmt_box(box: tuple[float, float, float, float]) -> str:
    return "[" + ", ".join(f"{v:.4f}" for v in box) + "]"


def emit_background_spec(imagery: str, placed: Iterable[WallBox], cfg: StageConfig, image_size_hint: int = 512) -> BackgroundSpec:
    n = cfg.stage_size
    regions = [Region(b.label, normalize(b, n)) for b in placed]
    prompt = imagery
    if regions:
        items = "; ".join(f"{r.label}@{_fmt_box(r.box)}" for r in regions)
        prompt = f"{imagery.rstrip('.')}. Background elements: {items}"
    return BackgroundSpec(prompt, regions, image_size_hint)
