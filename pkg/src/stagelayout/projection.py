"""Back-wall occlusion boxes seen from the front row.

A viewer at V looks through an entity corner P; the sightline hits the
back wall (plane y = B) at parameter t = (B - Vy) / (Py - Vy). The shadow
of a box is the convex hull of its 8 projected corners, so its bounding
rectangle is the min/max over those corners.

For a viewer moving along the segment between the two extreme seats each
projected coordinate is a ratio of affine functions of the seat parameter,
hence monotone; the union over all seats is therefore bounded by the two
extreme shadows.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DegenerateError, SchemaError
from .geometry import Aabb, ProjectionMode, StageConfig
from .schema import FORMAT_TAG

Point3 = tuple[float, float, float]


@dataclass(frozen=True)
class OcclusionBox:
    entity_id: str
    wall_x0: float
    wall_x1: float
    wall_h0: float
    wall_h1: float

    @property
    def area(self) -> float:
        return (self.wall_x1 - self.wall_x0) * (self.wall_h1 - self.wall_h0)

    def contains(self, x: float, h: float, tol: float = 0.0) -> bool:
        return self.wall_x0 - tol <= x <= self.wall_x1 + tol and self.wall_h0 - tol <= h <= self.wall_h1 + tol


def project_point(p: Point3, viewer: Point3, back_wall_y: float) -> tuple[float, float]:
    vx, vy, vz = viewer
    px, py, pz = p
    if py <= vy:
        raise DegenerateError(f"point {p} is not in front of viewer {viewer}")
    t = (back_wall_y - vy) / (py - vy)
    return vx + t * (px - vx), vz + t * (pz - vz)


def _clamp(v: float, n: float) -> float:
    return min(max(v, 0.0), n)


def _raw_shadow(box: Aabb, viewer: Point3, back_wall_y: float) -> tuple[float, float, float, float]:
    pts = [project_point(c, viewer, back_wall_y) for c in box.corners()]
    xs = [p[0] for p in pts]
    hs = [p[1] for p in pts]
    return min(xs), max(xs), min(hs), max(hs)


def _check_depth(box: Aabb, cfg: StageConfig, entity_id: str) -> None:
    if box.y1 > cfg.back_wall_y:
        raise DegenerateError(f"entity extends behind the back wall (y1={box.y1:g})", entity_id)


def _to_box(entity_id: str, x0: float, x1: float, h0: float, h1: float, n: float) -> OcclusionBox:
    return OcclusionBox(entity_id, _clamp(x0, n), _clamp(x1, n), _clamp(h0, n), _clamp(h1, n))


def shadow_from_viewer(box: Aabb, viewer: Point3, cfg: StageConfig, entity_id: str = "") -> OcclusionBox:
    n = cfg.stage_size
    if cfg.projection_mode is ProjectionMode.ORTHOGRAPHIC:
        return _to_box(entity_id, box.x0, box.x1, box.h0, box.h1, n)
    _check_depth(box, cfg, entity_id)
    if box.y0 <= viewer[1]:
        raise DegenerateError("entity not strictly between viewer and wall", entity_id)
    return _to_box(entity_id, *_raw_shadow(box, viewer, cfg.back_wall_y), n)


def occlusion_for_entity(box: Aabb, cfg: StageConfig, entity_id: str = "") -> OcclusionBox:
    """Union of shadows over every seat between the two extreme front-row viewers."""
    n = cfg.stage_size
    if cfg.projection_mode is ProjectionMode.ORTHOGRAPHIC:
        return _to_box(entity_id, box.x0, box.x1, box.h0, box.h1, n)
    _check_depth(box, cfg, entity_id)
    shadows = []
    for viewer in (cfg.audience_left, cfg.audience_right):
        if box.y0 <= viewer[1]:
            raise DegenerateError("entity not strictly between viewer and wall", entity_id)
        shadows.append(_raw_shadow(box, viewer, cfg.back_wall_y))
    (lx0, lx1, lh0, lh1), (rx0, rx1, rh0, rh1) = shadows
    return _to_box(entity_id, min(lx0, rx0), max(lx1, rx1), min(lh0, rh0), max(lh1, rh1), n)


def occlusion_union(layout, cfg: StageConfig) -> list[OcclusionBox]:
    """One OcclusionBox per placed entity, in layout order.

    ``layout`` is anything with ``entities`` whose items expose ``id`` and
    ``box`` (a StageLayout or a parsed LayoutFile).
    """
    return [occlusion_for_entity(e.box, cfg, e.id) for e in layout.entities]


def occlusions_to_dict(stage_id: str, boxes: list[OcclusionBox], cfg: StageConfig) -> dict:
    return {
        "format": FORMAT_TAG,
        "kind": "occlusions",
        "stage_id": stage_id,
        "stage_size": cfg.stage_size,
        "projection_mode": cfg.projection_mode.value,
        "audience_left": list(cfg.audience_left),
        "audience_right": list(cfg.audience_right),
        "boxes": [
            {"entity_id": b.entity_id, "x": [b.wall_x0, b.wall_x1], "h": [b.wall_h0, b.wall_h1]} for b in boxes
        ],
    }


def occlusions_from_dict(doc) -> list[OcclusionBox]:
    if not isinstance(doc, dict) or doc.get("kind") != "occlusions" or not isinstance(doc.get("boxes"), list):
        raise SchemaError("document: not an occlusions file")
    out = []
    for i, b in enumerate(doc["boxes"]):
        try:
            (x0, x1), (h0, h1) = b["x"], b["h"]
            out.append(OcclusionBox(str(b["entity_id"]), float(x0), float(x1), float(h0), float(h1)))
        except (KeyError, TypeError, ValueError):
            raise SchemaError(f"boxes[{i}]: malformed occlusion box") from None
    return out
