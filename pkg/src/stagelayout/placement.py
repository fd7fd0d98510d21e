"""Foreground placement on the multi-level collision map.

Anchors arrive with explicit boxes and are checked (or repaired) first.
Everything else is seated by searching a collision grid: the stage floor
for ``on_floor_near``, an anchor face grid for ``on_surface`` and the
anchor's top grid for ``on_top``. Every candidate is also tested against
all placed boxes in 3D, so hanging objects and floor objects can never
interpenetrate even though they live on different grids.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .collision import CHEBYSHEV, ROW_FIRST, CollisionGrid, SurfaceMaps, cells_up, mark_interval_rect
from .errors import BoundsError, FitError, NoSpaceError, PlacementError
from .geometry import Aabb, StageConfig, in_bounds, intersects
from .schema import EntityKind, EntitySpec, Face, LayoutEntry, LayoutFile, RelationMode, SceneSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlacedEntity:
    spec: EntitySpec
    box: Aabb
    supported_by: str | None = None

    @property
    def id(self) -> str:
        return self.spec.id


@dataclass
class StageLayout:
    stage_id: str
    entities: list[PlacedEntity]
    config: StageConfig

    def boxes(self) -> list[Aabb]:
        return [e.box for e in self.entities]

    def get(self, entity_id: str) -> PlacedEntity:
        for e in self.entities:
            if e.id == entity_id:
                return e
        raise KeyError(entity_id)

    def to_layout_file(self) -> LayoutFile:
        return LayoutFile(
            stage_id=self.stage_id,
            stage_size=self.config.stage_size,
            entities=tuple(
                LayoutEntry(e.id, e.spec.name, e.spec.category, e.spec.kind, e.box, e.supported_by)
                for e in self.entities
            ),
        )


@dataclass
class PlacementOptions:
    cell_size: float = 1.0
    repair: bool = False
    naive_prefix: bool = False


@dataclass
class LayoutState:
    """Mutable placement state for one stage: floor grid, face grids, placed boxes."""

    config: StageConfig
    cell_size: float = 1.0
    naive_prefix: bool = False
    floor: CollisionGrid = field(init=False)
    surfaces: dict[str, SurfaceMaps] = field(init=False, default_factory=dict)
    placed: dict[str, PlacedEntity] = field(init=False, default_factory=dict)

    def __post_init__(self) -> None:
        n = cells_up(self.config.stage_size, self.cell_size)
        self.floor = CollisionGrid(n, n, self.cell_size, self.naive_prefix)

    # -- helpers -------------------------------------------------------------

    def _collides(self, box: Aabb) -> str | None:
        for other in self.placed.values():
            if intersects(box, other.box):
                return other.id
        return None

    def _accept(self, placed: PlacedEntity) -> PlacedEntity:
        self.placed[placed.id] = placed
        return placed

    def _anchor(self, spec: EntitySpec, anchor_id: str | None) -> PlacedEntity:
        if anchor_id is None:
            raise PlacementError("relation needs an anchor_ref", spec.id)
        try:
            anchor = self.placed[anchor_id]
        except KeyError:
            raise PlacementError(f"anchor {anchor_id!r} has not been placed", spec.id) from None
        if anchor_id not in self.surfaces:
            raise PlacementError(f"{anchor_id!r} is not an anchor", spec.id)
        return anchor

    def _mark_floor(self, box: Aabb) -> None:
        mark_interval_rect(self.floor, box.x0, box.y0, box.x1, box.y1)

    def _add_anchor(self, spec: EntitySpec, box: Aabb) -> PlacedEntity:
        self._mark_floor(box)
        self.surfaces[spec.id] = SurfaceMaps.for_box(box, self.cell_size, self.naive_prefix)
        return self._accept(PlacedEntity(spec, box))

    # -- anchors ---------------------------------------------------------------

    def _anchor_violations(self, spec: EntitySpec) -> list[str]:
        box = spec.anchor_box
        n = self.config.stage_size
        problems = []
        for name, val in (("x0", box.x0), ("y0", box.y0), ("h0", box.h0)):
            if val < 0:
                problems.append(f"out of bounds: {name} < 0")
        for name, val in (("x1", box.x1), ("y1", box.y1), ("h1", box.h1)):
            if val > n:
                problems.append(f"out of bounds: {name} > {n:g}")
        other = self._collides(box)
        if other is not None:
            problems.append(f"collides with anchor {other!r}")
        return problems

    def _reseat_anchor(self, spec: EntitySpec) -> Aabb:
        box = spec.anchor_box
        n = self.config.stage_size
        if box.length > n or box.width > n or box.height > n:
            raise PlacementError("anchor larger than the stage", spec.id)
        h0 = min(max(box.h0, 0.0), n - box.height)
        cs = self.cell_size
        size = (cells_up(box.length, cs), cells_up(box.width, cs))
        cx, cy = box.footprint_center
        for x, y in self.floor.iter_free_rects(size, (cx / cs, cy / cs)):
            cand = Aabb(x * cs, y * cs, x * cs + box.length, y * cs + box.width, h0, h0 + box.height)
            if in_bounds(cand, self.config) and self._collides(cand) is None:
                return cand
        raise NoSpaceError("no free floor position to re-seat anchor", spec.id)

    def seat_anchors(self, specs: list[EntitySpec], repair: bool = False) -> list[PlacedEntity]:
        out = []
        failures = []
        for spec in specs:
            if spec.kind is not EntityKind.ANCHOR:
                raise PlacementError(f"{spec.kind.value} passed as anchor", spec.id)
            problems = self._anchor_violations(spec)
            if not problems:
                out.append(self._add_anchor(spec, spec.anchor_box))
            elif repair:
                box = self._reseat_anchor(spec)
                log.info("re-seated anchor %s (%s)", spec.id, "; ".join(problems))
                out.append(self._add_anchor(spec, box))
            else:
                failures.append(f"{spec.id}: {', '.join(problems)}")
                # keep it so later anchors report collisions against it too
                self.placed[spec.id] = PlacedEntity(spec, spec.anchor_box)
        if failures:
            first = failures[0].split(":", 1)[0]
            raise PlacementError("invalid anchors: " + "; ".join(failures), first)
        return out

    # -- placement rules ---------------------------------------------------------

    def place_on_floor_near(self, spec: EntitySpec, anchor_id: str | None) -> PlacedEntity:
        length, width, height = spec.dims
        n = self.config.stage_size
        cs = self.cell_size
        if anchor_id is None:
            preferred = (n / 2.0 / cs, n / 2.0 / cs)
        else:
            cx, cy = self._anchor(spec, anchor_id).box.footprint_center
            preferred = (cx / cs, cy / cs)
        if length > n or width > n or height > n:
            raise NoSpaceError(f"{length:g}x{width:g}x{height:g} does not fit on the stage", spec.id)
        size = (cells_up(length, cs), cells_up(width, cs))
        for x, y in self.floor.iter_free_rects(size, preferred):
            box = Aabb(x * cs, y * cs, x * cs + length, y * cs + width, 0.0, height)
            if in_bounds(box, self.config) and self._collides(box) is None:
                self.floor.mark_rect((x, y, size[0], size[1]))
                return self._accept(PlacedEntity(spec, box))
        raise NoSpaceError("no free floor rectangle", spec.id)

    def _surface_box(self, face: Face, anchor: Aabb, u: float, v: float, spec: EntitySpec) -> Aabb:
        length, width, height = spec.dims
        h0 = anchor.h0 + v
        if face is Face.FRONT:
            return Aabb(anchor.x0 + u, anchor.y0 - width, anchor.x0 + u + length, anchor.y0, h0, h0 + height)
        if face is Face.LEFT:
            return Aabb(anchor.x0 - width, anchor.y0 + u, anchor.x0, anchor.y0 + u + length, h0, h0 + height)
        return Aabb(anchor.x1, anchor.y0 + u, anchor.x1 + width, anchor.y0 + u + length, h0, h0 + height)

    def place_on_surface(self, spec: EntitySpec, anchor_id: str | None) -> PlacedEntity:
        rel = spec.relation
        anchor = self._anchor(spec, anchor_id)
        a = anchor.box
        face = rel.face
        grid = self.surfaces[anchor.id].face(face.value)
        face_len = a.length if face is Face.FRONT else a.width
        length, width, height = spec.dims
        if rel.mount_height > a.height:
            raise BoundsError(
                f"mount_height {rel.mount_height:g} above top of {anchor.id!r} ({a.height:g})", spec.id
            )
        if length > face_len or height > a.height:
            raise FitError(f"{length:g}x{height:g} larger than {face.value} face of {anchor.id!r}", spec.id)
        cs = self.cell_size
        size = (cells_up(length, cs), cells_up(height, cs))
        preferred = (face_len / 2.0 / cs, rel.mount_height / cs)
        for u, v in grid.iter_free_rects(size, preferred, order=ROW_FIRST):
            if u * cs + length > face_len or v * cs + height > a.height:
                continue
            box = self._surface_box(face, a, u * cs, v * cs, spec)
            if in_bounds(box, self.config) and self._collides(box) is None:
                grid.mark_rect((u, v, size[0], size[1]))
                return self._accept(PlacedEntity(spec, box, supported_by=anchor.id))
        raise NoSpaceError(f"no free region on {face.value} face of {anchor.id!r}", spec.id)

    def place_on_top(self, spec: EntitySpec, supporter_id: str | None) -> PlacedEntity:
        sup = self._anchor(spec, supporter_id)
        a = sup.box
        length, width, height = spec.dims
        if length > a.length or width > a.width:
            raise FitError(
                f"footprint {length:g}x{width:g} larger than top of {sup.id!r} ({a.length:g}x{a.width:g})",
                spec.id,
            )
        grid = self.surfaces[sup.id].top
        cs = self.cell_size
        size = (cells_up(length, cs), cells_up(width, cs))
        preferred = (a.length / 2.0 / cs, a.width / 2.0 / cs)

        def candidates():
            # edge-aligned lattice first so identical items tile the top without slivers
            yield from grid.iter_free_rects(size, preferred, stride=size)
            yield from grid.iter_free_rects(size, preferred)

        for u, v in candidates():
            if u * cs + length > a.length or v * cs + width > a.width:
                continue
            box = Aabb(a.x0 + u * cs, a.y0 + v * cs, a.x0 + u * cs + length, a.y0 + v * cs + width, a.h1, a.h1 + height)
            if in_bounds(box, self.config) and self._collides(box) is None:
                grid.mark_rect((u, v, size[0], size[1]))
                return self._accept(PlacedEntity(spec, box, supported_by=sup.id))
        raise NoSpaceError(f"no free area on top of {sup.id!r}", spec.id)

    def place(self, spec: EntitySpec) -> PlacedEntity:
        mode = spec.relation.mode
        if mode is RelationMode.ON_FLOOR_NEAR:
            return self.place_on_floor_near(spec, spec.anchor_ref)
        if mode is RelationMode.ON_SURFACE:
            return self.place_on_surface(spec, spec.anchor_ref)
        return self.place_on_top(spec, spec.anchor_ref)

    def layout(self, stage_id: str) -> StageLayout:
        return StageLayout(stage_id, list(self.placed.values()), self.config)


def validate_anchors(
    specs: list[EntitySpec], cfg: StageConfig, repair: bool = False, cell_size: float = 1.0
) -> list[PlacedEntity]:
    """Check anchors are inside the stage and mutually disjoint.

    Strict mode raises PlacementError listing every offender; repair mode
    moves offenders to the nearest free floor spot, keeping their size.
    """
    return LayoutState(cfg, cell_size).seat_anchors(specs, repair)


def place_scene(spec: SceneSpec, cfg: StageConfig, options: PlacementOptions | None = None, stage_id: str | None = None) -> StageLayout:
    options = options or PlacementOptions()
    state = LayoutState(cfg, options.cell_size, options.naive_prefix)
    anchors = [e for e in spec.entities if e.kind is EntityKind.ANCHOR]
    state.seat_anchors(anchors, repair=options.repair)
    for kind in (EntityKind.NON_ANCHOR, EntityKind.ORNAMENT):
        for e in spec.entities:
            if e.kind is kind:
                state.place(e)
    return state.layout(stage_id if stage_id is not None else spec.title)
