"""Readers, writers and validators for the ``stagelayout/1`` file formats.

Three document kinds share one JSON envelope (``format`` + ``kind``):

* ``scene``        - analysed scene specification (input to placement)
* ``ground_truth`` - annotated dataset layout, one box per entity
* ``layout``       - engine output; ground-truth fields plus id/kind/supported_by

Field-by-field grammar lives in ``docs/formats.md``.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .errors import FormatSyntaxError, SchemaError
from .geometry import Aabb

FORMAT_TAG = "stagelayout/1"
DATASET_MIN_ENTITIES = 1
DATASET_MAX_ENTITIES = 21


class DatasetRangeWarning(UserWarning):
    """Value is structurally valid but outside the range seen in the dataset."""


class EntityKind(str, Enum):
    ANCHOR = "anchor"
    NON_ANCHOR = "non_anchor"
    ORNAMENT = "ornament"


class Facing(str, Enum):
    TOWARD_AUDIENCE = "toward_audience"
    AWAY = "away"
    LEFT = "left"
    RIGHT = "right"


class RelationMode(str, Enum):
    ON_FLOOR_NEAR = "on_floor_near"
    ON_SURFACE = "on_surface"
    ON_TOP = "on_top"


class Face(str, Enum):
    FRONT = "front"
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class PlacementRelation:
    mode: RelationMode
    face: Face | None = None
    mount_height: float | None = None


@dataclass(frozen=True)
class EntitySpec:
    id: str
    name: str
    category: str
    kind: EntityKind
    description: str = ""
    dims: tuple[float, float, float] | None = None
    anchor_box: Aabb | None = None
    relation: PlacementRelation | None = None
    anchor_ref: str | None = None
    facing: Facing = Facing.TOWARD_AUDIENCE


@dataclass(frozen=True)
class BackgroundRequest:
    label: str
    width: float
    height: float


@dataclass(frozen=True)
class SceneSpec:
    title: str
    imagery: str
    entities: tuple[EntitySpec, ...]
    background_requests: tuple[BackgroundRequest, ...] = ()

    def entity(self, entity_id: str) -> EntitySpec:
        for e in self.entities:
            if e.id == entity_id:
                return e
        raise KeyError(entity_id)


@dataclass(frozen=True)
class GroundTruthEntity:
    category: str
    box: Aabb


@dataclass(frozen=True)
class GroundTruthLayout:
    stage_id: str
    entities: tuple[GroundTruthEntity, ...]


@dataclass(frozen=True)
class LayoutEntry:
    id: str
    name: str
    category: str
    kind: EntityKind
    box: Aabb
    supported_by: str | None = None


@dataclass(frozen=True)
class LayoutFile:
    """Serialized engine output."""

    stage_id: str
    stage_size: float
    entities: tuple[LayoutEntry, ...]

    def boxes(self) -> list[Aabb]:
        return [e.box for e in self.entities]


# -- low-level helpers -------------------------------------------------------


def load_json(data: bytes | str) -> Any:
    """Decode UTF-8 JSON, turning every failure into FormatSyntaxError with a position."""
    if isinstance(data, (bytes, bytearray)):
        try:
            text = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            before = bytes(data)[: exc.start]
            line = before.count(b"\n") + 1
            col = exc.start - (before.rfind(b"\n") + 1) + 1
            raise FormatSyntaxError(f"invalid utf-8: {exc.reason}", line, col) from None
    else:
        text = data
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    except RecursionError:
        raise FormatSyntaxError("nesting too deep", 1, 1) from None


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _where(ctx: str) -> str:
    return f"{ctx}: " if ctx else ""


def _obj(value: Any, ctx: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"{_where(ctx)}expected an object, got {type(value).__name__}")
    missing = sorted(required - value.keys())
    if missing:
        raise SchemaError(f"{_where(ctx)}missing field(s) {', '.join(missing)}")
    unknown = sorted(value.keys() - required - optional)
    if unknown:
        raise SchemaError(f"{_where(ctx)}unknown field(s) {', '.join(unknown)}")
    return value


def _str(value: Any, ctx: str, nonempty: bool = False) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"{ctx}: expected a string")
    if nonempty and not value:
        raise SchemaError(f"{ctx}: must not be empty")
    return value


def _num(value: Any, ctx: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{ctx}: expected a number")
    try:
        out = float(value)
    except OverflowError:
        raise SchemaError(f"{ctx}: number out of range") from None
    if not math.isfinite(out):
        raise SchemaError(f"{ctx}: number must be finite")
    return out


def _pair(value: Any, ctx: str) -> tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise SchemaError(f"{ctx}: expected a list of two numbers")
    return _num(value[0], ctx), _num(value[1], ctx)


def _enum(cls: type[Enum], value: Any, ctx: str):
    try:
        return cls(value)
    except (ValueError, TypeError):
        allowed = ", ".join(m.value for m in cls)
        raise SchemaError(f"{ctx}: {value!r} is not one of {allowed}") from None


def _envelope(doc: Any, kind: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    doc = _obj(doc, "document", required | {"format", "kind"}, optional)
    if doc["format"] != FORMAT_TAG:
        raise SchemaError(f"document: format must be {FORMAT_TAG!r}, got {doc['format']!r}")
    if doc["kind"] != kind:
        raise SchemaError(f"document: kind must be {kind!r}, got {doc['kind']!r}")
    return doc


def _corner_box(raw: dict, ctx: str) -> Aabb:
    x0, y0 = _pair(raw["left"], f"{ctx} left")
    x1, y1 = _pair(raw["right"], f"{ctx} right")
    h0, h1 = _pair(raw["h"], f"{ctx} h")
    if not x0 < x1:
        raise SchemaError(f"{ctx}: x0 < x1 violated ({x0} >= {x1})")
    if not y0 < y1:
        raise SchemaError(f"{ctx}: y0 < y1 violated ({y0} >= {y1})")
    if not h0 < h1:
        raise SchemaError(f"{ctx}: h0 < h1 violated ({h0} >= {h1})")
    return Aabb(x0, y0, x1, y1, h0, h1)


def _box_fields(box: Aabb) -> dict:
    return {"left": [box.x0, box.y0], "right": [box.x1, box.y1], "h": [box.h0, box.h1]}


# -- scene spec --------------------------------------------------------------

_ENTITY_REQUIRED = {"id", "name", "category", "kind"}
_ENTITY_OPTIONAL = {"description", "dims", "anchor_box", "relation", "anchor_ref", "facing"}


def _parse_relation(raw: Any, ctx: str) -> PlacementRelation:
    raw = _obj(raw, f"{ctx} relation", {"mode"}, {"face", "mount_height"})
    mode = _enum(RelationMode, raw["mode"], f"{ctx} relation.mode")
    face = raw.get("face")
    mount = raw.get("mount_height")
    if mode is RelationMode.ON_SURFACE:
        if face is None:
            raise SchemaError(f"{ctx}: face required for on_surface relation")
        if mount is None:
            raise SchemaError(f"{ctx}: mount_height required for on_surface relation")
        face = _enum(Face, face, f"{ctx} relation.face")
        mount = _num(mount, f"{ctx} relation.mount_height")
        if mount < 0:
            raise SchemaError(f"{ctx}: mount_height must be >= 0")
    else:
        if face is not None or mount is not None:
            raise SchemaError(f"{ctx}: face/mount_height only allowed for on_surface relation")
    return PlacementRelation(mode, face, mount)


def _parse_entity(raw: Any, index: int) -> EntitySpec:
    ctx = f"entity[{index}]"
    if isinstance(raw, dict) and isinstance(raw.get("id"), str):
        ctx = f"entity {raw['id']!r}"
    raw = _obj(raw, ctx, _ENTITY_REQUIRED, _ENTITY_OPTIONAL)
    eid = _str(raw["id"], f"{ctx} id", nonempty=True)
    kind = _enum(EntityKind, raw["kind"], f"{ctx} kind")
    dims = anchor_box = relation = None
    if kind is EntityKind.ANCHOR:
        if "anchor_box" not in raw:
            raise SchemaError(f"{ctx}: anchor_box required for anchor")
        if "dims" in raw or "relation" in raw:
            raise SchemaError(f"{ctx}: dims/relation not allowed for anchor")
        if "anchor_ref" in raw:
            raise SchemaError(f"{ctx}: anchor_ref not allowed for anchor")
        anchor_box = _corner_box(_obj(raw["anchor_box"], f"{ctx} anchor_box", {"left", "right", "h"}), ctx)
    else:
        if "dims" not in raw:
            raise SchemaError(f"{ctx}: dims required for {kind.value}")
        if "anchor_box" in raw:
            raise SchemaError(f"{ctx}: anchor_box only allowed for anchor")
        d = raw["dims"]
        if not isinstance(d, list) or len(d) != 3:
            raise SchemaError(f"{ctx}: dims must be [length, width, height]")
        dims = tuple(_num(v, f"{ctx} dims") for v in d)
        if not all(v > 0 for v in dims):
            raise SchemaError(f"{ctx}: dims must all be > 0")
        if "relation" not in raw:
            raise SchemaError(f"{ctx}: relation required for {kind.value}")
        relation = _parse_relation(raw["relation"], ctx)
    anchor_ref = raw.get("anchor_ref")
    if anchor_ref is not None:
        anchor_ref = _str(anchor_ref, f"{ctx} anchor_ref", nonempty=True)
    return EntitySpec(
        id=eid,
        name=_str(raw["name"], f"{ctx} name"),
        category=_str(raw["category"], f"{ctx} category"),
        kind=kind,
        description=_str(raw.get("description", ""), f"{ctx} description"),
        dims=dims,
        anchor_box=anchor_box,
        relation=relation,
        anchor_ref=anchor_ref,
        facing=_enum(Facing, raw.get("facing", Facing.TOWARD_AUDIENCE.value), f"{ctx} facing"),
    )


def _check_references(entities: tuple[EntitySpec, ...]) -> None:
    by_id: dict[str, EntitySpec] = {}
    for e in entities:
        if e.id in by_id:
            raise SchemaError(f"entity {e.id!r}: duplicate id")
        by_id[e.id] = e
    for e in entities:
        if e.kind is EntityKind.NON_ANCHOR and e.anchor_ref is None:
            raise SchemaError(f"entity {e.id!r}: anchor_ref required for non_anchor")
        if e.anchor_ref is not None:
            target = by_id.get(e.anchor_ref)
            if target is None:
                raise SchemaError(f"entity {e.id!r}: anchor_ref {e.anchor_ref!r} names no entity")
            if target.kind is not EntityKind.ANCHOR:
                raise SchemaError(
                    f"entity {e.id!r}: anchor_ref {e.anchor_ref!r} is a {target.kind.value}, not an anchor"
                )
        if (
            e.relation is not None
            and e.relation.mode is not RelationMode.ON_FLOOR_NEAR
            and e.anchor_ref is None
        ):
            raise SchemaError(f"entity {e.id!r}: anchor_ref required for {e.relation.mode.value}")


def scene_spec_from_dict(doc: Any) -> SceneSpec:
    doc = _envelope(doc, "scene", {"title", "imagery", "entities"}, {"background_requests"})
    raw_entities = doc["entities"]
    if not isinstance(raw_entities, list):
        raise SchemaError("document: entities must be a list")
    if not raw_entities:
        raise SchemaError("document: at least one entity required")
    entities = tuple(_parse_entity(raw, i) for i, raw in enumerate(raw_entities))
    _check_references(entities)
    raw_bg = doc.get("background_requests", [])
    if not isinstance(raw_bg, list):
        raise SchemaError("document: background_requests must be a list")
    requests = []
    for i, r in enumerate(raw_bg):
        ctx = f"background_requests[{i}]"
        r = _obj(r, ctx, {"label", "width", "height"})
        req = BackgroundRequest(_str(r["label"], f"{ctx} label"), _num(r["width"], ctx), _num(r["height"], ctx))
        if req.width <= 0 or req.height <= 0:
            raise SchemaError(f"{ctx}: width and height must be > 0")
        requests.append(req)
    return SceneSpec(
        title=_str(doc["title"], "title"),
        imagery=_str(doc["imagery"], "imagery"),
        entities=entities,
        background_requests=tuple(requests),
    )


def parse_scene_spec(data: bytes | str) -> SceneSpec:
    return scene_spec_from_dict(load_json(data))


def _entity_to_dict(e: EntitySpec) -> dict:
    out: dict[str, Any] = {
        "id": e.id,
        "name": e.name,
        "category": e.category,
        "kind": e.kind.value,
        "description": e.description,
    }
    if e.anchor_box is not None:
        out["anchor_box"] = _box_fields(e.anchor_box)
    if e.dims is not None:
        out["dims"] = list(e.dims)
    if e.relation is not None:
        rel: dict[str, Any] = {"mode": e.relation.mode.value}
        if e.relation.face is not None:
            rel["face"] = e.relation.face.value
        if e.relation.mount_height is not None:
            rel["mount_height"] = e.relation.mount_height
        out["relation"] = rel
    if e.anchor_ref is not None:
        out["anchor_ref"] = e.anchor_ref
    out["facing"] = e.facing.value
    return out


def scene_spec_to_dict(spec: SceneSpec) -> dict:
    return {
        "format": FORMAT_TAG,
        "kind": "scene",
        "title": spec.title,
        "imagery": spec.imagery,
        "entities": [_entity_to_dict(e) for e in spec.entities],
        "background_requests": [
            {"label": r.label, "width": r.width, "height": r.height} for r in spec.background_requests
        ],
    }


def serialize_scene_spec(spec: SceneSpec) -> str:
    return dump_json(scene_spec_to_dict(spec))


# -- ground truth ------------------------------------------------------------


def _ground_truth_checked(doc: Any) -> tuple[GroundTruthLayout, list[str]]:
    doc = _envelope(doc, "ground_truth", {"stage_id", "entities"})
    stage_id = _str(doc["stage_id"], "stage_id")
    raw = doc["entities"]
    if not isinstance(raw, list):
        raise SchemaError("document: entities must be a list")
    if not raw:
        raise SchemaError(f"stage {stage_id!r}: ground truth has no entities")
    entities = []
    for i, r in enumerate(raw):
        ctx = f"entity[{i}]"
        r = _obj(r, ctx, {"category", "left", "right", "h"})
        entities.append(GroundTruthEntity(_str(r["category"], f"{ctx} category"), _corner_box(r, ctx)))
    notes = []
    n = len(entities)
    if not DATASET_MIN_ENTITIES <= n <= DATASET_MAX_ENTITIES:
        notes.append(
            f"stage {stage_id!r}: {n} entities is outside dataset range "
            f"{DATASET_MIN_ENTITIES}–{DATASET_MAX_ENTITIES}"
        )
    return GroundTruthLayout(stage_id, tuple(entities)), notes


def ground_truth_from_dict(doc: Any) -> GroundTruthLayout:
    """Validate a ground-truth document; dataset-range issues become DatasetRangeWarning."""
    gt, notes = _ground_truth_checked(doc)
    for note in notes:
        warnings.warn(note, DatasetRangeWarning, stacklevel=3)
    return gt


def parse_ground_truth(data: bytes | str) -> GroundTruthLayout:
    return ground_truth_from_dict(load_json(data))


def ground_truth_to_dict(gt: GroundTruthLayout) -> dict:
    return {
        "format": FORMAT_TAG,
        "kind": "ground_truth",
        "stage_id": gt.stage_id,
        "entities": [{"category": e.category, **_box_fields(e.box)} for e in gt.entities],
    }


def serialize_ground_truth(gt: GroundTruthLayout) -> str:
    return dump_json(ground_truth_to_dict(gt))


# -- engine layout -----------------------------------------------------------


def layout_from_dict(doc: Any) -> LayoutFile:
    doc = _envelope(doc, "layout", {"stage_id", "stage_size", "entities"})
    stage_size = _num(doc["stage_size"], "stage_size")
    if stage_size <= 0:
        raise SchemaError("stage_size must be > 0")
    raw = doc["entities"]
    if not isinstance(raw, list):
        raise SchemaError("document: entities must be a list")
    entries = []
    seen: set[str] = set()
    for i, r in enumerate(raw):
        ctx = f"entity[{i}]"
        r = _obj(r, ctx, {"id", "name", "category", "kind", "left", "right", "h"}, {"supported_by"})
        eid = _str(r["id"], f"{ctx} id", nonempty=True)
        if eid in seen:
            raise SchemaError(f"entity {eid!r}: duplicate id")
        seen.add(eid)
        sup = r.get("supported_by")
        if sup is not None:
            sup = _str(sup, f"{ctx} supported_by")
        entries.append(
            LayoutEntry(
                id=eid,
                name=_str(r["name"], f"{ctx} name"),
                category=_str(r["category"], f"{ctx} category"),
                kind=_enum(EntityKind, r["kind"], f"{ctx} kind"),
                box=_corner_box(r, f"entity {eid!r}"),
                supported_by=sup,
            )
        )
    return LayoutFile(_str(doc["stage_id"], "stage_id"), stage_size, tuple(entries))


def parse_layout(data: bytes | str) -> LayoutFile:
    return layout_from_dict(load_json(data))


def layout_to_dict(layout: LayoutFile) -> dict:
    ents = []
    for e in layout.entities:
        d: dict[str, Any] = {"id": e.id, "name": e.name, "category": e.category, "kind": e.kind.value}
        d.update(_box_fields(e.box))
        d["supported_by"] = e.supported_by
        ents.append(d)
    return {
        "format": FORMAT_TAG,
        "kind": "layout",
        "stage_id": layout.stage_id,
        "stage_size": layout.stage_size,
        "entities": ents,
    }


def serialize_layout(layout: LayoutFile) -> str:
    return dump_json(layout_to_dict(layout))


def parse_boxes_any(data: bytes | str) -> tuple[str, list[tuple[str, Aabb]]]:
    """Read a ground-truth or layout file as ``(stage_id, [(category, box)])``."""
    doc = load_json(data)
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "layout":
        lay = layout_from_dict(doc)
        return lay.stage_id, [(e.category, e.box) for e in lay.entities]
    gt = ground_truth_from_dict(doc)
    return gt.stage_id, [(e.category, e.box) for e in gt.entities]


# -- corpus validation -------------------------------------------------------


@dataclass
class FileResult:
    path: str
    status: str  # "pass" | "warn" | "fail"
    messages: list[str] = field(default_factory=list)


@dataclass
class ValidationReport:
    results: list[FileResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.status != "fail" for r in self.results)

    def counts(self) -> dict[str, int]:
        out = {"pass": 0, "warn": 0, "fail": 0}
        for r in self.results:
            out[r.status] += 1
        return out

    def format_text(self) -> str:
        lines = []
        for r in self.results:
            msg = "; ".join(r.messages)
            lines.append(f"{r.status.upper():4}  {r.path}" + (f"  {msg}" if msg else ""))
        c = self.counts()
        lines.append(f"{len(self.results)} file(s): {c['pass']} pass, {c['warn']} warn, {c['fail']} fail")
        return "\n".join(lines) + "\n"


def _no_notes(parser):
    return lambda doc: (parser(doc), [])


# each returns (document, dataset-range notes); no warnings machinery so files can be checked in threads
_CHECKERS = {
    "scene": _no_notes(scene_spec_from_dict),
    "ground_truth": _ground_truth_checked,
    "layout": _no_notes(layout_from_dict),
}


def validate_file(path: Path) -> FileResult:
    name = path.name
    try:
        data = path.read_bytes()
    except OSError as exc:
        return FileResult(name, "fail", [f"io error: {exc.strerror or exc}"])
    try:
        doc = load_json(data)
        kind = doc.get("kind") if isinstance(doc, dict) else None
        checker = _CHECKERS.get(kind) if isinstance(kind, str) else None
        if checker is None:
            raise SchemaError(f"document: unknown kind {kind!r}")
        _, notes = checker(doc)
    except (FormatSyntaxError, SchemaError) as exc:
        return FileResult(name, "fail", [str(exc)])
    return FileResult(name, "warn" if notes else "pass", notes)


def validate_corpus(directory: str | Path, workers: int = 4) -> ValidationReport:
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(str(directory))
    files = sorted(p for p in directory.iterdir() if p.suffix == ".json")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(validate_file, files))
    return ValidationReport(results)
