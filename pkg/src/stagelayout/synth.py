"""Seeded synthetic scenes and layouts for fixtures and experiments.

Uses :class:`random.Random`, whose output for a given integer seed is
stable across platforms and Python versions.
"""

from __future__ import annotations

import random

from .errors import PlacementError
from .geometry import Aabb
from .schema import (
    BackgroundRequest,
    EntityKind,
    EntitySpec,
    Face,
    GroundTruthEntity,
    GroundTruthLayout,
    PlacementRelation,
    RelationMode,
    SceneSpec,
)

CATEGORIES = [
    "table", "chair", "sofa", "bed", "wardrobe", "desk", "bench", "lamp", "painting", "mirror",
    "clock", "vase", "teacup", "book", "candle", "plant", "rug", "stool", "cabinet", "piano",
    "window", "door", "curtain", "barrel", "crate", "trunk", "statue", "fireplace", "shelf", "bottle",
]

ANCHOR_KINDS = [("table", (120, 260), (60, 120), (60, 90)), ("wall", (200, 400), (20, 50), (180, 300)),
                ("wardrobe", (80, 160), (40, 70), (150, 220)), ("bed", (140, 220), (90, 180), (40, 70)),
                ("desk", (100, 180), (50, 90), (70, 85))]


def _r(rng: random.Random, lo: float, hi: float) -> float:
    return float(rng.randint(int(lo), int(hi)))


def _disjoint(box: Aabb, others: list[Aabb], margin: float) -> bool:
    for o in others:
        if not (box.x1 + margin <= o.x0 or o.x1 + margin <= box.x0 or box.y1 + margin <= o.y0 or o.y1 + margin <= box.y0):
            return False
    return True


def random_scene(seed: int, n_entities: int | None = None, stage_size: float = 1000.0,
                 max_draws: int = 50) -> SceneSpec:
    """A feasible scene: disjoint in-bounds anchors plus dependents and ornaments.

    Draws continue from one seeded stream until a scene places without
    error, so the result is a pure function of the arguments.
    """
    from .geometry import StageConfig
    from .placement import place_scene

    rng = random.Random(seed)
    cfg = StageConfig(stage_size=stage_size)
    for _ in range(max_draws):
        spec = _draw_scene(rng, seed, n_entities, stage_size)
        try:
            place_scene(spec, cfg)
        except PlacementError:
            continue
        return spec
    raise PlacementError(f"no feasible scene for seed {seed} in {max_draws} draws")


def _draw_scene(rng: random.Random, seed: int, n_entities: int | None, stage_size: float) -> SceneSpec:
    n = stage_size
    total = n_entities if n_entities is not None else rng.randint(3, 22)
    n_anchor = min(total, rng.randint(1, 4))
    entities: list[EntitySpec] = []
    anchors: list[tuple[EntitySpec, str]] = []
    boxes: list[Aabb] = []
    attempts = 0
    while len(anchors) < n_anchor and attempts < 500:
        attempts += 1
        kind, lr, wr, hr = rng.choice(ANCHOR_KINDS)
        L, W, H = _r(rng, *lr), _r(rng, *wr), _r(rng, *hr)
        x0 = _r(rng, 80, n - 80 - L)
        y0 = _r(rng, 120, n - W)
        box = Aabb(x0, y0, x0 + L, y0 + W, 0.0, H)
        if not _disjoint(box, boxes, 100.0):
            continue
        boxes.append(box)
        aid = f"a{len(anchors)}_{kind}"
        spec = EntitySpec(aid, kind, kind, EntityKind.ANCHOR, f"a {kind}", anchor_box=box)
        entities.append(spec)
        anchors.append((spec, kind))

    cat_pool = [c for c in CATEGORIES]
    rng.shuffle(cat_pool)
    k = 0
    while len(entities) < total:
        cat = cat_pool[k % len(cat_pool)]
        k += 1
        eid = f"e{k}_{cat}"
        is_ornament = rng.random() < 0.3
        if is_ornament:
            mode = RelationMode.ON_FLOOR_NEAR
            dims = (_r(rng, 20, 80), _r(rng, 20, 80), _r(rng, 20, 150))
            entities.append(EntitySpec(eid, cat, cat, EntityKind.ORNAMENT, f"decorative {cat}", dims=dims,
                                       relation=PlacementRelation(mode)))
            continue
        anchor, akind = rng.choice(anchors)
        a = anchor.anchor_box
        roll = rng.random()
        if roll < 0.5:
            dims = (_r(rng, 30, 80), _r(rng, 30, 80), _r(rng, 40, 120))
            rel = PlacementRelation(RelationMode.ON_FLOOR_NEAR)
        elif roll < 0.75 and a.height >= 80:
            face = rng.choice([Face.FRONT, Face.FRONT, Face.LEFT, Face.RIGHT])
            face_len = a.length if face is Face.FRONT else a.width
            height = _r(rng, 15, min(60, a.height / 2))
            length = _r(rng, 10, max(10, min(80, face_len / 2)))
            dims = (length, _r(rng, 2, 8), height)
            mount = _r(rng, height / 2, a.height - height / 2)
            rel = PlacementRelation(RelationMode.ON_SURFACE, face, mount)
        else:
            dims = (_r(rng, 5, max(5, a.length / 4)), _r(rng, 5, max(5, a.width / 4)), _r(rng, 5, 40))
            rel = PlacementRelation(RelationMode.ON_TOP)
        entities.append(EntitySpec(eid, cat, cat, EntityKind.NON_ANCHOR, f"{cat} by the {akind}", dims=dims,
                                   relation=rel, anchor_ref=anchor.id))

    requests = tuple(
        BackgroundRequest(label, _r(rng, 80, 220), _r(rng, 60, 160))
        for label in rng.sample(["moon", "window", "tree", "banner", "cloud", "mountain"], rng.randint(0, 3))
    )
    return SceneSpec(
        title=f"synthetic stage {seed}",
        imagery=rng.choice(["a quiet night of longing", "a bright festive morning", "a storm gathering over the hills"]),
        entities=tuple(entities),
        background_requests=requests,
    )


def random_ground_truth(seed: int, n_entities: int | None = None, n_categories: int | None = None,
                        stage_size: float = 1000.0) -> GroundTruthLayout:
    """Annotated-style layout: random boxes, mostly inside the stage, overlaps allowed."""
    rng = random.Random(seed)
    count = n_entities if n_entities is not None else rng.randint(1, 21)
    cats = rng.sample(CATEGORIES, min(len(CATEGORIES), n_categories or count))
    ents = []
    for i in range(count):
        L, W, H = _r(rng, 20, 300), _r(rng, 20, 200), _r(rng, 20, 250)
        x0 = _r(rng, -20, stage_size - L + 20)
        y0 = _r(rng, 0, stage_size - W)
        # cycle through the chosen categories so every one appears
        ents.append(GroundTruthEntity(cats[i % len(cats)], Aabb(x0, y0, x0 + L, y0 + W, 0.0, H)))
    return GroundTruthLayout(f"gt_{seed:03d}", tuple(ents))


def random_int_boxes(rng: random.Random, count: int, lo: int = 0, hi: int = 200) -> list[Aabb]:
    out = []
    for _ in range(count):
        coords = []
        for _axis in range(3):
            a, b = sorted(rng.sample(range(lo, hi + 1), 2))
            coords.append((a, b))
        (x0, x1), (y0, y1), (h0, h1) = coords
        out.append(Aabb(x0, y0, x1, y1, h0, h1))
    return out


def random_asset_index(seed: int, count: int, dim: int = 16):
    """Synthetic asset index with unit-norm pseudo-embeddings."""
    import numpy as np

    from .retrieval import AssetRecord, unit

    gen = np.random.default_rng(seed)
    rng = random.Random(seed)
    out = []
    for i in range(count):
        v = gen.standard_normal(dim)
        cat = CATEGORIES[i % len(CATEGORIES)]
        dims = (_r(rng, 5, 200), _r(rng, 5, 200), _r(rng, 5, 200))
        out.append(AssetRecord(f"asset{i:05d}", f"{cat} {i}", dims, unit(v), (cat,)))
    return out
