import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stagelayout.geometry import Aabb  # noqa: E402
from stagelayout.schema import EntityKind, EntitySpec, Face, PlacementRelation, RelationMode, SceneSpec  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


def anchor(eid, box, category="table"):
    return EntitySpec(eid, category, category, EntityKind.ANCHOR, f"a {category}", anchor_box=Aabb(*box))


def floor_item(eid, dims, anchor_ref=None, category="chair", kind=EntityKind.NON_ANCHOR):
    return EntitySpec(eid, category, category, kind, "", dims=tuple(dims),
                      relation=PlacementRelation(RelationMode.ON_FLOOR_NEAR), anchor_ref=anchor_ref)


def surface_item(eid, dims, anchor_ref, face=Face.FRONT, mount=100.0, category="painting"):
    return EntitySpec(eid, category, category, EntityKind.NON_ANCHOR, "", dims=tuple(dims),
                      relation=PlacementRelation(RelationMode.ON_SURFACE, face, mount), anchor_ref=anchor_ref)


def top_item(eid, dims, anchor_ref, category="teacup"):
    return EntitySpec(eid, category, category, EntityKind.NON_ANCHOR, "", dims=tuple(dims),
                      relation=PlacementRelation(RelationMode.ON_TOP), anchor_ref=anchor_ref)


def scene(*entities, requests=(), title="test stage", imagery="a quiet night"):
    return SceneSpec(title, imagery, tuple(entities), tuple(requests))


@pytest.fixture
def fixtures_dir():
    return FIXTURES
