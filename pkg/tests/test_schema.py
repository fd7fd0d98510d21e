import json
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stagelayout.errors import FormatSyntaxError, SchemaError
from stagelayout.geometry import Aabb
from stagelayout.schema import (
    BackgroundRequest,
    DatasetRangeWarning,
    EntityKind,
    EntitySpec,
    Face,
    Facing,
    GroundTruthEntity,
    GroundTruthLayout,
    PlacementRelation,
    RelationMode,
    SceneSpec,
    parse_ground_truth,
    parse_layout,
    parse_scene_spec,
    serialize_ground_truth,
    serialize_layout,
    serialize_scene_spec,
    validate_corpus,
)
from stagelayout.synth import random_ground_truth, random_scene

ANCHOR = {
    "id": "table1",
    "name": "table",
    "category": "table",
    "kind": "anchor",
    "anchor_box": {"left": [400, 450], "right": [600, 550], "h": [0, 75]},
}


def scene_doc(*entities, **extra):
    doc = {"format": "stagelayout/1", "kind": "scene", "title": "t", "imagery": "night", "entities": list(entities)}
    doc.update(extra)
    return json.dumps(doc)


def gt_doc(entities, stage_id="s1"):
    return json.dumps({"format": "stagelayout/1", "kind": "ground_truth", "stage_id": stage_id, "entities": entities})


def gt_entity(left=(100, 100), right=(300, 200), h=(0, 150), category="table"):
    return {"category": category, "left": list(left), "right": list(right), "h": list(h)}


# -- scene spec ------------------------------------------------------------------


def test_minimal_scene():
    spec = parse_scene_spec(scene_doc(ANCHOR))
    assert len(spec.entities) == 1
    e = spec.entities[0]
    assert e.kind is EntityKind.ANCHOR and e.facing is Facing.TOWARD_AUDIENCE
    assert e.anchor_box == Aabb(400, 450, 600, 550, 0, 75)


def test_non_anchor_missing_dims():
    chair = {"id": "chair1", "name": "chair", "category": "chair", "kind": "non_anchor",
             "relation": {"mode": "on_floor_near"}, "anchor_ref": "table1"}
    with pytest.raises(SchemaError, match=r"chair1.*dims required for non_anchor"):
        parse_scene_spec(scene_doc(ANCHOR, chair))


def test_anchor_ref_to_non_anchor_names_both():
    chair = {"id": "chair1", "name": "chair", "category": "chair", "kind": "non_anchor", "dims": [50, 50, 90],
             "relation": {"mode": "on_floor_near"}, "anchor_ref": "table1"}
    cup = {"id": "cup1", "name": "cup", "category": "teacup", "kind": "non_anchor", "dims": [10, 10, 8],
           "relation": {"mode": "on_top"}, "anchor_ref": "chair1"}
    with pytest.raises(SchemaError) as exc:
        parse_scene_spec(scene_doc(ANCHOR, chair, cup))
    assert "cup1" in str(exc.value) and "chair1" in str(exc.value)


@pytest.mark.parametrize(
    "entity, fragment",
    [
        ({"id": "p", "name": "p", "category": "p", "kind": "non_anchor", "dims": [1, 1, 1], "anchor_ref": "table1",
          "relation": {"mode": "on_surface", "face": "front"}}, "mount_height required"),
        ({"id": "p", "name": "p", "category": "p", "kind": "non_anchor", "dims": [1, 1, 1], "anchor_ref": "table1",
          "relation": {"mode": "on_surface", "face": "front", "mount_height": -1}}, "mount_height must be >= 0"),
        ({"id": "p", "name": "p", "category": "p", "kind": "non_anchor", "dims": [1, 0, 1], "anchor_ref": "table1",
          "relation": {"mode": "on_top"}}, "dims must all be > 0"),
        ({"id": "p", "name": "p", "category": "p", "kind": "non_anchor", "dims": [1, 1, 1], "anchor_ref": "table1",
          "relation": {"mode": "on_top", "face": "left"}}, "only allowed for on_surface"),
        ({"id": "p", "name": "p", "category": "p", "kind": "ornament", "dims": [1, 1, 1],
          "relation": {"mode": "on_top"}}, "anchor_ref required for on_top"),
        ({"id": "p", "name": "p", "category": "p", "kind": "non_anchor", "dims": [1, 1, 1],
          "relation": {"mode": "on_floor_near"}}, "anchor_ref required for non_anchor"),
        ({"id": "p", "name": "p", "category": "p", "kind": "non_anchor", "dims": [1, 1, 1], "anchor_ref": "nope",
          "relation": {"mode": "on_floor_near"}}, "names no entity"),
        ({**ANCHOR, "id": "p", "dims": [1, 1, 1]}, "not allowed for anchor"),
        ({**ANCHOR, "id": "table1"}, "duplicate id"),
        ({**ANCHOR, "id": "p", "colour": "red"}, "unknown field(s) colour"),
        ({**ANCHOR, "id": "p", "facing": "up"}, "not one of"),
    ],
)
def test_schema_errors_name_the_entity(entity, fragment):
    with pytest.raises(SchemaError) as exc:
        parse_scene_spec(scene_doc(ANCHOR, entity))
    msg = str(exc.value)
    assert fragment in msg
    assert "'p'" in msg or "table1" in msg


def test_empty_entity_list():
    with pytest.raises(SchemaError, match="at least one entity"):
        parse_scene_spec(scene_doc())


def test_syntax_error_reports_position():
    with pytest.raises(FormatSyntaxError) as exc:
        parse_scene_spec('{\n  "format": "stagelayout/1",\n  "kind": scene\n}')
    assert (exc.value.line, exc.value.column) == (3, 11)
    assert "line 3" in str(exc.value)
    with pytest.raises(FormatSyntaxError, match="utf-8"):
        parse_scene_spec(b'{"a": "\xff"}')


def test_wrong_format_tag():
    with pytest.raises(SchemaError, match="format"):
        parse_scene_spec(json.dumps({"format": "stagelayout/2", "kind": "scene", "title": "", "imagery": "",
                                     "entities": []}))


# -- ground truth ----------------------------------------------------------------


def test_ground_truth_corner_fields():
    gt = parse_ground_truth(gt_doc([gt_entity()]))
    assert gt.entities[0].box == Aabb(100, 100, 300, 200, 0, 150)


@pytest.mark.parametrize(
    "kwargs, rule",
    [({"h": (150, 0)}, "h0 < h1 violated"), ({"left": (300, 100)}, "x0 < x1 violated"),
     ({"right": (300, 100)}, "y0 < y1 violated")],
)
def test_ground_truth_inverted_extents_cite_index(kwargs, rule):
    with pytest.raises(SchemaError) as exc:
        parse_ground_truth(gt_doc([gt_entity(), gt_entity(**kwargs)]))
    assert rule in str(exc.value) and "entity[1]" in str(exc.value)


def test_ground_truth_entity_count_range():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_ground_truth(gt_doc([gt_entity()] * 21))
    with pytest.warns(DatasetRangeWarning, match="outside dataset range 1–21"):
        parse_ground_truth(gt_doc([gt_entity()] * 22))
    with pytest.raises(SchemaError, match="no entities"):
        parse_ground_truth(gt_doc([]))


# -- round trips ---------------------------------------------------------------

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
text = st.text(max_size=12)
ident = st.text(st.characters(codec="utf-8"), min_size=1, max_size=8)


@st.composite
def boxes(draw):
    vals = []
    for _ in range(3):
        lo = draw(finite)
        vals.append((lo, lo + draw(st.floats(0.5, 1e4))))
    (x0, x1), (y0, y1), (h0, h1) = vals
    return Aabb(x0, y0, x1, y1, h0, h1)


@st.composite
def scene_specs(draw):
    ids = draw(st.lists(ident, min_size=1, max_size=6, unique=True))
    n_anchor = draw(st.integers(1, len(ids)))
    ents = []
    for eid in ids[:n_anchor]:
        ents.append(EntitySpec(eid, draw(text), draw(text), EntityKind.ANCHOR, draw(text), anchor_box=draw(boxes()),
                               facing=draw(st.sampled_from(Facing))))
    pos = st.floats(0.001, 1e4)
    for eid in ids[n_anchor:]:
        mode = draw(st.sampled_from(RelationMode))
        rel = PlacementRelation(mode)
        if mode is RelationMode.ON_SURFACE:
            rel = PlacementRelation(mode, draw(st.sampled_from(Face)), draw(st.floats(0, 1e4)))
        kind = EntityKind.NON_ANCHOR
        ref = draw(st.sampled_from(ids[:n_anchor]))
        if mode is RelationMode.ON_FLOOR_NEAR and draw(st.booleans()):
            kind, ref = EntityKind.ORNAMENT, draw(st.sampled_from([None, ref]))
        ents.append(EntitySpec(eid, draw(text), draw(text), kind, draw(text), dims=(draw(pos), draw(pos), draw(pos)),
                               relation=rel, anchor_ref=ref, facing=draw(st.sampled_from(Facing))))
    reqs = draw(st.lists(st.builds(BackgroundRequest, text, pos, pos), max_size=3))
    return SceneSpec(draw(text), draw(text), tuple(ents), tuple(reqs))


@given(scene_specs())
@settings(max_examples=150, deadline=None)
def test_scene_round_trip(spec):
    text_ = serialize_scene_spec(spec)
    back = parse_scene_spec(text_)
    assert back == spec
    assert serialize_scene_spec(back) == text_


@given(st.text(min_size=1, max_size=10), st.lists(st.tuples(text, boxes()), min_size=1, max_size=21))
@settings(max_examples=100, deadline=None)
def test_ground_truth_round_trip(stage_id, items):
    gt = GroundTruthLayout(stage_id, tuple(GroundTruthEntity(c, b) for c, b in items))
    text_ = serialize_ground_truth(gt)
    assert parse_ground_truth(text_) == gt
    assert serialize_ground_truth(parse_ground_truth(text_)) == text_


@pytest.mark.parametrize("seed", range(5))
def test_generated_fixtures_round_trip(seed):
    spec = random_scene(seed)
    assert parse_scene_spec(serialize_scene_spec(spec)) == spec
    gt = random_ground_truth(seed)
    assert parse_ground_truth(serialize_ground_truth(gt)) == gt


def test_layout_round_trip(fixtures_dir):
    for p in sorted((fixtures_dir / "layouts").glob("*.json")):
        raw = p.read_text(encoding="utf-8")
        assert serialize_layout(parse_layout(raw)) == raw


# -- robustness ------------------------------------------------------------------

json_values = st.recursive(
    st.none() | st.booleans() | st.integers() | st.floats(allow_nan=False) | st.text(max_size=6),
    lambda children: st.lists(children, max_size=4) | st.dictionaries(st.text(max_size=8), children, max_size=5),
    max_leaves=20,
)


@given(st.binary(max_size=200))
@settings(max_examples=300, deadline=None)
def test_arbitrary_bytes_never_crash(data):
    for parse in (parse_scene_spec, parse_ground_truth, parse_layout):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                parse(data)
        except (FormatSyntaxError, SchemaError):
            pass


@given(json_values, st.sampled_from(["scene", "ground_truth", "layout"]))
@settings(max_examples=300, deadline=None)
def test_arbitrary_json_never_crashes(value, kind):
    docs = [value]
    if isinstance(value, dict):
        docs.append({"format": "stagelayout/1", "kind": kind, **value})
        docs.append({"format": "stagelayout/1", "kind": kind, "stage_id": "s", "title": "t", "imagery": "i",
                     "stage_size": 10, "entities": [value]})
    for doc in docs:
        for parse in (parse_scene_spec, parse_ground_truth, parse_layout):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    parse(json.dumps(doc))
            except (FormatSyntaxError, SchemaError):
                pass


def test_deeply_nested_input():
    with pytest.raises((FormatSyntaxError, SchemaError)):
        parse_scene_spec("[" * 100_000 + "]" * 100_000)


# -- corpus validation -------------------------------------------------------------


def test_validate_three_good_files(tmp_path):
    for i in range(3):
        (tmp_path / f"s{i}.json").write_text(serialize_ground_truth(random_ground_truth(i, 5)))
    report = validate_corpus(tmp_path)
    assert report.counts() == {"pass": 3, "warn": 0, "fail": 0} and report.ok


def test_validate_one_bad_file(tmp_path):
    for i in range(3):
        (tmp_path / f"s{i}.json").write_text(serialize_ground_truth(random_ground_truth(i, 5)))
    (tmp_path / "s1.json").write_text(gt_doc([gt_entity(left=(0, 5), right=(10, 5))]))
    report = validate_corpus(tmp_path)
    assert [r.status for r in report.results] == ["pass", "fail", "pass"]
    assert "y0 < y1 violated" in report.results[1].messages[0]
    assert not report.ok


def test_validate_empty_directory(tmp_path):
    report = validate_corpus(tmp_path)
    assert report.results == [] and report.ok


def test_validate_warns_and_survives_unreadable(tmp_path):
    (tmp_path / "big.json").write_text(gt_doc([gt_entity()] * 22))
    (tmp_path / "dir.json").mkdir()
    (tmp_path / "junk.json").write_text("[1, 2")
    report = validate_corpus(tmp_path)
    status = {r.path: r.status for r in report.results}
    assert status == {"big.json": "warn", "dir.json": "fail", "junk.json": "fail"}
    assert "io error" in report.results[1].messages[0]


def test_validate_fixture_corpus(fixtures_dir):
    for sub in ("scenes", "gt", "layouts"):
        report = validate_corpus(fixtures_dir / sub)
        assert report.ok and report.counts()["fail"] == 0
