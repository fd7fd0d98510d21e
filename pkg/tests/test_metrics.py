import math
import random
from contextlib import nullcontext

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from oracles import voxel_out_of_stage, voxel_pairwise_overlap_sum, voxel_union_intersection
from stagelayout.cli import do_metrics
from stagelayout.config import PipelineConfig
from stagelayout.errors import EmptyError
from stagelayout.geometry import Aabb, StageConfig, union_volume
from stagelayout.metrics import (
    MetricsReport,
    StageInput,
    StageMetrics,
    build_report,
    clip_sim,
    metric_class_diversity,
    metric_iwg,
    metric_ois,
    metric_oob,
)
from stagelayout.schema import dump_json, parse_ground_truth
from stagelayout.synth import random_int_boxes

CFG = StageConfig()
M3 = Aabb(0, 0, 100, 100, 0, 100)


def test_oob_examples():
    assert metric_oob([M3, Aabb(500, 500, 600, 600, 0, 10)], CFG) == 0
    assert metric_oob([Aabb(-50, 0, 50, 100, 0, 100)], CFG) == 0.5


def test_ois_pair_counting():
    assert metric_ois([M3, Aabb(100, 0, 200, 100, 0, 100)]) == 0
    assert metric_ois([M3, M3]) == 1
    assert metric_ois([M3, M3, M3]) == 3


@given(st.integers(1, 8))
def test_ois_duplicates_scale_with_pair_count(k):
    assert metric_ois([M3] * k) == math.comb(k, 2)


def test_iwg_modes():
    assert metric_iwg([M3], [M3], "union") == 1
    assert metric_iwg([M3], [M3], "pairwise_sum") == 1
    assert metric_iwg([M3, M3], [M3], "union") == 1
    assert metric_iwg([M3, M3], [M3], "pairwise_sum") == 2
    with pytest.raises(ValueError):
        metric_iwg([M3], [M3], "mean")


@pytest.mark.parametrize("seed", range(6))
def test_metrics_match_voxel_oracle(seed):
    rng = random.Random(seed)
    gen, gt = random_int_boxes(rng, 8), random_int_boxes(rng, 8)
    small = StageConfig(stage_size=150, audience_left=(-10, -100, 120), audience_right=(160, -100, 120))
    assert metric_iwg(gen, gt, "union") * 1e6 == voxel_union_intersection(gen, gt)
    assert metric_ois(gen) * 1e6 == voxel_pairwise_overlap_sum(gen)
    assert metric_oob(gen, small) * 1e6 == voxel_out_of_stage(gen, 150)


@given(st.randoms(use_true_random=False))
@settings(max_examples=40, deadline=None)
def test_iwg_symmetry_and_bound(rnd):
    gen, gt = random_int_boxes(rnd, rnd.randint(1, 5)), random_int_boxes(rnd, rnd.randint(1, 5))
    for mode in ("union", "pairwise_sum"):
        assert metric_iwg(gen, gt, mode) == metric_iwg(gt, gen, mode)
    u = metric_iwg(gen, gt, "union") * 1e6
    assert u <= min(union_volume(gen), union_volume(gt))
    shuffled = list(gen)
    rnd.shuffle(shuffled)
    assert metric_ois(shuffled) == metric_ois(gen)


def test_class_diversity():
    assert metric_class_diversity([("s", ["chair", "chair", "table"])]) == (2, 2, 2)
    assert metric_class_diversity([("s", ["Chair", "chair"])]) == (2, 2, 2)
    stages = [("a", [f"c{i}" for i in range(5)]), ("b", [f"c{i}" for i in range(22)])]
    assert metric_class_diversity(stages) == (13.5, 5, 22)
    with pytest.raises(EmptyError):
        metric_class_diversity([])


def test_report_single_stage_without_gt():
    report = build_report([StageInput("s", [("table", M3)])], CFG)
    [row] = report.per_stage
    assert (row.oob, row.ois, row.iwg, row.class_count) == (0, 0, None, 1)
    assert report.mean_iwg is None
    assert "IWG(m3)" in report.format_table()
    with pytest.raises(EmptyError):
        build_report([], CFG)


def test_report_aggregates_are_means():
    a = StageInput("b", [("x", Aabb(-50, 0, 50, 100, 0, 100))], [("x", M3)])
    b = StageInput("a", [("x", M3), ("y", M3)], [("x", M3)])
    report = build_report([a, b], CFG)
    assert [r.stage_id for r in report.per_stage] == ["a", "b"]
    assert report.mean_oob == pytest.approx((0 + 0.5) / 2, abs=1e-12)
    assert report.mean_ois == pytest.approx((1 + 0) / 2, abs=1e-12)
    assert report.mean_iwg == pytest.approx((1 + 0.5) / 2, abs=1e-12)
    assert (report.min_classes, report.max_classes) == (1, 2)


def test_report_table_three_significant_figures():
    report = MetricsReport([StageMetrics("s", 0.0467891, 0.756432, 12.3456, 7)], "union")
    table = report.format_table()
    assert "0.0468" in table and "0.756" in table and "12.3" in table


def test_diversity_corpus_prints_5_of_22():
    files = sorted((FIXTURES / "diversity").glob("*.json"))
    stages = []
    for p in files:
        with pytest.warns(UserWarning) if p.stem == "div_22" else nullcontext():
            gt = parse_ground_truth(p.read_bytes())
        stages.append(StageInput(gt.stage_id, [(e.category, e.box) for e in gt.entities]))
    report = build_report(stages, CFG)
    assert sorted(r.class_count for r in report.per_stage) == list(range(5, 23))
    assert "5/22" in report.format_table()


def test_golden_ten_stage_report():
    layouts = [p.read_bytes() for p in sorted((FIXTURES / "layouts").glob("*.json"))]
    gts = {p.stem: p.read_bytes() for p in sorted((FIXTURES / "gt").glob("*.json"))}
    assert len(layouts) == 10
    report = do_metrics(layouts, gts, PipelineConfig(), "union")
    assert dump_json(report.to_dict()) == (FIXTURES / "golden" / "metrics_report.json").read_text(encoding="utf-8")
    assert report.format_table() == (FIXTURES / "golden" / "metrics_table.txt").read_text(encoding="utf-8")
    assert report.mean_oob == 0 and report.mean_ois == 0


def test_clip_sim_hook():
    class Const:
        def score(self, text, image_path):
            return 30.0 if "moon" in text else 20.0

    assert clip_sim(Const(), [("moon", "a.png"), ("sun", "b.png")]) == 25.0
    with pytest.raises(EmptyError):
        clip_sim(Const(), [])

