"""Regenerate the checked-in fixture corpus under tests/fixtures.

    python scripts/make_fixtures.py [--goldens]

Scenes, ground truth, layouts and the asset index are pure functions of
their seeds. ``--goldens`` also rewrites the golden report and manifests;
only do that after a change that is meant to alter outputs.
"""

from __future__ import annotations

import argparse
import shutil
import tempfile
from dataclasses import replace
from pathlib import Path

from stagelayout.cli import do_metrics, run_pipeline
from stagelayout.config import PipelineConfig
from stagelayout.geometry import StageConfig
from stagelayout.placement import PlacementOptions, place_scene
from stagelayout.retrieval import dump_index
from stagelayout.schema import dump_json, serialize_ground_truth, serialize_layout, serialize_scene_spec
from stagelayout.synth import random_asset_index, random_ground_truth, random_scene

ROOT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
N_SCENES = 50
N_METRIC_STAGES = 10
N_GOLDEN_MANIFESTS = 5
DIVERSITY_COUNTS = range(5, 23)


def write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode("utf-8"))


def make_inputs() -> None:
    for sub in ("scenes", "gt", "layouts", "diversity"):
        shutil.rmtree(ROOT / sub, ignore_errors=True)
    cfg = StageConfig()
    for seed in range(N_SCENES):
        stem = f"scene_{seed:03d}"
        # the first scene carries the largest class count seen in the dataset
        spec = random_scene(seed, n_entities=22 if seed == 0 else None)
        write(ROOT / "scenes" / f"{stem}.json", serialize_scene_spec(spec))
        if seed < N_METRIC_STAGES:
            gt = replace(random_ground_truth(1000 + seed), stage_id=stem)
            write(ROOT / "gt" / f"{stem}.json", serialize_ground_truth(gt))
            layout = place_scene(spec, cfg, PlacementOptions(repair=True), stage_id=stem)
            write(ROOT / "layouts" / f"{stem}.json", serialize_layout(layout.to_layout_file()))
    for k in DIVERSITY_COUNTS:
        gt = replace(random_ground_truth(2000 + k, n_entities=k, n_categories=k), stage_id=f"div_{k:02d}")
        write(ROOT / "diversity" / f"div_{k:02d}.json", serialize_ground_truth(gt))
    write(ROOT / "assets.jsonl", dump_index(random_asset_index(7, 200)))


def make_goldens() -> None:
    cfg = PipelineConfig()
    layouts = [p.read_bytes() for p in sorted((ROOT / "layouts").glob("*.json"))]
    gts = {p.stem: p.read_bytes() for p in sorted((ROOT / "gt").glob("*.json"))}
    report = do_metrics(layouts, gts, cfg, "union")
    write(ROOT / "golden" / "metrics_report.json", dump_json(report.to_dict()))
    write(ROOT / "golden" / "metrics_table.txt", report.format_table())
    manifests = ROOT / "golden" / "manifests"
    shutil.rmtree(manifests, ignore_errors=True)
    manifests.mkdir(parents=True)
    with tempfile.TemporaryDirectory() as tmp:
        for seed in range(N_GOLDEN_MANIFESTS):
            stem = f"scene_{seed:03d}"
            out = Path(tmp) / stem
            code = run_pipeline(str(ROOT / "scenes" / f"{stem}.json"), cfg, out, str(ROOT / "gt" / f"{stem}.json"),
                                str(ROOT / "assets.jsonl"))
            if code:
                raise SystemExit(f"{stem}: pipeline exited {code}")
            shutil.copyfile(out / "manifest.json", manifests / f"{stem}.json")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--goldens", action="store_true", help="also rewrite golden outputs")
    args = ap.parse_args()
    make_inputs()
    if args.goldens:
        make_goldens()
    print(f"fixtures written to {ROOT}")


if __name__ == "__main__":
    main()
