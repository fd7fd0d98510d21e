"""Run the full pipeline over a directory of scene specs and print a metrics table.

    python scripts/run_corpus.py [SCENES_DIR] [--gt GT_DIR] [--index ASSETS] [--out OUT] [--config CFG]

Defaults point at the checked-in fixture corpus. Ground truth is matched by
file name; stages without one get OOB / OIS / classes only.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from stagelayout.cli import do_metrics, run_pipeline
from stagelayout.config import PipelineConfig, load_config

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenes", nargs="?", default=str(FIXTURES / "scenes"))
    ap.add_argument("--gt", default=str(FIXTURES / "gt"))
    ap.add_argument("--index", default=str(FIXTURES / "assets.jsonl"))
    ap.add_argument("--out", default="out/corpus")
    ap.add_argument("--config")
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else PipelineConfig()
    out, gt_dir = Path(args.out), Path(args.gt)
    failed, layouts, gts = [], [], {}
    start = time.perf_counter()
    for scene in sorted(Path(args.scenes).glob("*.json")):
        gt = gt_dir / scene.name
        code = run_pipeline(str(scene), cfg, out / scene.stem, None, args.index)
        if code:
            failed.append(f"{scene.stem} (exit {code})")
            continue
        layouts.append((out / scene.stem / "layout.json").read_bytes())
        if gt.is_file():
            gts[scene.stem] = gt.read_bytes()
    elapsed = time.perf_counter() - start

    if layouts:
        report = do_metrics(layouts, gts, cfg, cfg.iwg_mode)
        print(report.format_table(), end="")
    print(f"{len(layouts)} stage(s) in {elapsed:.2f} s, artifacts under {out}")
    for f in failed:
        print(f"failed: {f}", file=sys.stderr)
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
