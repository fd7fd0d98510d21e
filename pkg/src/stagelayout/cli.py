"""Command-line entry point.

Exit codes: 0 ok, 1 schema/syntax/config error, 2 placement error
(no space, fit, bounds, degenerate projection), 3 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .background import allocate_background, emit_background_spec
from .config import PipelineConfig, load_config
from .errors import StageLayoutError, exit_code_for
from .metrics import IWG_MODES, StageInput, build_report
from .placement import PlacementOptions, place_scene
from .projection import occlusion_union, occlusions_from_dict, occlusions_to_dict
from .render import render_svg
from .retrieval import StubProvider, candidate_set, load_index, score_assets, select_asset
from .schema import (
    FORMAT_TAG,
    LayoutFile,
    SceneSpec,
    dump_json,
    load_json,
    parse_boxes_any,
    parse_layout,
    parse_scene_spec,
    serialize_layout,
    validate_corpus,
)

log = logging.getLogger("stagelayout")


# -- shared steps ---------------------------------------------------------------


def _read(path: str | Path) -> bytes:
    return Path(path).read_bytes()


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_bytes(text.encode("utf-8"))
    return path


def run_analyzer(cmd: str, script: bytes) -> bytes:
    """Pipe raw script text through an external command that prints a scene spec."""
    proc = subprocess.run(cmd, shell=True, input=script, capture_output=True, check=False)
    if proc.returncode != 0:
        raise OSError(f"analyzer command exited {proc.returncode}: {proc.stderr.decode('utf-8', 'replace').strip()}")
    return proc.stdout


def load_scene(path: str, analyzer_cmd: str | None = None) -> SceneSpec:
    data = _read(path)
    if analyzer_cmd:
        data = run_analyzer(analyzer_cmd, data)
    return parse_scene_spec(data)


def do_place(scene: SceneSpec, cfg: PipelineConfig, stage_id: str, strict: bool = False) -> LayoutFile:
    opts = PlacementOptions(cell_size=cfg.placement.cell_size, repair=cfg.placement.repair and not strict)
    return place_scene(scene, cfg.stage, opts, stage_id=stage_id).to_layout_file()


def do_background(scene: SceneSpec, occlusions, cfg: PipelineConfig, stage_id: str) -> str:
    placed = allocate_background(scene.background_requests, occlusions, cfg.stage, cfg.placement.cell_size)
    return dump_json(emit_background_spec(scene.imagery, placed, cfg.stage).to_dict(stage_id))


def do_retrieve(scene: SceneSpec, index_path: str, cfg: PipelineConfig, seed: int) -> str:
    index = load_index(Path(index_path).read_text(encoding="utf-8"))
    provider = StubProvider()
    rc = cfg.retrieval
    picks = []
    for i, e in enumerate(scene.entities):
        query = f"{e.name} {e.description}".strip()
        scored = score_assets(query, index, provider, rc.weights)
        # one stream per entity, all derived from the single config seed
        entity_seed = seed * 1_000_003 + i
        picks.append(
            {
                "entity_id": e.id,
                "query": query,
                "candidates": candidate_set(scored, rc.threshold, rc.top_k, rc.threshold_target),
                "selected": select_asset(scored, rc.threshold, rc.top_k, entity_seed, rc.threshold_target),
            }
        )
    return dump_json(
        {
            "format": FORMAT_TAG,
            "kind": "retrieval",
            "seed": seed,
            "threshold": rc.threshold,
            "threshold_target": rc.threshold_target,
            "top_k": rc.top_k,
            "selections": picks,
        }
    )


def do_metrics(layout_texts: list[bytes], gt_texts: dict[str, bytes], cfg: PipelineConfig, iwg_mode: str):
    stages = []
    for data in layout_texts:
        stage_id, ents = parse_boxes_any(data)
        gt = None
        if stage_id in gt_texts:
            gt = parse_boxes_any(gt_texts[stage_id])[1]
        stages.append(StageInput(stage_id, ents, gt))
    return build_report(stages, cfg.stage, iwg_mode)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def run_pipeline(
    scene_path: str,
    cfg: PipelineConfig,
    out_dir: Path,
    gt_path: str | None = None,
    index_path: str | None = None,
    analyzer_cmd: str | None = None,
) -> int:
    """place -> project -> background -> [retrieve] -> [metrics] -> render; writes manifest.json."""
    out_dir.mkdir(parents=True, exist_ok=True)
    stage_id = Path(scene_path).stem
    artifacts: list[str] = []
    status: dict = {"status": "ok"}

    def emit(name: str, text: str) -> None:
        _write(out_dir, name, text)
        artifacts.append(name)

    stage = "place"
    try:
        scene = load_scene(scene_path, analyzer_cmd)
        layout = do_place(scene, cfg, stage_id)
        emit("layout.json", serialize_layout(layout))
        stage = "project"
        occ = occlusion_union(layout, cfg.stage)
        emit("occlusions.json", dump_json(occlusions_to_dict(stage_id, occ, cfg.stage)))
        stage = "background"
        emit("background.json", do_background(scene, occ, cfg, stage_id))
        if index_path is not None:
            stage = "retrieve"
            emit("retrieval.json", do_retrieve(scene, index_path, cfg, cfg.placement.seed))
        if gt_path is not None:
            stage = "metrics"
            report = do_metrics([serialize_layout(layout).encode()], {stage_id: _read(gt_path)}, cfg, cfg.iwg_mode)
            emit("metrics.json", dump_json(report.to_dict()))
        stage = "render"
        emit("render_top.svg", render_svg(layout, "top"))
        emit("render_front.svg", render_svg(layout, "front", occ))
        code = 0
    except (StageLayoutError, OSError) as exc:
        code = exit_code_for(exc)
        status = {"status": "failed", "failed_stage": stage, "exit_code": code, "error": str(exc)}
        log.error("%s: %s failed: %s", stage_id, stage, exc)

    entries = []
    for name in artifacts:
        data = (out_dir / name).read_bytes()
        entries.append({"name": name, "sha256": _sha256(data), "bytes": len(data)})
    manifest = {"format": FORMAT_TAG, "kind": "manifest", "stage_id": stage_id, **status, "artifacts": entries}
    _write(out_dir, "manifest.json", dump_json(manifest))
    return code


# -- argparse wiring ---------------------------------------------------------------


def _effective_config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, placement=replace(cfg.placement, seed=args.seed))
    return cfg


def _out_dir(args, cfg: PipelineConfig) -> Path:
    return Path(args.out if args.out is not None else cfg.output_dir)


def cmd_place(args) -> int:
    cfg = _effective_config(args)
    scene = load_scene(args.scene, args.analyzer_cmd)
    layout = do_place(scene, cfg, args.stage_id or Path(args.scene).stem, strict=args.strict)
    path = _write(_out_dir(args, cfg), "layout.json", serialize_layout(layout))
    print(path)
    return 0


def cmd_project(args) -> int:
    cfg = _effective_config(args)
    layout = parse_layout(_read(args.layout))
    occ = occlusion_union(layout, cfg.stage)
    out = _out_dir(args, cfg)
    print(_write(out, "occlusions.json", dump_json(occlusions_to_dict(layout.stage_id, occ, cfg.stage))))
    if args.svg:
        print(_write(out, "render_front.svg", render_svg(layout, "front", occ)))
    return 0


def cmd_background(args) -> int:
    cfg = _effective_config(args)
    scene = parse_scene_spec(_read(args.scene))
    occ = occlusions_from_dict(load_json(_read(args.occlusions)))
    stage_id = args.stage_id or Path(args.scene).stem
    print(_write(_out_dir(args, cfg), "background.json", do_background(scene, occ, cfg, stage_id)))
    return 0


def cmd_retrieve(args) -> int:
    cfg = _effective_config(args)
    scene = parse_scene_spec(_read(args.scene))
    seed = cfg.placement.seed
    print(_write(_out_dir(args, cfg), "retrieval.json", do_retrieve(scene, args.index, cfg, seed)))
    return 0


def _box_texts(paths: list[str]) -> list[bytes]:
    """Named files as given; directories contribute only their layout and ground-truth files."""
    out = []
    for p in map(Path, paths):
        if not p.is_dir():
            out.append(_read(p))
            continue
        for f in sorted(p.glob("*.json")):
            data = _read(f)
            try:
                doc = load_json(data)
            except StageLayoutError:
                doc = None
            if isinstance(doc, dict) and doc.get("kind") in ("layout", "ground_truth"):
                out.append(data)
    return out


def cmd_metrics(args) -> int:
    cfg = _effective_config(args)
    layouts = _box_texts(args.layouts)
    gts: dict[str, bytes] = {}
    if args.gt is not None:
        for data in _box_texts([args.gt]):
            gts[parse_boxes_any(data)[0]] = data
    report = do_metrics(layouts, gts, cfg, args.iwg_mode or cfg.iwg_mode)
    out = _out_dir(args, cfg)
    _write(out, "metrics.json", dump_json(report.to_dict()))
    table = report.format_table()
    _write(out, "metrics.txt", table)
    sys.stdout.write(table)
    return 0


def cmd_validate(args) -> int:
    report = validate_corpus(args.directory)
    sys.stdout.write(report.format_text())
    return 0 if report.ok else 1


def cmd_render(args) -> int:
    cfg = _effective_config(args)
    layout = parse_layout(_read(args.layout))
    occ = occlusions_from_dict(load_json(_read(args.occlusions))) if args.occlusions else ()
    print(_write(_out_dir(args, cfg), f"render_{args.mode}.svg", render_svg(layout, args.mode, occ)))
    return 0


def cmd_pipeline(args) -> int:
    cfg = _effective_config(args)
    out = _out_dir(args, cfg)
    scene = Path(args.scene)
    if not scene.is_dir():
        return run_pipeline(str(scene), cfg, out, args.gt, args.index, args.analyzer_cmd)
    scenes = sorted(scene.glob("*.json"))

    def one(p: Path) -> int:
        gt = None
        if args.gt is not None:
            cand = Path(args.gt) / p.name
            gt = str(cand) if cand.exists() else None
        return run_pipeline(str(p), cfg, out / p.stem, gt, args.index, args.analyzer_cmd)

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        codes = list(pool.map(one, scenes))
    failed = [c for c in codes if c]
    return failed[0] if failed else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config JSON (default: $STAGELAYOUT_CONFIG or built-in defaults)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", default=None, help="output directory (default: config output_dir)")

    p = argparse.ArgumentParser(prog="stagelayout", description="Stage layout engine and metrics toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("place", parents=[common], help="place a scene spec; writes layout.json")
    s.add_argument("scene")
    s.add_argument("--strict", action="store_true", help="reject invalid anchors instead of re-seating them")
    s.add_argument("--stage-id")
    s.add_argument("--analyzer-cmd", help="shell command turning raw script text (stdin) into a scene spec (stdout)")
    s.set_defaults(func=cmd_place)

    s = sub.add_parser("project", parents=[common], help="back-wall occlusion boxes for a layout")
    s.add_argument("layout")
    s.add_argument("--svg", action="store_true", help="also write a front elevation with the occlusion boxes")
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("background", parents=[common], help="allocate background regions; writes background.json")
    s.add_argument("scene")
    s.add_argument("occlusions")
    s.add_argument("--stage-id")
    s.set_defaults(func=cmd_background)

    s = sub.add_parser("retrieve", parents=[common], help="select assets from an index with the stub provider")
    s.add_argument("scene")
    s.add_argument("index")
    s.set_defaults(func=cmd_retrieve)

    s = sub.add_parser("metrics", parents=[common], help="OOB / OIS / IWG / class diversity report")
    s.add_argument("layouts", nargs="+", help="layout or ground-truth files, or directories of them")
    s.add_argument("--gt", help="ground-truth file or directory, matched by stage_id")
    s.add_argument("--iwg-mode", choices=[m.replace("_", "-") for m in IWG_MODES] + list(IWG_MODES))
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("validate", parents=[common], help="lint a directory of stagelayout files")
    s.add_argument("directory")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("render", parents=[common], help="SVG top or front view of a layout")
    s.add_argument("layout")
    s.add_argument("--mode", choices=["top", "front"], default="top")
    s.add_argument("--occlusions")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("pipeline", parents=[common], help="scene spec (or directory of them) to all artifacts")
    s.add_argument("scene")
    s.add_argument("--gt", help="ground-truth file (directory in batch mode, matched by file name)")
    s.add_argument("--index", help="asset index for retrieval")
    s.add_argument("--analyzer-cmd")
    s.add_argument("--jobs", type=int, default=4)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "iwg_mode", None):
        args.iwg_mode = args.iwg_mode.replace("-", "_")
    try:
        return args.func(args)
    except (StageLayoutError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
