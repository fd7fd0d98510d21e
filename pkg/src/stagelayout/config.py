"""Pipeline configuration: one JSON file, every key optional, unknown keys rejected."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .geometry import StageConfig
from .metrics import IWG_MODES
from .retrieval import RETRIEVAL_THRESHOLD, TOP_K

CONFIG_ENV = "STAGELAYOUT_CONFIG"


@dataclass
class PlacementConfig:
    cell_size: float = 1.0
    repair: bool = True
    seed: int = 0


@dataclass
class RetrievalConfig:
    threshold: float = RETRIEVAL_THRESHOLD
    top_k: int = TOP_K
    weights: tuple[float, float] = (1.0, 1.0)
    threshold_target: str = "image"


@dataclass
class PipelineConfig:
    stage: StageConfig = field(default_factory=StageConfig)
    placement: PlacementConfig = field(default_factory=PlacementConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    iwg_mode: str = "union"
    output_dir: str = "out"


def _check_keys(raw: Any, allowed: set[str], where: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    return raw


def _names(cls) -> set[str]:
    return {f.name for f in fields(cls)}


def _point(value: Any, eye_height: float, where: str) -> tuple[float, float, float]:
    if not isinstance(value, list) or len(value) not in (2, 3):
        raise ConfigError(f"{where}: expected [x, y] or [x, y, z]")
    pt = [float(v) for v in value]
    if len(pt) == 2:
        pt.append(eye_height)
    return tuple(pt)


def config_from_dict(raw: Any) -> PipelineConfig:
    raw = _check_keys(raw, _names(PipelineConfig), "config")
    try:
        st = dict(_check_keys(raw.get("stage", {}), _names(StageConfig), "stage"))
        eye = float(st.get("eye_height", StageConfig.eye_height))
        for key in ("audience_left", "audience_right"):
            if key in st:
                st[key] = _point(st[key], eye, f"stage.{key}")
        stage = StageConfig(**st)
        placement = PlacementConfig(**_check_keys(raw.get("placement", {}), _names(PlacementConfig), "placement"))
        rt = dict(_check_keys(raw.get("retrieval", {}), _names(RetrievalConfig), "retrieval"))
        if "weights" in rt:
            rt["weights"] = tuple(float(w) for w in rt["weights"])
            if len(rt["weights"]) != 2:
                raise ConfigError("retrieval.weights: expected two numbers")
        retrieval = RetrievalConfig(**rt)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    if retrieval.threshold_target not in ("combined", "image"):
        raise ConfigError("retrieval.threshold_target must be 'combined' or 'image'")
    if not placement.cell_size > 0:
        raise ConfigError("placement.cell_size must be positive")
    cfg = PipelineConfig(
        stage=stage,
        placement=placement,
        retrieval=retrieval,
        iwg_mode=raw.get("iwg_mode", "union"),
        output_dir=str(raw.get("output_dir", "out")),
    )
    if cfg.iwg_mode not in IWG_MODES:
        raise ConfigError(f"iwg_mode must be one of {', '.join(IWG_MODES)}")
    return cfg


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Read ``path``, else ``$STAGELAYOUT_CONFIG``, else defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return PipelineConfig()
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(raw)
