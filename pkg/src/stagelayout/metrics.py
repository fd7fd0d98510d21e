"""Stage layout metrics: out-of-bound, overlap, ground-truth intersection, class diversity.

Per-stage values are sums (cm^3 internally, m^3 in reports); aggregates are
plain means over stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Protocol, Sequence

from .errors import EmptyError
from .geometry import Aabb, StageConfig, intersection_volume, out_of_bound_volume, to_m3, union_intersection_volume
from .schema import FORMAT_TAG

UNION = "union"
PAIRWISE_SUM = "pairwise_sum"
IWG_MODES = (UNION, PAIRWISE_SUM)


def metric_oob(boxes: Iterable[Aabb], cfg: StageConfig) -> float:
    """Total volume outside the stage cube, m^3."""
    return to_m3(math.fsum(out_of_bound_volume(b, cfg) for b in boxes))


def metric_ois(boxes: Sequence[Aabb]) -> float:
    """Sum of pairwise overlap volumes over unordered pairs, m^3."""
    return to_m3(math.fsum(intersection_volume(a, b) for a, b in combinations(boxes, 2)))


def metric_iwg(generated: Sequence[Aabb], ground_truth: Sequence[Aabb], mode: str = UNION) -> float:
    if mode == UNION:
        return to_m3(union_intersection_volume(generated, ground_truth))
    if mode == PAIRWISE_SUM:
        return to_m3(math.fsum(intersection_volume(g, t) for g in generated for t in ground_truth))
    raise ValueError(f"unknown iwg mode {mode!r}")


class ClipSimProvider(Protocol):
    """Hook for an external text/image similarity model; no implementation ships."""

    def score(self, text: str, image_path: str) -> float: ...


def clip_sim(provider: ClipSimProvider, pairs: Iterable[tuple[str, str]]) -> float:
    """Mean provider score over (script text, rendered image path) pairs."""
    scores = [float(provider.score(t, p)) for t, p in pairs]
    if not scores:
        raise EmptyError("clip_sim needs at least one pair")
    return math.fsum(scores) / len(scores)


def class_count(categories: Iterable[str]) -> int:
    return len(set(categories))


def metric_class_diversity(stages: Sequence[tuple[str, Sequence[str]]]) -> tuple[float, int, int]:
    """(mean, min, max) of per-stage unique category counts."""
    if not stages:
        raise EmptyError("class diversity needs at least one stage")
    counts = [class_count(cats) for _, cats in stages]
    return math.fsum(counts) / len(counts), min(counts), max(counts)


@dataclass(frozen=True)
class StageInput:
    stage_id: str
    entities: Sequence[tuple[str, Aabb]]  # (category, box)
    ground_truth: Sequence[tuple[str, Aabb]] | None = None


@dataclass(frozen=True)
class StageMetrics:
    stage_id: str
    oob: float
    ois: float
    iwg: float | None
    class_count: int


@dataclass
class MetricsReport:
    per_stage: list[StageMetrics]
    iwg_mode: str
    mean_oob: float = field(init=False)
    mean_ois: float = field(init=False)
    mean_iwg: float | None = field(init=False)
    mean_classes: float = field(init=False)
    min_classes: int = field(init=False)
    max_classes: int = field(init=False)

    def __post_init__(self) -> None:
        if not self.per_stage:
            raise EmptyError("report needs at least one stage")
        rows = self.per_stage
        n = len(rows)
        self.mean_oob = math.fsum(r.oob for r in rows) / n
        self.mean_ois = math.fsum(r.ois for r in rows) / n
        iwgs = [r.iwg for r in rows if r.iwg is not None]
        self.mean_iwg = math.fsum(iwgs) / len(iwgs) if iwgs else None
        counts = [r.class_count for r in rows]
        self.mean_classes = math.fsum(counts) / n
        self.min_classes = min(counts)
        self.max_classes = max(counts)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "kind": "metrics",
            "units": "m3",
            "iwg_mode": self.iwg_mode,
            "per_stage": [
                {"stage_id": r.stage_id, "oob": r.oob, "ois": r.ois, "iwg": r.iwg, "class_count": r.class_count}
                for r in self.per_stage
            ],
            "aggregate": {
                "stages": len(self.per_stage),
                "mean_oob": self.mean_oob,
                "mean_ois": self.mean_ois,
                "mean_iwg": self.mean_iwg,
                "mean_class_diversity": self.mean_classes,
                "min_classes": self.min_classes,
                "max_classes": self.max_classes,
            },
        }

    def format_table(self) -> str:
        """Aligned text tables, three significant figures."""

        def g(v: float | None) -> str:
            return "-" if v is None else f"{v:.3g}"

        volume = [("Stage", "Out-of-Bound(m3)", "OIS(m3)", "IWG(m3)", "Classes")]
        for r in self.per_stage:
            volume.append((r.stage_id, g(r.oob), g(r.ois), g(r.iwg), str(r.class_count)))
        volume.append(("mean", g(self.mean_oob), g(self.mean_ois), g(self.mean_iwg), g(self.mean_classes)))
        diversity = [
            ("Class Diversity", "Min/Max Classes"),
            (g(self.mean_classes), f"{self.min_classes}/{self.max_classes}"),
        ]
        return _table(volume) + "\n" + _table(diversity)


def _table(rows: list[tuple[str, ...]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for k, r in enumerate(rows):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def stage_metrics(stage: StageInput, cfg: StageConfig, iwg_mode: str = UNION) -> StageMetrics:
    boxes = [b for _, b in stage.entities]
    iwg = None
    if stage.ground_truth is not None:
        iwg = metric_iwg(boxes, [b for _, b in stage.ground_truth], iwg_mode)
    return StageMetrics(
        stage_id=stage.stage_id,
        oob=metric_oob(boxes, cfg),
        ois=metric_ois(boxes),
        iwg=iwg,
        class_count=class_count(c for c, _ in stage.entities),
    )


def build_report(stages: Sequence[StageInput], cfg: StageConfig, iwg_mode: str = UNION) -> MetricsReport:
    if iwg_mode not in IWG_MODES:
        raise ValueError(f"unknown iwg mode {iwg_mode!r}")
    if not stages:
        raise EmptyError("report needs at least one stage")
    rows = [stage_metrics(s, cfg, iwg_mode) for s in sorted(stages, key=lambda s: s.stage_id)]
    return MetricsReport(rows, iwg_mode)
