"""Deterministic stage layout engine and evaluation toolkit."""

__version__ = "0.1.0"

from .geometry import Aabb, ProjectionMode, StageConfig  # noqa: E402
from .placement import PlacementOptions, StageLayout, place_scene  # noqa: E402
from .schema import parse_ground_truth, parse_layout, parse_scene_spec  # noqa: E402

__all__ = [
    "Aabb",
    "PlacementOptions",
    "ProjectionMode",
    "StageConfig",
    "StageLayout",
    "parse_ground_truth",
    "parse_layout",
    "parse_scene_spec",
    "place_scene",
]
