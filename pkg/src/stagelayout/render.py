"""Deterministic SVG views of a layout: top (floor plan) and front (elevation)."""

from __future__ import annotations

from typing import Iterable
from xml.sax.saxutils import escape

from .projection import OcclusionBox
from .schema import EntityKind, LayoutFile

SCALE = 0.5  # px per cm
MARGIN = 20.0

_FILL = {EntityKind.ANCHOR: "#c9d6e8", EntityKind.NON_ANCHOR: "#e8dcc9", EntityKind.ORNAMENT: "#d5e8c9"}


def _n(v: float) -> str:
    return f"{v:.2f}"


def _rect(x: float, y: float, w: float, h: float, **attrs: str) -> str:
    extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
    return f'<rect x="{_n(x)}" y="{_n(y)}" width="{_n(w)}" height="{_n(h)}"{extra}/>'


def _label(x: float, y: float, text: str) -> str:
    return f'<text x="{_n(x)}" y="{_n(y)}" font-family="sans-serif" font-size="9">{escape(text)}</text>'


def render_svg(layout: LayoutFile, mode: str = "top", occlusions: Iterable[OcclusionBox] = ()) -> str:
    """Top view puts the back wall at the top of the image; front view puts the floor at the bottom."""
    if mode not in ("top", "front"):
        raise ValueError(f"mode must be 'top' or 'front', got {mode!r}")
    n = layout.stage_size
    size = n * SCALE + 2 * MARGIN

    def px(x: float) -> float:
        return MARGIN + x * SCALE

    def py(v: float) -> float:
        return MARGIN + (n - v) * SCALE

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(size)}" height="{_n(size)}" '
        f'viewBox="0 0 {_n(size)} {_n(size)}">',
        f"<title>{escape(layout.stage_id)} ({mode})</title>",
        _rect(px(0), py(n), n * SCALE, n * SCALE, fill="none", stroke="#000", stroke_width="1.5"),
    ]
    if mode == "front":
        for occ in occlusions:
            out.append(
                _rect(
                    px(occ.wall_x0), py(occ.wall_h1),
                    (occ.wall_x1 - occ.wall_x0) * SCALE, (occ.wall_h1 - occ.wall_h0) * SCALE,
                    fill="#888", fill_opacity="0.25", stroke="#555", stroke_dasharray="4 2",
                )
            )
    for e in layout.entities:
        b = e.box
        if mode == "top":
            x, y, w, h = px(b.x0), py(b.y1), b.length * SCALE, b.width * SCALE
        else:
            x, y, w, h = px(b.x0), py(b.h1), b.length * SCALE, b.height * SCALE
        out.append(_rect(x, y, w, h, fill=_FILL[e.kind], stroke="#333", stroke_width="0.8"))
        out.append(_label(x + 2, y + 10, e.id))
    out.append("</svg>")
    return "\n".join(out) + "\n"
