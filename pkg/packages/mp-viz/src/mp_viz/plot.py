"""
MP-Viz Plot

Standalone SVG scatter plots of 2-D maps. One <circle> per candidate, colour
by cluster label (fixed 12-colour palette) or by a numeric column (linear
ramp over a nine-anchor viridis table). Coordinates are printed with two
decimals, so a fixed input always renders to the same bytes.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .atomic import atomic_write_text
from .errors import ConfigError, DimensionMismatch, NotTwoDimensional

MARGIN = 0.05

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
)

VIRIDIS_ANCHORS = (
    (68, 1, 84),
    (71, 44, 122),
    (59, 81, 139),
    (44, 113, 142),
    (33, 144, 141),
    (39, 173, 129),
    (92, 200, 99),
    (170, 220, 50),
    (253, 231, 37),
)


@dataclass(frozen=True)
class PlotOptions:
    width: int = 800
    height: int = 600
    radius: float = 3.0
    title: Optional[str] = None
    legend: bool = True

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"plot size must be positive, got {self.width}x{self.height}")
        if not self.radius > 0:
            raise ConfigError(f"point radius must be positive, got {self.radius}")


def _fmt(value: float) -> str:
    text = f"{value:.2f}"
    return "0.00" if text == "-0.00" else text


def ramp_color(t: float) -> str:
    """Colour at position t in [0, 1] of the viridis ramp."""
    t = min(max(float(t), 0.0), 1.0)
    pos = t * (len(VIRIDIS_ANCHORS) - 1)
    i = min(int(pos), len(VIRIDIS_ANCHORS) - 2)
    f = pos - i
    lo, hi = VIRIDIS_ANCHORS[i], VIRIDIS_ANCHORS[i + 1]
    r, g, b = (int(round(a + f * (c - a))) for a, c in zip(lo, hi))
    return f"#{r:02x}{g:02x}{b:02x}"


def label_color(label: int) -> str:
    return PALETTE[int(label) % len(PALETTE)]


def viewport(coords: np.ndarray, width: int, height: int) -> np.ndarray:
    """Map points into the canvas with 5% margins and equal x/y scaling; y points up."""
    Y = np.asarray(coords, dtype=np.float64)
    mx, my = MARGIN * width, MARGIN * height
    avail_w, avail_h = width - 2 * mx, height - 2 * my
    lo = Y.min(axis=0)
    span = Y.max(axis=0) - lo
    scales = [avail_w / span[0] if span[0] > 0 else np.inf,
              avail_h / span[1] if span[1] > 0 else np.inf]
    scale = min(scales)
    if not np.isfinite(scale):
        scale = 1.0
    px = mx + 0.5 * (avail_w - span[0] * scale) + (Y[:, 0] - lo[0]) * scale
    py = my + 0.5 * (avail_h - span[1] * scale) + (Y[:, 1] - lo[1]) * scale
    return np.column_stack([px, height - py])


def _legend_items(
    labels: Optional[np.ndarray], values: Optional[np.ndarray], value_name: Optional[str]
) -> List[Tuple[str, str]]:
    if labels is not None:
        return [(label_color(c), f"cluster {int(c)}") for c in np.unique(labels)]
    if values is not None:
        lo, hi = float(values.min()), float(values.max())
        steps = len(VIRIDIS_ANCHORS)
        items = []
        for i in range(steps):
            t = i / (steps - 1)
            items.append((ramp_color(t), _fmt(lo + t * (hi - lo))))
        if value_name:
            items[0] = (items[0][0], f"{value_name} {items[0][1]}")
        return items
    return []


def render_svg(
    coords: np.ndarray,
    ids: Sequence[str],
    labels: Optional[Sequence[int]] = None,
    values: Optional[Sequence[float]] = None,
    value_name: Optional[str] = None,
    options: PlotOptions = PlotOptions(),
) -> str:
    Y = np.asarray(coords, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != 2:
        raise NotTwoDimensional(Y.shape[1] if Y.ndim == 2 else Y.ndim)
    n = Y.shape[0]
    if len(ids) != n:
        raise DimensionMismatch((n,), (len(ids),))
    lab = None if labels is None else np.asarray(labels)
    val = None if values is None else np.asarray(values, dtype=np.float64)
    if lab is not None and lab.shape[0] != n:
        raise DimensionMismatch((n,), lab.shape)
    if val is not None and val.shape[0] != n:
        raise DimensionMismatch((n,), val.shape)

    if lab is not None:
        fills = [label_color(c) for c in lab]
    elif val is not None:
        lo, span = val.min(), val.max() - val.min()
        fills = [ramp_color((v - lo) / span if span > 0 else 0.5) for v in val]
    else:
        fills = [PALETTE[0]] * n

    w, h = options.width, options.height
    svg = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(w),
            "height": str(h),
            "viewBox": f"0 0 {w} {h}",
        },
    )
    ET.SubElement(svg, "rect", {"x": "0", "y": "0", "width": str(w), "height": str(h), "fill": "#ffffff"})
    if options.title:
        title = ET.SubElement(
            svg, "text", {"x": _fmt(w / 2), "y": _fmt(MARGIN * h * 0.7), "text-anchor": "middle",
                          "font-family": "sans-serif", "font-size": "12"},
        )
        title.text = options.title

    points = ET.SubElement(svg, "g", {"class": "points", "stroke": "none"})
    r = _fmt(options.radius)
    for cid, (px, py), fill in zip(ids, viewport(Y, w, h), fills):
        circle = ET.SubElement(
            points, "circle", {"cx": _fmt(px), "cy": _fmt(py), "r": r, "fill": fill}
        )
        ET.SubElement(circle, "title").text = str(cid)

    items = _legend_items(lab, val, value_name) if options.legend else []
    if items:
        legend = ET.SubElement(svg, "g", {"class": "legend", "font-family": "sans-serif", "font-size": "10"})
        x0, y0, row = w - 120, MARGIN * h, 14
        for i, (color, text) in enumerate(items):
            y = y0 + i * row
            ET.SubElement(legend, "rect", {"x": _fmt(x0), "y": _fmt(y), "width": "10", "height": "10", "fill": color})
            label = ET.SubElement(legend, "text", {"x": _fmt(x0 + 14), "y": _fmt(y + 9)})
            label.text = text

    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(svg, encoding="unicode") + "\n"


def save_svg(path: Union[str, Path], svg: str) -> Path:
    return atomic_write_text(path, svg)
