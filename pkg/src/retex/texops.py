"""Tiling output and cluster-overlay rendering."""

import numpy as np

from .cluster import ClusterModel
from .raster import RasterImage
from .sampler import Candidate
from .selector import SelectionResult

# Saturated hues by cluster id; none of them reuse the marker colors below.
CLUSTER_PALETTE = (
    (255, 140, 0),
    (0, 200, 200),
    (200, 0, 200),
    (150, 255, 0),
    (255, 0, 140),
    (0, 140, 255),
    (255, 220, 0),
    (140, 0, 255),
)

PLAIN_COLOR = (255, 0, 0)
WEIGHTED_COLOR = (0, 0, 255)
MEDIAN_COLOR = (0, 255, 0)


def tile_texture(tex: RasterImage, out_w: int, out_h: int) -> RasterImage:
    """Repeat the texture over an out_w x out_h canvas (modular indexing)."""
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be >= 1")
    ys = np.arange(out_h) % tex.height
    xs = np.arange(out_w) % tex.width
    return RasterImage(tex.pixels[np.ix_(ys, xs)])


def _draw_dot(px: np.ndarray, x: int, y: int, color) -> None:
    h, w = px.shape[:2]
    y0, y1 = max(y - 1, 0), min(y + 2, h)
    x0, x1 = max(x - 1, 0), min(x + 2, w)
    px[y0:y1, x0:x1] = color


def _draw_rect(px: np.ndarray, rect, color) -> None:
    h, w = px.shape[:2]
    x0, y0, rw, rh = rect
    x1, y1 = x0 + rw, y0 + rh
    cx0, cx1 = max(x0, 0), min(x1, w)
    cy0, cy1 = max(y0, 0), min(y1, h)
    if 0 <= y0 < h:
        px[y0, cx0:cx1] = color
    if 0 <= y1 - 1 < h:
        px[y1 - 1, cx0:cx1] = color
    if 0 <= x0 < w:
        px[cy0:cy1, x0] = color
    if 0 <= x1 - 1 < w:
        px[cy0:cy1, x1 - 1] = color


def render_cluster_overlay(
    img: RasterImage,
    candidates: list[Candidate],
    model: ClusterModel | None,
    result: SelectionResult | None,
) -> RasterImage:
    """Draw candidate centers colored by cluster plus the chosen rectangles.

    Red outlines the minimum-distance candidate, blue the minimum
    weighted distance, green the median (reference only). Pixels outside
    dots and outlines are untouched.
    """
    px = img.pixels.copy()
    if candidates:
        assign = None if model is None else np.asarray(model.assignments)
        for cand in candidates:
            cid = 0 if assign is None else int(assign[cand.index])
            color = CLUSTER_PALETTE[cid % len(CLUSTER_PALETTE)]
            _draw_dot(px, cand.center[0], cand.center[1], color)
    if result is not None:
        for idx, color in (
            (result.chosen_median, MEDIAN_COLOR),
            (result.chosen_plain, PLAIN_COLOR),
            (result.chosen_weighted, WEIGHTED_COLOR),
        ):
            _draw_rect(px, candidates[idx].rect(), color)
    return RasterImage(px)
