"""Discovery of facade subareas separated by cornice-class pixels.

Subareas are maximal 4-connected components of background-class pixels,
found with a breadth-first flood fill. All non-background classes act as
barriers; the separator class set is carried only so callers can report
which class splits the raster.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NoBackgroundPixels, PixelOutOfBounds, UnknownClass
from .raster import LabelRaster, MaskRaster


@dataclass(frozen=True, eq=False)
class Subarea:
    """One connected background component.

    ``member_pixels`` is an (n, 2) array of (x, y) coordinates in
    row-major scan order; ``bounding_box`` is (x, y, w, h).
    """

    id: int
    member_pixels: np.ndarray
    bounding_box: tuple[int, int, int, int]

    def __post_init__(self):
        px = np.asarray(self.member_pixels, dtype=np.int64)
        if px.ndim != 2 or px.shape[1] != 2 or px.shape[0] == 0:
            raise ValueError("member_pixels must be a nonempty (n, 2) array")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "member_pixels", px)

    @property
    def pixel_count(self) -> int:
        return self.member_pixels.shape[0]


def _flood(component_seed: tuple[int, int], open_cells: np.ndarray) -> np.ndarray:
    """Breadth-first fill from a seed over the open-cell grid.

    Frontier expansion is vectorized: each BFS level grows the component
    by all 4-neighbors that are open and unvisited.
    """
    comp = np.zeros_like(open_cells)
    frontier = np.zeros_like(open_cells)
    frontier[component_seed] = True
    while frontier.any():
        comp |= frontier
        grown = np.zeros_like(open_cells)
        grown[:-1, :] |= frontier[1:, :]
        grown[1:, :] |= frontier[:-1, :]
        grown[:, :-1] |= frontier[:, 1:]
        grown[:, 1:] |= frontier[:, :-1]
        frontier = grown & open_cells & ~comp
    return comp


def find_subareas(
    labels: LabelRaster,
    background_class: int,
    separator_classes: frozenset[int] | set[int] = frozenset(),
) -> list[Subarea]:
    """Split the background class into 4-connected components.

    Components are ordered by descending pixel count, ties broken by the
    smallest (y, x) of the bounding-box top-left corner, and numbered
    0..n-1 in that order.
    """
    background_class = int(background_class)
    if background_class not in labels.class_names:
        raise UnknownClass(f"class id {background_class} not in class map")
    separators = {int(c) for c in separator_classes}
    if background_class in separators:
        raise ValueError("background class cannot be a separator class")

    open_cells = labels.labels == background_class
    if not open_cells.any():
        raise NoBackgroundPixels("label raster has no background-class pixels")

    components = []
    remaining = open_cells.copy()
    while remaining.any():
        seed_flat = int(np.argmax(remaining))
        seed = (seed_flat // remaining.shape[1], seed_flat % remaining.shape[1])
        comp = _flood(seed, open_cells)
        components.append(comp)
        remaining &= ~comp

    def sort_key(comp: np.ndarray):
        ys, xs = np.nonzero(comp)
        return (-len(ys), int(ys.min()), int(xs.min()))

    components.sort(key=sort_key)

    subareas = []
    for sid, comp in enumerate(components):
        ys, xs = np.nonzero(comp)
        bbox = (
            int(xs.min()),
            int(ys.min()),
            int(xs.max() - xs.min() + 1),
            int(ys.max() - ys.min() + 1),
        )
        subareas.append(Subarea(sid, np.column_stack([xs, ys]), bbox))
    return subareas


def subarea_mask(sub: Subarea, width: int, height: int) -> MaskRaster:
    """Full-size mask that is true exactly on the subarea's member pixels."""
    xs = sub.member_pixels[:, 0]
    ys = sub.member_pixels[:, 1]
    if xs.min() < 0 or ys.min() < 0 or xs.max() >= width or ys.max() >= height:
        raise PixelOutOfBounds(
            f"subarea {sub.id} has pixels outside {width}x{height}"
        )
    bits = np.zeros((height, width), dtype=bool)
    bits[ys, xs] = True
    return MaskRaster(bits)


def min_extractable_pixels(min_side: int) -> int:
    """Pixel-count floor below which a subarea is skipped downstream.

    A subarea smaller than twice the minimal crop area cannot host
    sampling at a useful acceptance rate.
    """
    return 2 * min_side * min_side
