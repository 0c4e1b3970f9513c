"""Mass random sampling of square candidate textures on a mask.

Each attempt draws a center uniformly from the true mask pixels and a
side length uniformly from [min_side, max_side]. Crops that leave the
image or cover too little of the mask are discarded; both values are
re-drawn on the next attempt. All randomness for attempt t is the t-th
element of a stream fully determined by the seed, so the accepted
sequence is independent of evaluation order or worker count.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AcceptanceFloor, DimensionMismatch, MaskEmpty, OutOfBounds
from .raster import MaskRaster, RasterImage, crop


@dataclass(frozen=True)
class SamplerConfig:
    sample_count: int = 10000
    min_side: int = 16
    max_side: int = 48
    coverage_threshold: float = 0.9
    max_attempts: int = 200000
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.min_side <= self.max_side:
            raise ValueError("require 1 <= min_side <= max_side")
        if not 0.0 < self.coverage_threshold <= 1.0:
            raise ValueError("coverage_threshold must be in (0, 1]")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.max_attempts < self.sample_count:
            raise ValueError("max_attempts must be >= sample_count")


@dataclass(frozen=True, eq=False)
class Candidate:
    """One accepted square crop and its geometry."""

    index: int
    center: tuple[int, int]
    side: int
    patch: RasterImage
    subarea_id: int
    mask_coverage: float

    def rect(self) -> tuple[int, int, int, int]:
        """Half-open crop rectangle (x0, y0, w, h) in source coordinates."""
        x0 = self.center[0] - self.side // 2
        y0 = self.center[1] - self.side // 2
        return x0, y0, self.side, self.side


def coverage_fraction(mask: MaskRaster, x: int, y: int, side: int) -> float:
    """Fraction of true mask bits inside the side x side rectangle at (x, y)."""
    if x < 0 or y < 0 or x + side > mask.width or y + side > mask.height:
        raise OutOfBounds(
            f"rectangle ({x},{y},{side}) exceeds mask {mask.width}x{mask.height}"
        )
    count = int(mask.bits[y : y + side, x : x + side].sum())
    return count / (side * side)


def sample_candidates(
    img: RasterImage,
    mask: MaskRaster,
    cfg: SamplerConfig,
    subarea_id: int = 0,
) -> list[Candidate]:
    """Draw up to cfg.sample_count accepted candidates, seeded by cfg.seed.

    Raises MaskEmpty if the mask has no true pixels, and AcceptanceFloor
    if fewer than 10% of max_attempts were accepted and the target count
    was not reached.
    """
    if (img.width, img.height) != (mask.width, mask.height):
        raise DimensionMismatch(
            f"image {img.width}x{img.height} vs mask {mask.width}x{mask.height}"
        )
    true_flat = np.flatnonzero(mask.bits)
    if true_flat.size == 0:
        raise MaskEmpty("mask has no true pixels")

    w, h = img.width, img.height
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed)]))
    pick = rng.integers(0, true_flat.size, size=cfg.max_attempts)
    sides = rng.integers(cfg.min_side, cfg.max_side + 1, size=cfg.max_attempts)

    centers = true_flat[pick]
    cy = centers // w
    cx = centers % w
    x0 = cx - sides // 2
    y0 = cy - sides // 2
    x1 = x0 + sides
    y1 = y0 + sides
    inside = (x0 >= 0) & (y0 >= 0) & (x1 <= w) & (y1 <= h)

    # Summed-area table gives every attempt's coverage in one pass.
    sat = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(mask.bits, axis=0), axis=1, out=sat[1:, 1:])
    cx0 = np.where(inside, x0, 0)
    cy0 = np.where(inside, y0, 0)
    cx1 = np.where(inside, x1, 0)
    cy1 = np.where(inside, y1, 0)
    counts = sat[cy1, cx1] - sat[cy0, cx1] - sat[cy1, cx0] + sat[cy0, cx0]
    coverage = counts / (sides * sides)
    accepted = inside & (coverage >= cfg.coverage_threshold)

    accepted_total = int(accepted.sum())
    if accepted_total < cfg.sample_count and accepted_total < cfg.max_attempts * 0.1:
        raise AcceptanceFloor(
            f"accepted {accepted_total} of {cfg.max_attempts} attempts "
            f"(target {cfg.sample_count}); mask cannot host crops"
        )

    chosen = np.flatnonzero(accepted)[: cfg.sample_count]
    out = []
    for rank, t in enumerate(chosen.tolist()):
        side = int(sides[t])
        patch = crop(img, int(x0[t]), int(y0[t]), side, side)
        out.append(
            Candidate(
                index=rank,
                center=(int(cx[t]), int(cy[t])),
                side=side,
                patch=patch,
                subarea_id=subarea_id,
                mask_coverage=float(coverage[t]),
            )
        )
    return out
