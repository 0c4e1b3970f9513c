"""Synthetic ground truth and reproducible scoring.

Replaces manual visual scoring with a mechanical oracle: on an image
built by tiling a known texture, any correct representative patch is a
cyclic translate of the tile, so the zero-normalized cross-correlation
maximized over cyclic shifts measures how well an extracted texture
represents the ground truth.
"""

from dataclasses import dataclass

import numpy as np

from .embedder import EmbedderModel, embed_batch
from .errors import OutOfBounds
from .raster import GrayRaster, MaskRaster, RasterImage, bilinear_resize, to_grayscale
from .sampler import Candidate
from .selector import SelectionResult, boundary_cosine_mean


@dataclass(frozen=True)
class Contamination:
    """Square blocks of a fixed fill color painted at seeded positions."""

    block_size: int
    count: int
    fill: tuple[int, int, int] = (32, 32, 32)


@dataclass(frozen=True, eq=False)
class SynthSpec:
    tile: RasterImage
    reps_x: int
    reps_y: int
    jitter_amp: float = 0.0
    contamination: Contamination | None = None
    seed: int = 0

    def __post_init__(self):
        if self.reps_x < 1 or self.reps_y < 1:
            raise ValueError("repetitions must be >= 1")
        if not 0.0 <= self.jitter_amp < 0.5:
            raise ValueError("jitter_amp must be in [0, 0.5)")


def generate_tiled_image(
    spec: SynthSpec,
) -> tuple[RasterImage, MaskRaster, MaskRaster, RasterImage]:
    """Build (image, all-true mask, noise mask, truth tile) from the spec.

    The image is the tile repeated reps_x x reps_y, plus uniform jitter
    of amplitude jitter_amp (in [0, 1] units), plus contamination blocks
    painted at seeded non-overlapping positions. The noise mask is true
    exactly on contaminated pixels.
    """
    t = spec.tile.pixels
    canvas = np.tile(t, (spec.reps_y, spec.reps_x, 1))
    h, w = canvas.shape[:2]
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed)]))

    img01 = canvas.astype(np.float64) / 255.0
    if spec.jitter_amp > 0:
        img01 += rng.uniform(-spec.jitter_amp, spec.jitter_amp, img01.shape)
        img01 = np.clip(img01, 0.0, 1.0)
    pixels = np.rint(img01 * 255.0).astype(np.uint8)

    noise = np.zeros((h, w), dtype=bool)
    if spec.contamination is not None and spec.contamination.count > 0:
        b = spec.contamination.block_size
        if b > min(h, w):
            raise ValueError("contamination block larger than the image")
        placed = 0
        attempts = 0
        while placed < spec.contamination.count:
            attempts += 1
            if attempts > 10000 * spec.contamination.count:
                raise ValueError("cannot place non-overlapping contamination")
            x = int(rng.integers(0, w - b + 1))
            y = int(rng.integers(0, h - b + 1))
            if noise[y:y + b, x:x + b].any():
                continue
            noise[y:y + b, x:x + b] = True
            pixels[y:y + b, x:x + b] = spec.contamination.fill
            placed += 1

    return (
        RasterImage(pixels),
        MaskRaster(np.ones((h, w), dtype=bool)),
        MaskRaster(noise),
        spec.tile,
    )


def ncc_score(extracted: RasterImage, truth_tile: RasterImage) -> float:
    """Zero-normalized cross-correlation, maximized over cyclic shifts.

    The extracted texture is resized to the truth tile's dimensions and
    compared in luminance. Constant inputs score 0 by convention.
    """
    a = to_grayscale(extracted).values
    if a.shape != (truth_tile.height, truth_tile.width):
        a = bilinear_resize(a, truth_tile.height, truth_tile.width)
    b = to_grayscale(truth_tile).values
    a = a - a.mean()
    b = b - b.mean()
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    cross = np.fft.ifft2(np.fft.fft2(a) * np.conj(np.fft.fft2(b))).real
    return float(np.clip(cross.max() / (na * nb), -1.0, 1.0))


def contamination_fraction(cand: Candidate, noise_mask: MaskRaster) -> float:
    """Fraction of the candidate's footprint covered by contamination."""
    x0, y0, w, h = cand.rect()
    if x0 < 0 or y0 < 0 or x0 + w > noise_mask.width or y0 + h > noise_mask.height:
        raise OutOfBounds(
            f"candidate rect ({x0},{y0},{w},{h}) exceeds noise mask"
        )
    count = int(noise_mask.bits[y0:y0 + h, x0:x0 + w].sum())
    return count / (w * h)


@dataclass(frozen=True)
class CorpusStats:
    """Mean selected side and mean boundary cosine similarity (percent)."""

    mean_side_plain: float
    mean_side_weighted: float
    boundary_similarity_plain: float
    boundary_similarity_weighted: float


def corpus_stats(
    results: list[SelectionResult],
    candidates_per_result: list[list[Candidate]],
) -> CorpusStats:
    """Aggregate chosen-candidate statistics across a corpus of runs."""
    if not results or len(results) != len(candidates_per_result):
        raise ValueError("results and candidate lists must align and be nonempty")
    sides_p, sides_w, cos_p, cos_w = [], [], [], []
    for res, cands in zip(results, candidates_per_result):
        members = res.member_indices.tolist()
        inv_b = {idx: 1.0 / res.boundary_factors[pos]
                 for pos, idx in enumerate(members)}
        sides_p.append(cands[res.chosen_plain].side)
        sides_w.append(cands[res.chosen_weighted].side)
        cos_p.append(inv_b[res.chosen_plain])
        cos_w.append(inv_b[res.chosen_weighted])
    return CorpusStats(
        mean_side_plain=float(np.mean(sides_p)),
        mean_side_weighted=float(np.mean(sides_w)),
        boundary_similarity_plain=float(np.mean(cos_p)) * 100.0,
        boundary_similarity_weighted=float(np.mean(cos_w)) * 100.0,
    )


def periodic_tile(side: int, seed: int, frequencies: int = 3) -> RasterImage:
    """Structured, exactly periodic test tile.

    A smooth mixture of integer-frequency sinusoids per channel, so any
    tiling of the tile is periodic with the tile's period.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 101]))
    y, x = np.mgrid[0:side, 0:side].astype(np.float64) / side
    channels = []
    for _ in range(3):
        field = np.zeros((side, side))
        for _f in range(frequencies):
            fx = int(rng.integers(0, 3))
            fy = int(rng.integers(0, 3))
            if fx == 0 and fy == 0:
                fx = 1
            phase = rng.uniform(0, 2 * np.pi)
            amp = rng.uniform(0.5, 1.0)
            field += amp * np.cos(2 * np.pi * (fx * x + fy * y) + phase)
        lo, hi = field.min(), field.max()
        field = (field - lo) / (hi - lo) if hi > lo else np.full_like(field, 0.5)
        channels.append(40 + field * 175)
    return RasterImage(np.rint(np.stack(channels, axis=2)).astype(np.uint8))


def translation_invariance_fraction(
    model: EmbedderModel,
    patches: list[RasterImage],
    seed: int = 0,
) -> float:
    """Fraction of patches embedded closer to their own cyclic translate
    than the corpus's median pairwise embedding distance.

    Patches must be fully periodic for a cyclic roll to preserve content.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 202]))
    rolled = []
    for p in patches:
        dx = int(rng.integers(1, p.width))
        dy = int(rng.integers(1, p.height))
        rolled.append(RasterImage(np.roll(p.pixels, (dy, dx), axis=(0, 1))))
    base = embed_batch(model, patches)
    moved = embed_batch(model, rolled)
    shift_dist = np.linalg.norm(base - moved, axis=1)
    pair_dist = np.linalg.norm(base[:, None, :] - base[None, :, :], axis=2)
    iu = np.triu_indices(len(patches), k=1)
    median = float(np.median(pair_dist[iu]))
    return float(np.mean(shift_dist < median))
