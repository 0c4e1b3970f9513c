"""Final candidate selection by plain and weighted distance to the cluster center.

The weighted distance scales the embedding distance by a width factor
(reciprocal of the crop side, favoring larger crops) and a boundary
similarity factor (reciprocal mean cosine of opposite grayscale
boundaries, favoring tileable crops).
"""

from dataclasses import dataclass

import numpy as np

from .cluster import ClusterModel, largest_cluster
from .errors import DegeneratePatch, DimensionMismatch
from .raster import GrayRaster, to_grayscale
from .sampler import Candidate

# Cosines are clamped below by this before inversion; opposite boundaries
# of a nonnegative grayscale patch can otherwise have zero cosine sum.
COSINE_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class SelectionResult:
    """Per-member selection arrays plus the chosen candidate indices.

    All arrays are aligned with ``member_indices`` (candidate indices of
    the largest cluster, ascending). The stored identities
    ``weights = width_factors * boundary_factors`` and
    ``weighted_distances = distances * weights`` hold exactly.
    """

    member_indices: np.ndarray
    distances: np.ndarray
    width_factors: np.ndarray
    boundary_factors: np.ndarray
    weights: np.ndarray
    weighted_distances: np.ndarray
    chosen_plain: int
    chosen_weighted: int
    chosen_median: int


def center_distances(embeddings: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Euclidean distance of each embedding to the cluster center."""
    emb = np.asarray(embeddings, dtype=np.float64)
    ctr = np.asarray(center, dtype=np.float64)
    if emb.ndim != 2 or ctr.ndim != 1 or emb.shape[1] != ctr.shape[0]:
        raise DimensionMismatch(
            f"embeddings {emb.shape} incompatible with center {ctr.shape}"
        )
    return np.linalg.norm(emb - ctr[None, :], axis=1)


def width_factor(cand: Candidate) -> float:
    """1 / sqrt(width * height); for square candidates simply 1 / side."""
    return 1.0 / float(cand.side)


def _clamped_cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    cos = float(np.dot(u, v) / (nu * nv)) if nu > 0 and nv > 0 else 0.0
    return min(max(cos, COSINE_FLOOR), 1.0)


def boundary_factor(gray: GrayRaster) -> float:
    """2 / (cos(top, bottom) + cos(left, right)) on the grayscale patch."""
    if gray.width < 2 or gray.height < 2:
        raise DegeneratePatch("boundary comparison needs at least 2x2 pixels")
    g = gray.values
    cos_rows = _clamped_cosine(g[0, :], g[-1, :])
    cos_cols = _clamped_cosine(g[:, 0], g[:, -1])
    return 2.0 / (cos_rows + cos_cols)


def boundary_cosine_mean(gray: GrayRaster) -> float:
    """Mean of the two clamped boundary cosines (equals 1 / boundary_factor)."""
    return 1.0 / boundary_factor(gray)


def weight(t: float, b: float) -> float:
    """Combined weight value: width factor times boundary factor."""
    return t * b


def weighted_distance(d: float, v: float) -> float:
    """Distance to the cluster center scaled by the weight value."""
    return d * v


def select(
    candidates: list[Candidate],
    embeddings: np.ndarray,
    model: ClusterModel,
) -> SelectionResult:
    """Restrict to the largest cluster and pick the final candidates.

    chosen_plain minimizes the embedding distance, chosen_weighted the
    weighted distance; chosen_median sits at the median distance rank and
    is informational only. Argmin ties break to the smaller candidate
    index.
    """
    cid, members = largest_cluster(model)
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.shape[0] != len(candidates):
        raise DimensionMismatch(
            f"{len(candidates)} candidates vs {emb.shape[0]} embeddings"
        )
    d = center_distances(emb[members], model.centroids[cid])
    t = np.array([width_factor(candidates[i]) for i in members])
    b = np.array(
        [boundary_factor(to_grayscale(candidates[i].patch)) for i in members]
    )
    v = t * b
    w = d * v

    plain = int(members[int(np.argmin(d))])
    weighted = int(members[int(np.argmin(w))])
    # Median rank of the distances; ties resolved by member order.
    order = np.lexsort((members, d))
    median = int(members[order[(len(members) - 1) // 2]])

    return SelectionResult(
        member_indices=members.astype(np.int64),
        distances=d,
        width_factors=t,
        boundary_factors=b,
        weights=v,
        weighted_distances=w,
        chosen_plain=plain,
        chosen_weighted=weighted,
        chosen_median=median,
    )
