"""K-Means with Davies-Bouldin model selection and largest-cluster extraction."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DuplicateCentroids, TooFewVectors


@dataclass(frozen=True, eq=False)
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    dbi: float
    point_distances: np.ndarray
    inertia_history: tuple[float, ...] = ()

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


def _pairwise_sq(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (n, k)."""
    diff = x[:, None, :] - c[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[int(rng.integers(n))]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers[j] = x[idx]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def kmeans(vectors: np.ndarray, k: int, seed: int,
           max_iters: int = 300) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding.

    Iterates until assignments are stable or max_iters. Empty clusters
    are repaired by reseeding them with the point farthest from its
    current centroid. Fully deterministic for a given seed.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("vectors must be a (n, d) array")
    n = x.shape[0]
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise TooFewVectors(f"{n} vectors for k={k}")

    rng = np.random.default_rng(np.random.SeedSequence([int(seed)]))
    centers = _kmeanspp(x, k, rng)
    prev = None
    history = []
    assign = np.zeros(n, dtype=np.int64)
    point_d2 = np.zeros(n)
    converged = False
    for _ in range(max_iters):
        d2 = _pairwise_sq(x, centers)
        assign = d2.argmin(axis=1)
        point_d2 = d2[np.arange(n), assign]

        counts = np.bincount(assign, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            donor_ok = counts[assign] > 1
            far = int(np.where(donor_ok, point_d2, -np.inf).argmax())
            counts[assign[far]] -= 1
            counts[empty] += 1
            assign[far] = empty
            centers[empty] = x[far]
            point_d2[far] = 0.0

        history.append(float(point_d2.sum()))
        if prev is not None and np.array_equal(assign, prev):
            converged = True
            break
        prev = assign.copy()
        for j in range(k):
            centers[j] = x[assign == j].mean(axis=0)

    if not converged:
        # Hit the iteration cap: re-derive assignments for the final
        # centers so the nearest-centroid postcondition holds.
        d2 = _pairwise_sq(x, centers)
        assign = d2.argmin(axis=1)
        point_d2 = d2[np.arange(n), assign]
        history.append(float(point_d2.sum()))

    try:
        dbi = _dbi(x, centers, assign)
    except DuplicateCentroids:
        dbi = math.inf
    return ClusterModel(
        k=k, centroids=centers, assignments=assign.astype(np.int32),
        inertia=history[-1], dbi=dbi, point_distances=np.sqrt(point_d2),
        inertia_history=tuple(history),
    )


def _dbi(x: np.ndarray, centers: np.ndarray, assign: np.ndarray) -> float:
    k = centers.shape[0]
    scatter = np.empty(k)
    for j in range(k):
        members = x[assign == j]
        scatter[j] = np.linalg.norm(members - centers[j], axis=1).mean()
    sep = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
    off = ~np.eye(k, dtype=bool)
    if np.any(sep[off] == 0.0):
        raise DuplicateCentroids("coincident centroids")
    ratio = (scatter[:, None] + scatter[None, :]) / np.where(off, sep, np.inf)
    return float(np.max(np.where(off, ratio, -np.inf), axis=1).mean())


def davies_bouldin(vectors: np.ndarray, model: ClusterModel) -> float:
    """Davies-Bouldin index: mean over clusters of the worst
    (s_i + s_j) / d(c_i, c_j) ratio, with mean-distance scatter."""
    x = np.asarray(vectors, dtype=np.float64)
    return _dbi(x, np.asarray(model.centroids, dtype=np.float64),
                np.asarray(model.assignments))


def derive_seed(*parts: int) -> int:
    """Stable 64-bit seed derived from integer components."""
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, np.uint64)[0])


def select_k(vectors: np.ndarray, k_set, seed: int,
             max_iters: int = 300) -> ClusterModel:
    """Run kmeans for each k and keep the model with minimum DBI.

    Each k gets a seed derived from (seed, k), so the result does not
    depend on the iteration order of k_set; ties go to the smaller k.
    """
    ks = sorted(int(k) for k in k_set)
    if not ks:
        raise ValueError("k_set must be nonempty")
    best = None
    for k in ks:
        model = kmeans(vectors, k, derive_seed(seed, k), max_iters=max_iters)
        if best is None or model.dbi < best.dbi:
            best = model
    return best


def largest_cluster(model: ClusterModel) -> tuple[int, np.ndarray]:
    """Largest cluster id and its member indices in ascending order.

    Ties on size break to the smaller mean member-to-centroid distance,
    then to the smaller cluster id.
    """
    assign = np.asarray(model.assignments)
    counts = np.bincount(assign, minlength=model.k)
    best = None
    for j in range(model.k):
        if counts[j] == 0:
            continue
        scatter = float(model.point_distances[assign == j].mean())
        key = (-int(counts[j]), scatter, j)
        if best is None or key < best[0]:
            best = (key, j)
    cid = best[1]
    return cid, np.flatnonzero(assign == cid)
