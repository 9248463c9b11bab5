"""Exact kNN graph construction and the symmetrized fuzzy similarity graph.

The high-dimensional affinities that drive the 2D layout come from a
two-stage construction: an exact Euclidean k-nearest-neighbor graph, then a
per-point Gaussian calibration (``rho``/``sigma``) whose directed weights are
combined by a fuzzy union into symmetric edge weights in (0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

DEFAULT_N_NEIGHBORS = 15

# Smooth-kNN calibration: bisection tolerance on the weight-sum residual and
# the clamp range for sigma, expressed relative to the mean neighbor distance.
SMOOTH_K_TOL = 1e-5
SMOOTH_K_MAX_ITER = 64
SIGMA_MIN_SCALE = 1e-3
SIGMA_MAX_SCALE = 1e3

# Symmetrized edges below this weight are dropped.
EDGE_EPS = 1e-4

# Row-chunk size for the pairwise-distance sweep, bounds peak memory.
_CHUNK = 512


@dataclass(frozen=True)
class NeighborGraph:
    """Exact k-nearest neighbors per point, distances ascending, no self."""

    k: int
    indices: np.ndarray    # (n, k) int64, ties broken toward the smaller index
    distances: np.ndarray  # (n, k) float64, ascending per row

    @property
    def n(self) -> int:
        return self.indices.shape[0]


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected fuzzy graph; each pair (i < j) appears exactly once."""

    n: int
    heads: np.ndarray    # (m,) int64, head < tail
    tails: np.ndarray    # (m,) int64
    weights: np.ndarray  # (m,) float64 in (0, 1]
    rho: np.ndarray      # (n,) distance to nearest neighbor
    sigma: np.ndarray    # (n,) positive bandwidth

    @property
    def n_edges(self) -> int:
        return self.heads.shape[0]

    def adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR-style (offsets, neighbor indices) over both edge directions.

        Neighbor lists are sorted, which the optimizer relies on for binary
        search during negative-sample rejection.
        """
        src = np.concatenate([self.heads, self.tails])
        dst = np.concatenate([self.tails, self.heads])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        offsets = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(offsets, src + 1, 1)
        np.cumsum(offsets, out=offsets)
        return offsets, dst.astype(np.int64)


def build_knn(ds_or_features, k: int) -> NeighborGraph:
    """Exact Euclidean kNN per point; ties broken by smaller point index."""
    feats = getattr(ds_or_features, "features", ds_or_features)
    x = np.asarray(feats, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    sq_norms = (x * x).sum(axis=1)
    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        d2 = sq_norms[start:stop, None] + sq_norms[None, :] - 2.0 * (x[start:stop] @ x.T)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        # Stable sort keeps equal distances in index order, giving the tie rule.
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        indices[start:stop] = order
        distances[start:stop] = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return NeighborGraph(k=k, indices=indices, distances=distances)


def smooth_knn_sigma(distances, rho: float, target: float,
                     tol: float = SMOOTH_K_TOL,
                     max_iter: int = SMOOTH_K_MAX_ITER) -> float:
    """Calibrate the Gaussian bandwidth for one point's neighbor distances.

    Finds sigma with ``sum_j exp(-max(0, d_j - rho) / sigma) = target`` by
    bisection. The weight sum is monotone in sigma; when no root exists in
    range the result clamps to the nearest bound (relative to the mean
    neighbor distance).
    """
    d = np.asarray(distances, dtype=np.float64)
    if d.size == 0:
        raise ValueError("empty distance list")
    if target <= 0:
        raise ValueError(f"target must be positive, got {target}")
    gaps = np.maximum(d - rho, 0.0)
    scale = d.mean() if d.mean() > 0 else 1.0
    lo = SIGMA_MIN_SCALE * scale
    hi = SIGMA_MAX_SCALE * scale

    def weight_sum(sigma: float) -> float:
        return float(np.exp(-gaps / sigma).sum())

    if weight_sum(lo) >= target:
        return lo
    if weight_sum(hi) <= target:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        s = weight_sum(mid)
        if abs(s - target) < tol:
            return mid
        if s > target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def fuzzy_symmetrize(g: NeighborGraph) -> WeightedGraph:
    """Combine directed membership weights into a symmetric fuzzy graph.

    Directed weights are ``v[i->j] = exp(-max(0, d_ij - rho_i) / sigma_i)``
    with sigma calibrated so each point's weights sum to log2(k); the fuzzy
    union ``p = v_ij + v_ji - v_ij * v_ji`` symmetrizes them. Every point
    keeps weight 1 toward its nearest neighbor before thresholding.
    """
    n, k = g.indices.shape
    rho = g.distances[:, 0].copy()
    # k = 1 keeps only the unit-weight nearest edge; sigma is immaterial then.
    target = np.log2(k) if k > 1 else 1.0
    sigma = np.empty(n, dtype=np.float64)
    for i in range(n):
        sigma[i] = smooth_knn_sigma(g.distances[i], rho[i], target)
    vals = np.exp(-np.maximum(g.distances - rho[:, None], 0.0) / sigma[:, None])
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    directed = scipy.sparse.coo_matrix(
        (vals.ravel(), (rows, g.indices.ravel())), shape=(n, n)
    ).tocsr()
    transpose = directed.T.tocsr()
    sym = directed + transpose - directed.multiply(transpose)
    sym = scipy.sparse.triu(sym, k=1).tocoo()
    keep = sym.data >= EDGE_EPS
    heads = sym.row[keep].astype(np.int64)
    tails = sym.col[keep].astype(np.int64)
    weights = sym.data[keep].astype(np.float64)
    order = np.lexsort((tails, heads))
    return WeightedGraph(
        n=n,
        heads=heads[order],
        tails=tails[order],
        weights=np.minimum(weights[order], 1.0),
        rho=rho,
        sigma=sigma,
    )
