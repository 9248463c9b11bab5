"""DBSCAN over 2D layouts plus a k-distance-curve radius suggestion.

Clustering happens in the optimized 2D space, where distances and densities
are meaningful again. Border-point assignment is pinned to a deterministic
rule (smallest-index core neighbor) so results are exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MIN_PTS = 5

NOISE = -1

_CHUNK = 1024


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray  # (n,) int64; -1 is noise, clusters are 0..k_found-1
    eps: float
    min_pts: int
    k_found: int


def _neighborhoods(coords: np.ndarray, eps: float) -> list[np.ndarray]:
    """Indices within eps of each point (inclusive, self included)."""
    n = coords.shape[0]
    sq = (coords * coords).sum(axis=1)
    eps2 = eps * eps
    out: list[np.ndarray] = []
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (coords[start:stop] @ coords.T)
        np.maximum(d2, 0.0, out=d2)
        for r in range(stop - start):
            out.append(np.nonzero(d2[r] <= eps2)[0])
    return out


def dbscan(coords: np.ndarray, eps: float, min_pts: int) -> ClusterResult:
    """Standard DBSCAN on 2D points with deterministic border assignment.

    A point is core iff at least ``min_pts`` points (itself included) lie
    within ``eps``. Clusters are the connected components of core points
    under eps-reachability, numbered densely in order of their smallest core
    index; border points join the cluster of their smallest-index core
    neighbor; everything else is noise (-1).
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2:
        raise ValueError("coords must be an n x 2 matrix")
    if not np.isfinite(coords).all():
        raise ValueError("coords contain non-finite values")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    n = coords.shape[0]
    hoods = _neighborhoods(coords, eps)
    core = np.array([h.size >= min_pts for h in hoods], dtype=bool)
    labels = np.full(n, NOISE, dtype=np.int64)
    next_id = 0
    for start in range(n):
        if not core[start] or labels[start] != NOISE:
            continue
        labels[start] = next_id
        stack = [start]
        while stack:
            node = stack.pop()
            for nb in hoods[node]:
                if not core[nb] or labels[nb] != NOISE:
                    continue
                labels[nb] = next_id
                stack.append(nb)
        next_id += 1
    # Border points: attach to the smallest-index core point that reaches them.
    for idx in range(n):
        if core[idx] or labels[idx] != NOISE:
            continue
        for nb in hoods[idx]:
            if core[nb]:
                labels[idx] = labels[nb]
                break
    return ClusterResult(labels=labels, eps=float(eps), min_pts=int(min_pts),
                         k_found=next_id)


def kth_neighbor_distances(coords: np.ndarray, k: int) -> np.ndarray:
    """Distance from each point to its k-th nearest neighbor (self excluded)."""
    coords = np.asarray(coords, dtype=np.float64)
    n = coords.shape[0]
    if k < 1 or k >= n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    sq = (coords * coords).sum(axis=1)
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (coords[start:stop] @ coords.T)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        part = np.partition(d2, k - 1, axis=1)[:, k - 1]
        out[start:stop] = np.sqrt(part)
    return out


# Moving-average window for the k-distance curve, as a fraction of its
# length. Raw per-point curves put their largest second differences on the
# few outlier points at the top, which yields pathologically large radii;
# curvature is estimated on the lightly smoothed curve instead.
_EPS_SMOOTH_FRAC = 0.02


def _smooth(curve: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return curve
    kernel = np.full(window, 1.0 / window)
    padded = np.concatenate([
        np.full(window - 1, curve[0]), curve, np.full(window - 1, curve[-1])
    ])
    return np.convolve(padded, kernel, mode="same")[window - 1:window - 1 + curve.size]


def suggest_eps(coords: np.ndarray, min_pts: int = DEFAULT_MIN_PTS) -> float:
    """Radius suggestion from the sorted k-distance curve.

    Sorts each point's distance to its ``min_pts``-th neighbor descending and
    returns the value at the discrete second-difference maximum (the elbow)
    of the smoothed curve. A flat or too-short curve falls back to the median
    k-distance.
    """
    coords = np.asarray(coords, dtype=np.float64)
    n = coords.shape[0]
    if n <= min_pts:
        raise ValueError(f"need n > min_pts, got n={n}, min_pts={min_pts}")
    kdist = kth_neighbor_distances(coords, min_pts)
    curve = np.sort(kdist)[::-1]
    if curve.size < 3:
        return float(np.median(curve))
    smoothed = _smooth(curve, max(1, int(round(_EPS_SMOOTH_FRAC * curve.size))))
    second = smoothed[2:] - 2.0 * smoothed[1:-1] + smoothed[:-2]
    scale = max(float(curve[0]), 1.0)
    if np.abs(second).max() <= 1e-12 * scale:
        return float(np.median(curve))
    return float(smoothed[int(np.argmax(second)) + 1])
