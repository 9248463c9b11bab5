"""Clustering quality metrics and the non-interactive baselines.

External agreement scores (ARI, NMI) compare predicted partitions against
ground truth; internal indices (silhouette, Davies-Bouldin) score geometry
alone. k-Means and PCA provide the classical baselines the interactive
pipeline is compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KMEANS_N_INIT = 10
KMEANS_MAX_ITER = 300

NOISE = -1


@dataclass(frozen=True)
class MetricReport:
    method_name: str
    dataset_name: str
    round_index: int
    ari: float | None = None
    nmi: float | None = None
    silhouette: float | None = None
    davies_bouldin: float | None = None


def _as_labels(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise ValueError("label vectors must be 1-D")
    return arr


def _contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def ari(a, b) -> float:
    """Adjusted Rand index via the contingency-table formula; 1 when identical."""
    a, b = _as_labels(a), _as_labels(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise ValueError("need at least 2 points")
    table = _contingency(a, b)
    nij = (table * (table - 1) // 2).sum()
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    sum_a = (rows * (rows - 1) // 2).sum()
    sum_b = (cols * (cols - 1) // 2).sum()
    pairs = n * (n - 1) // 2
    expected = sum_a * sum_b / pairs
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        # Both partitions trivial in the same way (all singletons or one
        # cluster): identical by construction.
        return 1.0
    return float((nij - expected) / (maximum - expected))


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def _same_partition(table: np.ndarray) -> bool:
    return (
        table.shape[0] == table.shape[1]
        and ((table > 0).sum(axis=0) == 1).all()
        and ((table > 0).sum(axis=1) == 1).all()
    )


def nmi(a, b) -> float:
    """Normalized mutual information with geometric-mean normalization.

    Identical partitions score 1 (including the all-singleton and single-
    cluster cases); when either entropy is zero and the partitions differ,
    the score is 0.
    """
    a, b = _as_labels(a), _as_labels(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    n = a.size
    if n < 1:
        raise ValueError("need at least 1 point")
    table = _contingency(a, b)
    if _same_partition(table):
        return 1.0
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    h_a = _entropy(rows, n)
    h_b = _entropy(cols, n)
    if h_a == 0.0 or h_b == 0.0:
        return 0.0
    nz = table > 0
    p_ij = table[nz] / n
    outer = np.outer(rows, cols)[nz] / (n * n)
    mi = float((p_ij * np.log(p_ij / outer)).sum())
    return mi / np.sqrt(h_a * h_b)


def _pairwise(points: np.ndarray) -> np.ndarray:
    # Direct differences, not the inner-product expansion: these scores are
    # checked against brute-force oracles at 1e-9, where the expansion's
    # cancellation error already shows up.
    n = points.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    chunk = max(1, 2**22 // max(n * points.shape[1], 1))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = points[start:stop, None, :] - points[None, :, :]
        out[start:stop] = np.sqrt((diff * diff).sum(axis=2))
    return out


def silhouette(points, labels) -> float:
    """Mean silhouette over non-noise points; singleton clusters score 0."""
    points = np.asarray(points, dtype=np.float64)
    labels = _as_labels(labels)
    keep = labels != NOISE
    points, labels = points[keep], labels[keep]
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("silhouette needs at least 2 non-noise clusters")
    dist = _pairwise(points)
    scores = np.zeros(labels.size, dtype=np.float64)
    masks = {c: labels == c for c in uniq}
    for idx in range(labels.size):
        own = masks[labels[idx]]
        n_own = own.sum()
        if n_own == 1:
            continue  # singleton scores 0
        a = dist[idx, own].sum() / (n_own - 1)
        b = min(dist[idx, masks[c]].mean() for c in uniq if c != labels[idx])
        denom = max(a, b)
        scores[idx] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def davies_bouldin(points, labels) -> float:
    """Davies-Bouldin index over non-noise clusters; lower is better.

    Coincident centroids make the pairwise separation zero, reported as the
    +inf sentinel.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = _as_labels(labels)
    keep = labels != NOISE
    points, labels = points[keep], labels[keep]
    uniq = np.unique(labels)
    k = uniq.size
    if k < 2:
        raise ValueError("davies_bouldin needs at least 2 non-noise clusters")
    centroids = np.vstack([points[labels == c].mean(axis=0) for c in uniq])
    scatter = np.array([
        np.linalg.norm(points[labels == c] - centroids[i], axis=1).mean()
        for i, c in enumerate(uniq)
    ])
    worst = np.empty(k)
    for i in range(k):
        ratios = []
        for j in range(k):
            if j == i:
                continue
            sep = np.linalg.norm(centroids[i] - centroids[j])
            ratios.append(np.inf if sep == 0.0 else (scatter[i] + scatter[j]) / sep)
        worst[i] = max(ratios)
    return float(worst.mean())


def _plus_plus_seed(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-squared weighted probabilistic seeding."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = x[first]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            nxt = int(rng.integers(n))
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        centers[c] = x[nxt]
        d2 = np.minimum(d2, ((x - centers[c]) ** 2).sum(axis=1))
    return centers


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int):
    n, k = x.shape[0], centers.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        point_d2 = d2[np.arange(n), new_labels]
        for c in range(k):
            mask = new_labels == c
            if mask.any():
                centers[c] = x[mask].mean(axis=0)
            else:
                # Re-seed an empty cluster from the farthest point.
                far = int(point_d2.argmax())
                centers[c] = x[far]
                new_labels[far] = c
                point_d2[far] = 0.0
        if (new_labels == labels).all():
            break
        labels = new_labels
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels, inertia


def kmeans(x, k: int, seed: int = 0, n_init: int = KMEANS_N_INIT,
           max_iter: int = KMEANS_MAX_ITER) -> np.ndarray:
    """Lloyd's algorithm, best of ``n_init`` seeded restarts by inertia."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    seeds = np.random.SeedSequence(seed).spawn(n_init)
    best_labels = None
    best_inertia = np.inf
    for child in seeds:
        rng = np.random.default_rng(child)
        centers = _plus_plus_seed(x, k, rng)
        labels, inertia = _lloyd(x, centers.copy(), max_iter)
        if inertia < best_inertia:
            best_inertia = inertia
            best_labels = labels
    return best_labels


def pca(x, dims: int) -> tuple[np.ndarray, np.ndarray]:
    """Project onto the top right singular vectors of the centered matrix.

    Returns (projected, explained_variance_ratio) with ratios relative to the
    total variance, descending. Components are sign-fixed so their largest-
    magnitude loading is positive.
    """
    x = np.asarray(x, dtype=np.float64)
    n, p = x.shape
    if not 1 <= dims <= min(n, p):
        raise ValueError(f"need 1 <= dims <= min(n, p) = {min(n, p)}, got {dims}")
    centered = x - x.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:dims]
    for row in components:
        peak = np.abs(row).argmax()
        if row[peak] < 0:
            row *= -1.0
    projected = centered @ components.T
    total = (s * s).sum()
    ratio = (s[:dims] ** 2) / total if total > 0 else np.zeros(dims)
    return projected, ratio


def metric_report(method: str, dataset: str, round_index: int,
                  points, pred_labels, true_labels=None) -> MetricReport:
    """Compute every applicable metric, leaving undefined entries as None."""
    pred = _as_labels(pred_labels)
    ext_ari = ext_nmi = None
    if true_labels is not None:
        ext_ari = ari(true_labels, pred)
        ext_nmi = nmi(true_labels, pred)
    sil = db = None
    non_noise = np.unique(pred[pred != NOISE])
    if non_noise.size >= 2:
        sil = silhouette(points, pred)
        db = davies_bouldin(points, pred)
    return MetricReport(
        method_name=method,
        dataset_name=dataset,
        round_index=round_index,
        ari=ext_ari,
        nmi=ext_nmi,
        silhouette=sil,
        davies_bouldin=db,
    )
