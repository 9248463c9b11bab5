"""Per-cluster explanations from the original feature space.

Each discovered cluster gets a one-vs-rest CART-style decision tree trained
on the raw (pre-embedding) features; the most important features, with their
highest-impact threshold rules, are reported as the cluster's defining
attributes. Splits, tie-breaking and importances are fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterResult
from .dataset import Dataset

DEFAULT_MAX_DEPTH = 3
MIN_LEAF = 3
TOP_K = 3


class ExplainError(ValueError):
    """Cluster too small or otherwise unexplainable."""


@dataclass
class TreeNode:
    """Binary split node; leaves carry class fractions (non-member, member)."""

    n_samples: int
    fractions: tuple[float, float]
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass(frozen=True)
class Explanation:
    cluster_id: int
    top_features: list[tuple[str, float, str]]  # (name, importance, rule)
    tree: TreeNode
    train_accuracy: float
    importances: np.ndarray = field(repr=False, default=None)


def _gini(y: np.ndarray) -> float:
    if y.size == 0:
        return 0.0
    p1 = y.mean()
    return 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1)


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Exhaustive search over midpoints of consecutive sorted unique values.

    Returns (feature, threshold, weighted decrease) or None. Ties break
    toward the lower feature index, then the lower threshold, by scanning in
    that order and keeping only strict improvements.
    """
    n, d = x.shape
    parent = _gini(y)
    best = None
    best_gain = 0.0
    for f in range(d):
        col = x[:, f]
        order = np.argsort(col, kind="stable")
        sorted_col = col[order]
        sorted_y = y[order]
        distinct = np.nonzero(sorted_col[:-1] < sorted_col[1:])[0]
        if distinct.size == 0:
            continue
        cum_pos = np.cumsum(sorted_y)
        total_pos = cum_pos[-1]
        for idx in distinct:
            n_left = idx + 1
            n_right = n - n_left
            if n_left < min_leaf or n_right < min_leaf:
                continue
            pos_left = cum_pos[idx]
            pos_right = total_pos - pos_left
            p_l = pos_left / n_left
            p_r = pos_right / n_right
            gini_l = 1.0 - p_l * p_l - (1.0 - p_l) * (1.0 - p_l)
            gini_r = 1.0 - p_r * p_r - (1.0 - p_r) * (1.0 - p_r)
            gain = parent - (n_left * gini_l + n_right * gini_r) / n
            if gain > best_gain + 1e-15:
                best_gain = gain
                best = (f, 0.5 * (sorted_col[idx] + sorted_col[idx + 1]), gain)
    return best


def _grow(x, y, depth, max_depth, min_leaf, n_total, importances, best_rule):
    n = y.size
    frac1 = float(y.mean()) if n else 0.0
    node = TreeNode(n_samples=n, fractions=(1.0 - frac1, frac1))
    if depth >= max_depth or n < 2 * min_leaf or frac1 in (0.0, 1.0):
        return node
    found = _best_split(x, y, min_leaf)
    if found is None:
        return node
    f, threshold, gain = found
    weighted = (n / n_total) * gain
    importances[f] += weighted
    prev = best_rule.get(f)
    if prev is None or weighted > prev[0]:
        mask = x[:, f] <= threshold
        # Rule points toward the side with the higher member fraction.
        left_frac = y[mask].mean()
        right_frac = y[~mask].mean()
        op = "<=" if left_frac >= right_frac else ">"
        best_rule[f] = (weighted, threshold, op)
    mask = x[:, f] <= threshold
    node.feature = f
    node.threshold = float(threshold)
    node.left = _grow(x[mask], y[mask], depth + 1, max_depth, min_leaf,
                      n_total, importances, best_rule)
    node.right = _grow(x[~mask], y[~mask], depth + 1, max_depth, min_leaf,
                       n_total, importances, best_rule)
    return node


def _predict(node: TreeNode, row: np.ndarray) -> int:
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    return int(node.fractions[1] >= 0.5)


def explain_cluster(ds: Dataset, cr: ClusterResult, cluster_id: int,
                    max_depth: int = DEFAULT_MAX_DEPTH,
                    top_k: int = TOP_K,
                    min_leaf: int = MIN_LEAF) -> Explanation:
    """Explain one cluster with a one-vs-rest decision tree on raw features.

    Noise points count as non-members. Importances are the normalized total
    Gini decrease; the reported rule per feature is the threshold of its
    highest-decrease split, oriented toward the member-heavy side.
    """
    if max_depth < 1:
        raise ExplainError("max_depth must be >= 1 (no splits possible at 0)")
    labels = cr.labels
    if cluster_id < 0 or cluster_id not in labels:
        raise ExplainError(f"cluster {cluster_id} not present in the result")
    y = (labels == cluster_id).astype(np.int64)
    n_members = int(y.sum())
    if n_members < 2 or (y.size - n_members) < 2:
        raise ExplainError(
            f"cluster {cluster_id} needs >= 2 members and >= 2 non-members "
            f"(got {n_members} of {y.size})"
        )
    x = ds.features
    importances = np.zeros(ds.d, dtype=np.float64)
    best_rule: dict[int, tuple[float, float, str]] = {}
    root = _grow(x, y, 0, max_depth, min_leaf, y.size, importances, best_rule)
    total = importances.sum()
    if total > 0:
        importances = importances / total
    preds = np.array([_predict(root, row) for row in x])
    accuracy = float((preds == y).mean())
    ranked = sorted(range(ds.d), key=lambda f: (-importances[f], f))
    top = []
    for f in ranked[:top_k]:
        if importances[f] <= 0.0:
            break
        _, threshold, op = best_rule[f]
        rule = f"{ds.feature_names[f]} {op} {threshold:.4g}"
        top.append((ds.feature_names[f], float(importances[f]), rule))
    return Explanation(
        cluster_id=int(cluster_id),
        top_features=top,
        tree=root,
        train_accuracy=accuracy,
        importances=importances,
    )
