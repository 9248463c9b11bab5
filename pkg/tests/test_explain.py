import numpy as np
import pytest

from ipbc import Dataset, explain_cluster
from ipbc.clustering import ClusterResult
from ipbc.explain import ExplainError, MIN_LEAF, TreeNode

from oracles import exhaustive_best_split


def cluster_result(labels):
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1 if (labels >= 0).any() else 0
    return ClusterResult(labels=labels, eps=1.0, min_pts=5, k_found=k)


def threshold_dataset(rng, n=40, d=5, feature=2, threshold=0.55):
    """Cluster 0 is exactly feature > threshold; other features are noise."""
    x = rng.uniform(0.0, 1.0, size=(n, d))
    labels = (x[:, feature] > threshold).astype(np.int64)
    labels[labels == 0] = 1  # members are cluster 0, the rest cluster 1
    labels[x[:, feature] > threshold] = 0
    return Dataset(features=x), cluster_result(labels)


class TestExplainCluster:
    def test_single_feature_threshold_recovered(self, rng):
        ds, cr = threshold_dataset(rng)
        exp = explain_cluster(ds, cr, cluster_id=0)
        root = exp.tree
        assert root.feature == 2
        assert exp.top_features[0][0] == "f2"
        assert exp.top_features[0][1] >= 0.9
        # exhaustive oracle over all feature/midpoint splits
        y = (cr.labels == 0).astype(np.int64)
        oracle = exhaustive_best_split(ds.features, y, MIN_LEAF)
        assert oracle[0] == root.feature
        assert root.threshold == pytest.approx(oracle[1])
        assert "f2 >" in exp.top_features[0][2]

    def test_max_depth_zero_is_error(self, rng):
        ds, cr = threshold_dataset(rng)
        with pytest.raises(ExplainError):
            explain_cluster(ds, cr, 0, max_depth=0)

    def test_top_k_truncates_to_largest_importances(self, rng):
        # membership needs several axis splits, so the tree uses >2 features
        x = rng.uniform(0.0, 1.0, size=(240, 6))
        member = (x[:, 0] > 0.5) & (x[:, 1] > 0.5) | (x[:, 2] > 0.8)
        labels = np.where(member, 0, 1).astype(np.int64)
        ds = Dataset(features=x)
        exp_full = explain_cluster(ds, cluster_result(labels), 0, max_depth=4, top_k=6)
        used = [f for f, _, _ in exp_full.top_features]
        assert len(used) > 2
        exp2 = explain_cluster(ds, cluster_result(labels), 0, max_depth=4, top_k=2)
        assert [f for f, _, _ in exp2.top_features] == used[:2]
        imps = [i for _, i, _ in exp_full.top_features]
        assert imps == sorted(imps, reverse=True)

    def test_cluster_too_small(self, rng):
        x = rng.uniform(size=(10, 3))
        labels = np.zeros(10, dtype=np.int64)
        labels[0] = 1
        with pytest.raises(ExplainError, match="members"):
            explain_cluster(Dataset(features=x), cluster_result(labels), 1)

    def test_unknown_cluster(self, rng):
        ds, cr = threshold_dataset(rng)
        with pytest.raises(ExplainError):
            explain_cluster(ds, cr, 5)

    def test_noise_counts_as_non_member(self, rng):
        ds, cr = threshold_dataset(rng)
        labels = cr.labels.copy()
        labels[labels == 1] = -1  # non-members become noise
        exp = explain_cluster(ds, cluster_result(labels), 0)
        assert exp.tree.feature == 2

    def test_accuracy_at_least_majority(self, rng):
        for trial in range(5):
            x = rng.uniform(size=(60, 4))
            labels = (rng.random(60) < 0.3).astype(np.int64)
            if labels.sum() < 2 or labels.sum() > 58:
                continue
            cr = cluster_result(np.where(labels == 1, 0, 1))
            exp = explain_cluster(Dataset(features=x), cr, 0)
            majority = max(labels.mean(), 1 - labels.mean())
            assert exp.train_accuracy >= majority - 1e-12

    def test_importances_normalized(self, rng):
        ds, cr = threshold_dataset(rng)
        exp = explain_cluster(ds, cr, 0)
        assert exp.importances.sum() == pytest.approx(1.0)
        assert (exp.importances >= 0).all()

    def test_tie_breaks_toward_lower_feature(self, rng):
        # duplicate the informative feature: the tie must resolve to f0
        base = rng.uniform(0.0, 1.0, size=(40, 1))
        x = np.hstack([base, base, rng.uniform(size=(40, 1))])
        labels = np.where(base[:, 0] > 0.5, 0, 1).astype(np.int64)
        exp = explain_cluster(Dataset(features=x), cluster_result(labels), 0)
        assert exp.tree.feature == 0

    def test_tree_structure_consistent(self, rng):
        ds, cr = threshold_dataset(rng, n=60)
        exp = explain_cluster(ds, cr, 0)

        def walk(node: TreeNode):
            if node.is_leaf:
                assert node.fractions[0] + node.fractions[1] == pytest.approx(1.0)
                return node.n_samples
            assert node.threshold is not None
            return walk(node.left) + walk(node.right)

        assert walk(exp.tree) == ds.n
