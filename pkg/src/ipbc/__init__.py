"""Interactive projection-based clustering workbench.

Embeds high-dimensional data into 2D with a neighbor-preserving
cross-entropy objective, folds must-link/cannot-link feedback into the
optimization, clusters the refined layout with DBSCAN, and explains each
cluster in terms of the original features.
"""

__version__ = "0.1.0"

from .clustering import ClusterResult, dbscan, suggest_eps
from .constraints import (
    CANNOT_LINK,
    MUST_LINK,
    Constraint,
    ConstraintConflictError,
    ConstraintError,
    ConstraintSet,
    LossBreakdown,
    constraint_gradient,
    constraint_loss,
    total_loss,
)
from .dataset import Dataset, DatasetError, generate_blobs, load_csv, standardize, write_csv
from .embedding import (
    EmbeddingDivergedError,
    EmbeddingState,
    Frame,
    OptimizerParams,
    fit_curve,
    init_layout,
    optimize,
    q_similarity,
    umap_loss,
    umap_loss_gradient,
    warm_restart,
)
from .explain import Explanation, explain_cluster
from .metrics import (
    MetricReport,
    ari,
    davies_bouldin,
    kmeans,
    metric_report,
    nmi,
    pca,
    silhouette,
)
from .neighbors import NeighborGraph, WeightedGraph, build_knn, fuzzy_symmetrize, smooth_knn_sigma
from .oracle import SessionConfig, SessionReport, run_session, sample_feedback

__all__ = [
    "CANNOT_LINK",
    "MUST_LINK",
    "ClusterResult",
    "Constraint",
    "ConstraintConflictError",
    "ConstraintError",
    "ConstraintSet",
    "Dataset",
    "DatasetError",
    "EmbeddingDivergedError",
    "EmbeddingState",
    "Explanation",
    "Frame",
    "LossBreakdown",
    "MetricReport",
    "NeighborGraph",
    "OptimizerParams",
    "SessionConfig",
    "SessionReport",
    "WeightedGraph",
    "ari",
    "build_knn",
    "constraint_gradient",
    "constraint_loss",
    "davies_bouldin",
    "dbscan",
    "explain_cluster",
    "fit_curve",
    "fuzzy_symmetrize",
    "generate_blobs",
    "init_layout",
    "kmeans",
    "load_csv",
    "metric_report",
    "nmi",
    "optimize",
    "pca",
    "q_similarity",
    "run_session",
    "sample_feedback",
    "silhouette",
    "smooth_knn_sigma",
    "standardize",
    "suggest_eps",
    "total_loss",
    "umap_loss",
    "umap_loss_gradient",
    "warm_restart",
    "write_csv",
]
