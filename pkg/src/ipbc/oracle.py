"""Simulated-user feedback and the full iterative refinement session.

The oracle stands in for the analyst: each round it samples must-link pairs
from same-label points and cannot-link pairs from different-label points
(ground truth required), optionally targeting the pairs the current layout
gets most visibly wrong. ``run_session`` drives the whole loop: embed, inject
feedback, warm-restart, cluster, measure, explain.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterResult, dbscan, suggest_eps, DEFAULT_MIN_PTS
from .constraints import (
    CANNOT_LINK,
    MUST_LINK,
    Constraint,
    ConstraintSet,
    LossBreakdown,
    DEFAULT_LAMBDA_CL,
    DEFAULT_LAMBDA_ML,
    DEFAULT_MARGIN,
)
from .dataset import Dataset
from .embedding import (
    EmbeddingState,
    OptimizerParams,
    WARM_EPOCHS,
    init_layout,
    optimize,
    total_loss_breakdown,
    warm_restart,
)
from .explain import Explanation, explain_cluster, ExplainError
from .metrics import MetricReport, metric_report
from .neighbors import DEFAULT_N_NEIGHBORS, build_knn, fuzzy_symmetrize

DEFAULT_N_ML = 5
DEFAULT_N_CL = 5
DEFAULT_ROUNDS = 3

STRATEGIES = ("random", "error_driven")

# Fraction of the eligible pair pool the error-driven sampler draws from:
# the farthest decile of same-label pairs, the nearest decile of
# different-label pairs.
ERROR_DECILE = 0.1


class FeedbackError(ValueError):
    """The requested constraint sample cannot be drawn."""


@dataclass
class SessionConfig:
    """Every knob of the loop in one place, defaults matching the modules."""

    n_neighbors: int = DEFAULT_N_NEIGHBORS
    init_method: str = "spectral"
    optimizer: OptimizerParams = field(default_factory=OptimizerParams)
    warm_epochs: int = WARM_EPOCHS
    margin: float = DEFAULT_MARGIN
    lambda_ml: float = DEFAULT_LAMBDA_ML
    lambda_cl: float = DEFAULT_LAMBDA_CL
    min_pts: int = DEFAULT_MIN_PTS
    n_ml: int = DEFAULT_N_ML
    n_cl: int = DEFAULT_N_CL
    strategy: str = "error_driven"


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    constraints_added: tuple[Constraint, ...]
    n_constraints_total: int
    loss: LossBreakdown
    metrics: MetricReport
    cluster: ClusterResult
    warm_seconds: float


@dataclass(frozen=True)
class SessionReport:
    dataset_name: str
    strategy: str
    seed: int
    rounds: tuple[RoundRecord, ...]
    final_cluster: ClusterResult
    explanations: tuple[Explanation, ...]
    final_state: EmbeddingState


def _eligible_pairs(labels: np.ndarray, same: bool,
                    exclude: set[tuple[int, int]]) -> np.ndarray:
    n = labels.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    match = labels[iu] == labels[ju] if same else labels[iu] != labels[ju]
    iu, ju = iu[match], ju[match]
    if exclude:
        mask = np.array([(int(a), int(b)) not in exclude for a, b in zip(iu, ju)])
        iu, ju = iu[mask], ju[mask]
    return np.column_stack([iu, ju])


def _draw(pairs: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    idx = rng.choice(pairs.shape[0], size=count, replace=False)
    return pairs[np.sort(idx)]


def sample_feedback(labels, coords, n_ml: int, n_cl: int,
                    strategy: str = "error_driven", seed: int = 0,
                    exclude: set[tuple[int, int]] | None = None,
                    round_index: int = 0) -> list[Constraint]:
    """Sample labeled constraint pairs the way a guiding user would.

    ``random`` draws uniformly from same-label (must-link) and
    different-label (cannot-link) pairs. ``error_driven`` mimics a user who
    targets visible mistakes: must-links from the farthest decile of
    same-label pairs in the current layout, cannot-links from the nearest
    decile of different-label pairs. Never emits a pair in ``exclude``.
    """
    if strategy not in STRATEGIES:
        raise FeedbackError(f"unknown strategy {strategy!r}")
    labels = np.asarray(labels)
    coords = np.asarray(coords, dtype=np.float64)
    exclude = exclude or set()
    if n_cl > 0 and np.unique(labels).size < 2:
        raise FeedbackError("cannot-link sampling needs at least 2 classes")
    rng = np.random.default_rng(seed)
    out: list[Constraint] = []
    for kind, count, same in ((MUST_LINK, n_ml, True), (CANNOT_LINK, n_cl, False)):
        if count == 0:
            continue
        pairs = _eligible_pairs(labels, same, exclude)
        if pairs.shape[0] < count:
            raise FeedbackError(
                f"requested {count} {kind} pairs but only {pairs.shape[0]} remain"
            )
        if strategy == "error_driven":
            d = np.linalg.norm(coords[pairs[:, 0]] - coords[pairs[:, 1]], axis=1)
            # Sort by distance (ties by index) and keep the relevant extreme.
            order = np.lexsort((pairs[:, 1], pairs[:, 0], d))
            if same:
                order = order[::-1]  # farthest same-label pairs
            pool = max(int(np.ceil(ERROR_DECILE * pairs.shape[0])), count)
            chosen = _draw(pairs[order[:pool]], count, rng)
        else:
            chosen = _draw(pairs, count, rng)
        for i, j in chosen:
            out.append(Constraint(kind=kind, i=int(i), j=int(j), round=round_index))
    return out


def _metrics_for(coords, cluster: ClusterResult, ds: Dataset, method: str,
                 dataset_name: str, round_index: int) -> MetricReport:
    return metric_report(method, dataset_name, round_index, coords,
                         cluster.labels, ds.labels)


def _explanations_for(ds: Dataset, cluster: ClusterResult) -> tuple[Explanation, ...]:
    out = []
    for cid in range(cluster.k_found):
        try:
            out.append(explain_cluster(ds, cluster, cid))
        except ExplainError:
            continue
    return tuple(out)


def run_session(ds: Dataset, rounds: int = DEFAULT_ROUNDS,
                config: SessionConfig | None = None, seed: int = 0,
                dataset_name: str = "dataset",
                method_name: str = "ipbc") -> SessionReport:
    """Drive the full loop: embed, then feedback -> warm restart -> cluster.

    Round 0 is the static pipeline (no constraints); rounds 1..R each add the
    configured number of oracle pairs and re-optimize with a warm restart,
    which requires ground-truth labels. Every stage is seeded from the master
    seed. Zero-strength feedback (both lambdas 0) cannot change the
    objective, so those warm restarts are skipped and the layout is left
    untouched.
    """
    if ds.labels is None and rounds > 0:
        raise FeedbackError("feedback rounds need ground-truth labels (oracle feedback)")
    cfg = config or SessionConfig()
    stage_seeds = np.random.SeedSequence(seed).generate_state(2 + max(rounds, 0))
    graph = fuzzy_symmetrize(build_knn(ds, cfg.n_neighbors))
    state = init_layout(graph, cfg.init_method, int(stage_seeds[0]),
                        cfg.optimizer.min_dist, cfg.optimizer.spread)
    state.rng_seed = int(stage_seeds[1])
    cs = ConstraintSet(n_points=ds.n, margin=cfg.margin,
                       lambda_ml=cfg.lambda_ml, lambda_cl=cfg.lambda_cl)
    optimize(state, graph, cs, cfg.optimizer)

    records: list[RoundRecord] = []
    cluster = dbscan(state.coords, suggest_eps(state.coords, cfg.min_pts), cfg.min_pts)
    records.append(RoundRecord(
        round_index=0,
        constraints_added=(),
        n_constraints_total=0,
        loss=total_loss_breakdown(state, graph, cs),
        metrics=_metrics_for(state.coords, cluster, ds, method_name, dataset_name, 0),
        cluster=cluster,
        warm_seconds=0.0,
    ))
    feedback_live = cfg.lambda_ml != 0.0 or cfg.lambda_cl != 0.0
    for r in range(1, rounds + 1):
        added = sample_feedback(
            ds.labels, state.coords, cfg.n_ml, cfg.n_cl, cfg.strategy,
            seed=int(stage_seeds[1 + r]), exclude=cs.pairs(), round_index=r,
        )
        cs = cs.add_all(added)
        start = time.perf_counter()
        if feedback_live:
            warm_restart(state, graph, cs, cfg.optimizer, epochs=cfg.warm_epochs)
        elapsed = time.perf_counter() - start
        cluster = dbscan(state.coords, suggest_eps(state.coords, cfg.min_pts),
                         cfg.min_pts)
        records.append(RoundRecord(
            round_index=r,
            constraints_added=tuple(added),
            n_constraints_total=len(cs),
            loss=total_loss_breakdown(state, graph, cs),
            metrics=_metrics_for(state.coords, cluster, ds, method_name,
                                 dataset_name, r),
            cluster=cluster,
            warm_seconds=elapsed,
        ))
    return SessionReport(
        dataset_name=dataset_name,
        strategy=cfg.strategy,
        seed=seed,
        rounds=tuple(records),
        final_cluster=records[-1].cluster,
        explanations=_explanations_for(ds, records[-1].cluster),
        final_state=state,
    )
