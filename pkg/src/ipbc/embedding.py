"""2D layout initialization and stochastic optimization.

The layout minimizes, over the fuzzy graph's edges, the cross-entropy between
high-dimensional edge weights ``p`` and the low-dimensional kernel
``q = 1 / (1 + a * d^(2b))``, plus the constraint penalties. Edges are swept
once per epoch with per-sample attractive moves and uniform negative samples
for repulsion; constraint gradients are applied full-batch at each epoch
boundary. Warm restarts continue from the previous coordinates with a reduced
learning-rate schedule so feedback updates stay interactive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numba
import numpy as np
import scipy.optimize
import scipy.sparse
import scipy.sparse.linalg

from .constraints import ConstraintSet, LossBreakdown, constraint_gradient, constraint_loss
from .neighbors import WeightedGraph

DEFAULT_EPOCHS = 200
DEFAULT_LR = 1.0
DEFAULT_NEGATIVE_SAMPLES = 5
DEFAULT_MIN_DIST = 0.1
DEFAULT_SPREAD = 1.0

# Warm restarts trade epochs for responsiveness; 150 epochs at a tenth of the
# initial rate keeps a feedback round around a second at desk scale while
# giving fresh constraints enough sweeps to reshape the layout.
WARM_EPOCHS = 150
WARM_LR_FACTOR = 0.1

# Numerical guards: q is clamped away from {0, 1} inside the loss, per-sample
# gradient steps are clipped per coordinate, and frames are emitted at most
# once per FRAME_INTERVAL epochs.
Q_EPS = 1e-12
MAX_STEP = 4.0
FRAME_INTERVAL = 5

INIT_RANGE = 10.0
_SPECTRAL_DENSE_LIMIT = 2000

# Fallback kernel parameters, the fit for min_dist=0.1, spread=1.0.
FALLBACK_A = 1.577
FALLBACK_B = 0.895


class EmbeddingDivergedError(RuntimeError):
    """Non-finite coordinates appeared during optimization."""

    def __init__(self, epoch: int, coords: np.ndarray):
        self.epoch = epoch
        self.coords = coords
        super().__init__(f"non-finite coordinates at epoch {epoch}")


@dataclass
class OptimizerParams:
    epochs: int = DEFAULT_EPOCHS
    initial_lr: float = DEFAULT_LR
    negative_samples: int = DEFAULT_NEGATIVE_SAMPLES
    min_dist: float = DEFAULT_MIN_DIST
    spread: float = DEFAULT_SPREAD
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")
        if self.negative_samples < 1:
            raise ValueError("negative_samples must be >= 1")


@dataclass
class EmbeddingState:
    """Mutable n x 2 layout plus the bookkeeping the feedback loop needs."""

    coords: np.ndarray
    epoch: int = 0
    rng_seed: int = 0
    curve_a: float = FALLBACK_A
    curve_b: float = FALLBACK_B
    spectral_fallback: bool = False

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def snapshot(self) -> np.ndarray:
        return self.coords.copy()


@dataclass(frozen=True)
class Frame:
    """Immutable layout snapshot emitted at epoch boundaries."""

    epoch: int
    coords: np.ndarray
    loss_umap: float
    loss_ml: float
    loss_cl: float
    loss_total: float


def fit_curve(min_dist: float, spread: float) -> tuple[float, float]:
    """Fit the low-D kernel ``1 / (1 + a * d^(2b))`` to the target falloff.

    The target is 1 up to ``min_dist`` and decays exponentially with scale
    ``spread`` beyond it, sampled over (0, 3 * spread]. Falls back to the
    stock parameters (with a warning) if the fit diverges.
    """
    if not 0 < min_dist < spread:
        raise ValueError(f"need 0 < min_dist < spread, got {min_dist}, {spread}")
    xs = np.linspace(3.0 * spread / 300, 3.0 * spread, 300)
    ys = np.where(xs <= min_dist, 1.0, np.exp(-(xs - min_dist) / spread))

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    try:
        (a, b), _ = scipy.optimize.curve_fit(curve, xs, ys, maxfev=10000)
    except RuntimeError as exc:
        warnings.warn(f"kernel curve fit diverged ({exc}); using fallback a/b")
        return FALLBACK_A, FALLBACK_B
    if a <= 0 or b <= 0:
        warnings.warn("kernel curve fit produced non-positive parameters; using fallback a/b")
        return FALLBACK_A, FALLBACK_B
    return float(a), float(b)


def q_similarity(yi, yj, a: float, b: float) -> float:
    """Low-D similarity in (0, 1]; equals 1 iff the points coincide."""
    if a <= 0 or b <= 0:
        raise ValueError("kernel parameters must be positive")
    diff = np.asarray(yi, dtype=np.float64) - np.asarray(yj, dtype=np.float64)
    d2 = float((diff * diff).sum())
    return 1.0 / (1.0 + a * d2**b)


def _spectral_coords(g: WeightedGraph, dims: int = 2) -> np.ndarray:
    """Leading non-trivial eigenvectors of the normalized graph Laplacian.

    The known trivial direction sqrt(degree) is identified among the smallest
    eigenvectors and dropped, which also handles disconnected graphs where
    the zero eigenvalue is degenerate.
    """
    n = g.n
    if g.n_edges == 0:
        raise np.linalg.LinAlgError("graph has no edges")
    w = scipy.sparse.coo_matrix(
        (np.concatenate([g.weights, g.weights]),
         (np.concatenate([g.heads, g.tails]), np.concatenate([g.tails, g.heads]))),
        shape=(n, n),
    ).tocsr()
    degree = np.asarray(w.sum(axis=1)).ravel()
    inv_sqrt = np.where(degree > 0, 1.0 / np.sqrt(np.where(degree > 0, degree, 1.0)), 0.0)
    d_half = scipy.sparse.diags(inv_sqrt)
    lap = scipy.sparse.identity(n, format="csr") - d_half @ w @ d_half
    k_eigs = dims + 1
    if n <= _SPECTRAL_DENSE_LIMIT:
        eigvals, eigvecs = np.linalg.eigh(lap.toarray())
        eigvals, eigvecs = eigvals[:k_eigs], eigvecs[:, :k_eigs]
    else:
        eigvals, eigvecs = scipy.sparse.linalg.eigsh(lap, k=k_eigs, which="SM", tol=1e-6)
        order = np.argsort(eigvals)
        eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    trivial = np.sqrt(np.maximum(degree, 0.0))
    norm = np.linalg.norm(trivial)
    trivial = trivial / norm if norm > 0 else trivial
    align = np.abs(eigvecs.T @ trivial)
    drop = int(np.argmax(align))
    keep = [c for c in range(eigvecs.shape[1]) if c != drop][:dims]
    return eigvecs[:, keep]


def init_layout(g: WeightedGraph, method: str = "spectral", seed: int = 0,
                min_dist: float = DEFAULT_MIN_DIST,
                spread: float = DEFAULT_SPREAD) -> EmbeddingState:
    """Initial coordinates in [-INIT_RANGE, INIT_RANGE]^2, deterministic per seed.

    ``spectral`` uses the leading two non-trivial eigenvectors of the
    normalized graph Laplacian, rescaled to the init box; it falls back to
    random (flagged on the state) if the eigensolver fails.
    """
    if g.n < 1:
        raise ValueError("graph is empty")
    if method not in ("random", "spectral"):
        raise ValueError(f"unknown init method {method!r}")
    a, b = fit_curve(min_dist, spread)
    fallback = False
    coords = None
    if method == "spectral":
        try:
            raw = _spectral_coords(g)
            scale = np.abs(raw).max(axis=0)
            scale[scale == 0.0] = 1.0
            coords = raw / scale * INIT_RANGE
        except (np.linalg.LinAlgError, scipy.sparse.linalg.ArpackError) as exc:
            warnings.warn(f"spectral init failed ({exc}); falling back to random")
            fallback = True
    if coords is None:
        rng = np.random.default_rng(seed)
        coords = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(g.n, 2))
    return EmbeddingState(
        coords=np.ascontiguousarray(coords, dtype=np.float64),
        epoch=0,
        rng_seed=seed,
        curve_a=a,
        curve_b=b,
        spectral_fallback=fallback,
    )


def _edge_cross_entropy(coords: np.ndarray, g: WeightedGraph,
                        a: float, b: float) -> float:
    if g.n_edges == 0:
        return 0.0
    diff = coords[g.heads] - coords[g.tails]
    d2 = (diff * diff).sum(axis=1)
    q = np.clip(1.0 / (1.0 + a * d2**b), Q_EPS, 1.0 - Q_EPS)
    p = g.weights
    attract = p * (np.log(p) - np.log(q))
    one_minus_p = 1.0 - p
    repel = np.where(
        one_minus_p > 0.0,
        one_minus_p * (np.log(np.maximum(one_minus_p, Q_EPS)) - np.log(1.0 - q)),
        0.0,
    )
    return float((attract + repel).sum())


def umap_loss(e: EmbeddingState, g: WeightedGraph) -> float:
    """Edge-summed cross-entropy between high-D and low-D similarities."""
    return _edge_cross_entropy(e.coords, g, e.curve_a, e.curve_b)


def umap_loss_gradient(coords: np.ndarray, g: WeightedGraph,
                       a: float, b: float) -> np.ndarray:
    """Full-batch analytic gradient of the edge cross-entropy.

    Matches central finite differences of the loss away from coincident
    points and the q clamp; used directly by the gradient-correctness tests
    and available for deterministic full-batch descent.
    """
    coords = np.asarray(coords, dtype=np.float64)
    grad = np.zeros_like(coords)
    if g.n_edges == 0:
        return grad
    diff = coords[g.heads] - coords[g.tails]
    d2 = (diff * diff).sum(axis=1)
    live = d2 > 0.0
    d2 = np.where(live, d2, 1.0)
    q = 1.0 / (1.0 + a * d2**b)
    p = g.weights
    # dL/dq for the two cross-entropy terms, then chain through the kernel.
    dl_dq = -p / q + np.where(p < 1.0, (1.0 - p) / (1.0 - q), 0.0)
    dq_dd2 = -a * b * d2 ** (b - 1.0) * q * q
    coeff = np.where(live, dl_dq * dq_dd2 * 2.0, 0.0)
    contrib = coeff[:, None] * diff
    np.add.at(grad, g.heads, contrib)
    np.add.at(grad, g.tails, -contrib)
    return grad


@numba.njit(cache=True)
def _in_sorted(arr, lo, hi, val):  # pragma: no cover - exercised via the kernel
    while lo < hi:
        mid = (lo + hi) // 2
        v = arr[mid]
        if v == val:
            return True
        if v < val:
            lo = mid + 1
        else:
            hi = mid
    return False


@numba.njit(cache=True)
def _clip(x, bound):  # pragma: no cover - exercised via the kernel
    if x > bound:
        return bound
    if x < -bound:
        return -bound
    return x


@numba.njit(cache=True)
def _sgd_epoch(coords, heads, tails, weights, adj_offsets, adj_targets,
               a, b, negative_samples, lr, max_step, seed):
    """One sweep over the edges: attraction plus negative-sample repulsion.

    Updates are applied in place in a fixed edge order with a per-epoch
    seeded RNG, so a run is reproducible from (seed, epoch). Negative samples
    alternate between the two endpoints and skip graph neighbors.
    """
    np.random.seed(seed)
    n = coords.shape[0]
    for e in range(heads.shape[0]):
        i = heads[e]
        j = tails[e]
        p = weights[e]
        dx = coords[i, 0] - coords[j, 0]
        dy = coords[i, 1] - coords[j, 1]
        d2 = dx * dx + dy * dy
        if d2 > 0.0:
            attract = (-2.0 * a * b * d2 ** (b - 1.0)) / (1.0 + a * d2**b) * p
            gx = _clip(attract * dx, max_step)
            gy = _clip(attract * dy, max_step)
            coords[i, 0] += lr * gx
            coords[i, 1] += lr * gy
            coords[j, 0] -= lr * gx
            coords[j, 1] -= lr * gy
        for s in range(negative_samples):
            h = i if s % 2 == 0 else j
            k = np.random.randint(0, n)
            if k == h:
                continue
            if _in_sorted(adj_targets, adj_offsets[h], adj_offsets[h + 1], k):
                continue
            dx = coords[h, 0] - coords[k, 0]
            dy = coords[h, 1] - coords[k, 1]
            d2 = dx * dx + dy * dy
            if d2 <= 0.0:
                continue
            repel = 2.0 * b * p / ((0.001 + d2) * (1.0 + a * d2**b))
            coords[h, 0] += lr * _clip(repel * dx, max_step)
            coords[h, 1] += lr * _clip(repel * dy, max_step)


def _epoch_seed(base_seed: int, epoch: int) -> int:
    # Stable per-epoch stream; SeedSequence mixes (seed, epoch) into 32 bits.
    return int(np.random.SeedSequence((base_seed & 0xFFFFFFFF, epoch)).generate_state(1)[0])


def _resolve_constraints(cs) -> Callable[[], ConstraintSet]:
    if callable(cs):
        return cs
    return lambda: cs


def optimize(e: EmbeddingState, g: WeightedGraph, cs, p: OptimizerParams,
             on_frame: Callable[[Frame], None] | None = None,
             stop_signal=None) -> EmbeddingState:
    """Run ``p.epochs`` sweeps of constrained layout SGD, mutating ``e``.

    ``cs`` may be a ConstraintSet or a zero-argument callable returning one;
    the callable is consulted once per epoch, so copy-on-write insertions
    take effect at epoch boundaries. The learning rate decays linearly to
    zero, constraint gradients are applied full-batch after each edge sweep,
    frames are emitted at most every FRAME_INTERVAL epochs plus a final one,
    and ``stop_signal`` is honored at epoch boundaries.
    """
    if g.n != e.n:
        raise ValueError(f"graph has {g.n} points, embedding has {e.n}")
    if not np.isfinite(e.coords).all():
        raise EmbeddingDivergedError(e.epoch, e.coords.copy())
    get_cs = _resolve_constraints(cs)
    current = get_cs()
    if len(current) and max(max(c.i, c.j) for c in current.constraints) >= e.n:
        raise ValueError("constraint index out of range for this embedding")
    if p.epochs == 0:
        return e
    adj_offsets, adj_targets = g.adjacency()
    coords = e.coords
    a, b = e.curve_a, e.curve_b
    end_epoch = e.epoch + p.epochs

    def emit():
        if on_frame is None:
            return
        snap = e.snapshot()
        l_umap = _edge_cross_entropy(snap, g, a, b)
        l_ml, l_cl = constraint_loss(snap, current)
        on_frame(Frame(
            epoch=e.epoch,
            coords=snap,
            loss_umap=l_umap,
            loss_ml=l_ml,
            loss_cl=l_cl,
            loss_total=l_umap + current.lambda_ml * l_ml + current.lambda_cl * l_cl,
        ))

    for sweep in range(p.epochs):
        if stop_signal is not None and stop_signal.is_set():
            break
        current = get_cs()
        lr = p.initial_lr * (1.0 - sweep / p.epochs)
        _sgd_epoch(
            coords, g.heads, g.tails, g.weights, adj_offsets, adj_targets,
            a, b, p.negative_samples, lr, MAX_STEP,
            _epoch_seed(e.rng_seed, e.epoch),
        )
        if len(current):
            step = np.clip(constraint_gradient(coords, current), -MAX_STEP, MAX_STEP)
            coords -= lr * step
        e.epoch += 1
        if not np.isfinite(coords).all():
            raise EmbeddingDivergedError(e.epoch, coords.copy())
        if e.epoch % FRAME_INTERVAL == 0 or e.epoch == end_epoch:
            emit()
    return e


def warm_restart(e: EmbeddingState, g: WeightedGraph, cs, p: OptimizerParams,
                 epochs: int | None = None,
                 on_frame: Callable[[Frame], None] | None = None,
                 stop_signal=None) -> EmbeddingState:
    """Continue optimizing from the current coordinates after feedback.

    Runs like :func:`optimize` but with a short schedule (WARM_EPOCHS) and a
    reduced initial learning rate, so each feedback round stays within an
    interactive budget.
    """
    warm = replace(
        p,
        epochs=WARM_EPOCHS if epochs is None else epochs,
        initial_lr=WARM_LR_FACTOR * p.initial_lr,
    )
    return optimize(e, g, cs, warm, on_frame=on_frame, stop_signal=stop_signal)


def total_loss_breakdown(e: EmbeddingState, g: WeightedGraph,
                         cs: ConstraintSet) -> LossBreakdown:
    """Loss assembly shortcut used by reports and frames."""
    l_umap = umap_loss(e, g)
    l_ml, l_cl = constraint_loss(e.coords, cs)
    return LossBreakdown(
        umap=l_umap, ml=l_ml, cl=l_cl,
        total=l_umap + cs.lambda_ml * l_ml + cs.lambda_cl * l_cl,
    )
