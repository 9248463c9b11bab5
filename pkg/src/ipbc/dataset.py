"""Dataset loading, generation and normalization.

The :class:`Dataset` is the canonical in-memory representation used by every
downstream stage: a dense ``n x d`` float matrix, optional integer ground-truth
labels, feature names and stable per-point identifiers. Instances are treated
as immutable after construction and can be shared freely across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

# Decimal precision used when writing CSV files; round-trips float values
# that carry at most this many significant digits.
CSV_PRECISION = 9


class DatasetError(ValueError):
    """Raised for malformed input files or invalid generator parameters."""


@dataclass(frozen=True)
class Dataset:
    """An n x d feature matrix with optional ground-truth labels.

    Labels, when present, are dense non-negative integers. They are only ever
    consumed by the simulated feedback oracle and the external metrics; the
    embedding pipeline never sees them.
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    feature_names: list[str] = field(default_factory=list)
    point_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise DatasetError("features must be a non-empty 2-D matrix")
        if not np.isfinite(feats).all():
            raise DatasetError("features contain non-finite values")
        object.__setattr__(self, "features", feats)
        n, d = feats.shape
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (n,):
                raise DatasetError(
                    f"labels length {labels.shape} does not match n={n}"
                )
            if (labels < 0).any():
                raise DatasetError("labels must be non-negative integers")
            object.__setattr__(self, "labels", labels)
        if not self.feature_names:
            object.__setattr__(self, "feature_names", [f"f{i}" for i in range(d)])
        if len(self.feature_names) != d:
            raise DatasetError(
                f"expected {d} feature names, got {len(self.feature_names)}"
            )
        if len(set(self.feature_names)) != d:
            raise DatasetError("feature names must be unique")
        if not self.point_ids:
            object.__setattr__(self, "point_ids", [str(i) for i in range(n)])
        if len(self.point_ids) != n:
            raise DatasetError(f"expected {n} point ids, got {len(self.point_ids)}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def _encode_labels(raw: list[str]) -> np.ndarray:
    """Map distinct label strings to dense integers in first-appearance order."""
    mapping: dict[str, int] = {}
    out = np.empty(len(raw), dtype=np.int64)
    for i, val in enumerate(raw):
        if val not in mapping:
            mapping[val] = len(mapping)
        out[i] = mapping[val]
    return out


def load_csv(path: str, label_column: str | None = None) -> Dataset:
    """Load a Dataset from a UTF-8 CSV file with a mandatory header row.

    If ``label_column`` names a header entry, that column is stripped from the
    features and stored as integer labels (distinct values mapped to dense
    integers in first-appearance order). Row order is point order and point
    ids are the row indices.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file (header row required)") from None
        header = [h.strip() for h in header]
        label_idx = None
        if label_column is not None:
            if label_column not in header:
                raise DatasetError(
                    f"{path}: label column {label_column!r} not in header {header}"
                )
            label_idx = header.index(label_column)
        rows: list[list[float]] = []
        raw_labels: list[str] = []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}: row {row_no} has {len(row)} cells, header has {len(header)}"
                )
            vals = []
            for col_idx, cell in enumerate(row):
                if col_idx == label_idx:
                    raw_labels.append(cell.strip())
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}: row {row_no}, column {header[col_idx]!r}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
                if not np.isfinite(v):
                    raise DatasetError(
                        f"{path}: row {row_no}, column {header[col_idx]!r}: "
                        f"non-finite value {cell!r}"
                    )
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    feature_names = [h for i, h in enumerate(header) if i != label_idx]
    labels = _encode_labels(raw_labels) if label_idx is not None else None
    return Dataset(
        features=np.asarray(rows, dtype=np.float64),
        labels=labels,
        feature_names=feature_names,
        point_ids=[str(i) for i in range(len(rows))],
    )


def write_csv(ds: Dataset, path: str, label_column: str = "label") -> None:
    """Write a Dataset as CSV with 9-significant-digit values.

    Labels, when present, are appended as an integer column named
    ``label_column``. ``load_csv(write_csv(ds))`` round-trips exactly for
    values representable at this precision.
    """
    fmt = f"%.{CSV_PRECISION}g"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = list(ds.feature_names)
        if ds.labels is not None:
            header.append(label_column)
        writer.writerow(header)
        for i in range(ds.n):
            row = [fmt % v for v in ds.features[i]]
            if ds.labels is not None:
                row.append(str(int(ds.labels[i])))
            writer.writerow(row)


def _equidistant_centers(k: int, d: int, separation: float,
                         overlap_pair: tuple[int, int] | None) -> np.ndarray:
    """Place k centers pairwise ``separation`` apart in d dimensions.

    The overlap pair, if given, sits at half the separation from each other
    while keeping its distance to every other center at ``separation``. The
    configuration is realized exactly from its distance matrix via classical
    multidimensional scaling, which needs at most k-1 dimensions.
    """
    if k == 1:
        return np.zeros((1, d))
    if k - 1 > d:
        raise DatasetError(
            f"cannot place {k} equidistant centers in {d} dimensions (need d >= k-1)"
        )
    sq = np.full((k, k), separation**2, dtype=np.float64)
    np.fill_diagonal(sq, 0.0)
    if overlap_pair is not None:
        a, b = overlap_pair
        sq[a, b] = sq[b, a] = (0.5 * separation) ** 2
    # Classical MDS: Gram matrix from double-centered squared distances.
    j = np.eye(k) - np.full((k, k), 1.0 / k)
    gram = -0.5 * j @ sq @ j
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    rank = int((eigvals > 1e-9 * max(eigvals[0], 1.0)).sum())
    centers = np.zeros((k, d))
    centers[:, :rank] = eigvecs[:, :rank] * np.sqrt(np.maximum(eigvals[:rank], 0.0))
    return centers


def generate_blobs(n_per_cluster: int, d: int, k: int, centers_separation: float,
                   noise_scale: float, overlap_pair: tuple[int, int] | None = None,
                   seed: int = 0) -> Dataset:
    """Generate k Gaussian blobs with pairwise-equidistant centers.

    ``overlap_pair`` names two cluster ids whose centers are placed at half
    the separation so their blobs entangle. Labels record the generating
    cluster. Deterministic for a fixed seed.
    """
    if k < 1 or d < 2 or n_per_cluster < 1:
        raise DatasetError("need k >= 1, d >= 2, n_per_cluster >= 1")
    if overlap_pair is not None:
        a, b = overlap_pair
        if not (0 <= a < k and 0 <= b < k) or a == b:
            raise DatasetError(
                f"overlap_pair {overlap_pair} must name two distinct clusters in [0, {k})"
            )
    centers = _equidistant_centers(k, d, centers_separation, overlap_pair)
    rng = np.random.default_rng(seed)
    parts = []
    labels = []
    for c in range(k):
        pts = centers[c] + noise_scale * rng.standard_normal((n_per_cluster, d))
        parts.append(pts)
        labels.extend([c] * n_per_cluster)
    return Dataset(
        features=np.vstack(parts),
        labels=np.asarray(labels, dtype=np.int64),
    )


def standardize(ds: Dataset) -> Dataset:
    """Center each feature and scale to unit population standard deviation.

    Zero-variance features pass through as all-zeros. Idempotent within
    floating tolerance.
    """
    if ds.n < 2:
        raise DatasetError("standardize needs at least 2 points")
    x = ds.features
    mean = x.mean(axis=0)
    std = x.std(axis=0)  # population convention (divide by n)
    centered = x - mean
    out = np.where(std > 0.0, centered / np.where(std > 0.0, std, 1.0), 0.0)
    return Dataset(
        features=out,
        labels=ds.labels,
        feature_names=list(ds.feature_names),
        point_ids=list(ds.point_ids),
    )
