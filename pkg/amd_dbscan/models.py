"""Core value types shared by every clustering stage."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

NOISE = -1


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, slots=True)
class Dataset:
    """n points in d-dimensional Euclidean space with optional truth labels."""

    points: np.ndarray
    truth_labels: np.ndarray | None = None
    name: str = "dataset"

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=np.float64, copy=True)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise ValueError("points must be a non-empty (n, d) array with d >= 1")
        if not np.all(np.isfinite(points)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", _frozen(points))

        if self.truth_labels is not None:
            labels = np.array(self.truth_labels, dtype=np.int64, copy=True).reshape(-1)
            if labels.shape[0] != points.shape[0]:
                raise ValueError(
                    f"truth_labels has length {labels.shape[0]}, expected {points.shape[0]}"
                )
            object.__setattr__(self, "truth_labels", _frozen(labels))

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    @property
    def has_labels(self) -> bool:
        return self.truth_labels is not None

    @property
    def cluster_count(self) -> int | None:
        """Number of distinct non-noise ground-truth labels."""
        if self.truth_labels is None:
            return None
        return int(np.unique(self.truth_labels[self.truth_labels != NOISE]).size)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "n": self.n,
            "d": self.d,
            "has_labels": self.has_labels,
            "truth_clusters": self.cluster_count,
        }


@dataclass(frozen=True, slots=True)
class SortedNeighborDistances:
    """Per-point ascending distances to every other point (self excluded).

    ``neighbors[i, j]`` is the index of the point at distance ``rows[i, j]``.
    """

    rows: np.ndarray
    neighbors: np.ndarray

    def __post_init__(self) -> None:
        if self.rows.shape != self.neighbors.shape:
            raise ValueError("rows and neighbors must share a shape")
        n, width = self.rows.shape
        if width != n - 1:
            raise ValueError(f"rows must have n-1={n - 1} columns, got {width}")
        _frozen(self.rows)
        _frozen(self.neighbors)

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    def column(self, k: int) -> np.ndarray:
        """Distances to the k-th nearest other point (1-based)."""
        if not 1 <= k <= self.n - 1:
            raise ValueError(f"k must be in [1, {self.n - 1}], got {k}")
        return self.rows[:, k - 1]

    def reach(self, eps: float) -> np.ndarray:
        """Per-point number of other points within ``eps`` (inclusive)."""
        return np.count_nonzero(self.rows <= eps, axis=1)

    def counts_within(self, eps: float, active: np.ndarray | None = None) -> np.ndarray:
        """Per-point number of other *active* points within ``eps``."""
        if active is None:
            return self.reach(eps)
        return np.count_nonzero((self.rows <= eps) & active[self.neighbors], axis=1)


@dataclass(frozen=True, slots=True)
class DbscanParams:
    eps: float
    min_pts: int

    def __post_init__(self) -> None:
        if not (self.eps > 0 and np.isfinite(self.eps)):
            raise ValueError(f"eps must be a positive finite number, got {self.eps!r}")
        if int(self.min_pts) != self.min_pts or self.min_pts < 1:
            raise ValueError(f"min_pts must be an integer >= 1, got {self.min_pts!r}")
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "min_pts", int(self.min_pts))


@dataclass(frozen=True, slots=True)
class Clustering:
    """Per-point cluster ids 0..c-1 with ``NOISE`` for unassigned points."""

    labels: np.ndarray
    num_clusters: int
    layer_of: np.ndarray | None = None

    def __post_init__(self) -> None:
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        object.__setattr__(self, "labels", _frozen(labels))
        if self.layer_of is not None:
            layers = np.array(self.layer_of, dtype=np.int64, copy=True)
            object.__setattr__(self, "layer_of", _frozen(layers))

    @property
    def noise_count(self) -> int:
        return int(np.count_nonzero(self.labels == NOISE))

    def cluster_sizes(self) -> list[int]:
        clustered = self.labels[self.labels != NOISE]
        return np.bincount(clustered, minlength=self.num_clusters).tolist()

    def to_dict(self) -> dict[str, Any]:
        return {
            "num_clusters": self.num_clusters,
            "noise_count": self.noise_count,
            "cluster_sizes": self.cluster_sizes(),
        }


@dataclass(frozen=True, slots=True)
class BlobCluster:
    center: tuple[float, ...]
    std: float
    count: int


@dataclass(frozen=True, slots=True)
class BlobsSpec:
    """Gaussian blobs plus optional uniform noise, reproducible under ``seed``."""

    clusters: tuple[BlobCluster, ...]
    noise_count: int = 0
    noise_low: tuple[float, ...] | None = None
    noise_high: tuple[float, ...] | None = None
    seed: int = 0
    name: str = "blobs"

    @property
    def dimension(self) -> int:
        return len(self.clusters[0].center)

    @property
    def total_count(self) -> int:
        return sum(cluster.count for cluster in self.clusters) + self.noise_count
