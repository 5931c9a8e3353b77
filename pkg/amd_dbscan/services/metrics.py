"""Density-difference metric and clustering quality scores."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import normalized_mutual_info_score

from ..errors import InputError
from ..models import NOISE, Clustering, Dataset, SortedNeighborDistances
from .dataset import require_points

LOGGER = logging.getLogger(__name__)

DensityClass = Literal["single", "multi", "extreme_multi"]
MULTI_DENSITY_THRESHOLD = 10.0
EXTREME_DENSITY_THRESHOLD = 100.0


class MetricInputError(InputError):
    """Raised when two labelings cannot be compared."""


@dataclass(frozen=True, slots=True)
class VnnReport:
    eps1: float
    neighbor_counts: np.ndarray
    vnn: float
    density_class: DensityClass

    @property
    def is_multi_density(self) -> bool:
        return self.density_class != "single"

    def to_dict(self) -> dict[str, Any]:
        return {"eps1": self.eps1, "vnn": self.vnn, "density_class": self.density_class}


def classify_vnn(value: float) -> DensityClass:
    if value < MULTI_DENSITY_THRESHOLD:
        return "single"
    if value <= EXTREME_DENSITY_THRESHOLD:
        return "multi"
    return "extreme_multi"


def vnn(ds: Dataset, snd: SortedNeighborDistances) -> VnnReport:
    """Variance of neighbor counts at the mean nearest-neighbor distance."""
    require_points(ds, 2)
    eps1 = float(snd.column(1).mean())
    counts = snd.reach(eps1)
    value = float(np.var(counts))
    report = VnnReport(
        eps1=eps1,
        neighbor_counts=counts,
        vnn=value,
        density_class=classify_vnn(value),
    )
    LOGGER.debug("VNN for %s: %.4f (%s)", ds.name, value, report.density_class)
    return report


def _as_label_pair(truth: Any, predicted: Any) -> tuple[np.ndarray, np.ndarray]:
    left = np.asarray(truth, dtype=np.int64).ravel()
    right = np.asarray(predicted, dtype=np.int64).ravel()
    if left.size == 0 or right.size == 0:
        raise MetricInputError("label arrays must not be empty")
    if left.size != right.size:
        raise MetricInputError(f"label lengths differ: {left.size} vs {right.size}")
    return left, right


def nmi(truth: Any, predicted: Any) -> float:
    left, right = _as_label_pair(truth, predicted)
    return float(normalized_mutual_info_score(left, right, average_method="arithmetic"))


def accuracy(truth: Any, predicted: Any, exclude_noise: bool = False) -> float:
    """Fraction of points correct under the best one-to-one cluster/class match.

    Predicted noise counts as correct only where the truth is noise too.
    """
    left, right = _as_label_pair(truth, predicted)
    predicted_noise = right == NOISE
    noise_hits = int(np.count_nonzero(predicted_noise & (left == NOISE)))

    matchable = ~predicted_noise & (left != NOISE)
    matched = 0
    if np.any(matchable):
        clusters, cluster_idx = np.unique(right[matchable], return_inverse=True)
        classes, class_idx = np.unique(left[matchable], return_inverse=True)
        table = np.zeros((clusters.size, classes.size), dtype=np.int64)
        np.add.at(table, (cluster_idx, class_idx), 1)
        rows, cols = linear_sum_assignment(table, maximize=True)
        matched = int(table[rows, cols].sum())

    if exclude_noise:
        denominator = int(np.count_nonzero(~predicted_noise))
        return matched / denominator if denominator else 0.0
    return (matched + noise_hits) / left.size


def evaluate(
    truth: Any | None,
    clustering: Clustering,
    vnn_report: VnnReport | None = None,
    exclude_noise: bool = False,
) -> dict[str, Any]:
    scores: dict[str, Any] = {
        "vnn": None if vnn_report is None else vnn_report.vnn,
        "density_class": None if vnn_report is None else vnn_report.density_class,
        "nmi": None,
        "accuracy": None,
        "clusters_found": clustering.num_clusters,
        "noise_count": clustering.noise_count,
    }
    if truth is not None:
        scores["nmi"] = nmi(truth, clustering.labels)
        scores["accuracy"] = accuracy(truth, clustering.labels, exclude_noise=exclude_noise)
    return scores
