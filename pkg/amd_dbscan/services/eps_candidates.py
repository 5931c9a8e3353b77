"""k-dis histogram peaks and 1-D K-means candidate radii."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal, Type

import numpy as np
from scipy.signal import find_peaks

from ..config import KDIS_SCALES, BaseConfig, get_config
from ..errors import InputError
from ..models import SortedNeighborDistances

LOGGER = logging.getLogger(__name__)


class KMeansError(InputError):
    """Raised when K cannot be honored for the given values."""


@dataclass(frozen=True, slots=True)
class KdisValues:
    values: np.ndarray
    sorted_values: np.ndarray
    k: int

    @property
    def distinct_count(self) -> int:
        return int(np.unique(self.values).size)


@dataclass(frozen=True, slots=True)
class KdisHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    smoothed_counts: np.ndarray
    peaks: np.ndarray
    scale: str = "linear"

    @property
    def n_peaks(self) -> int:
        return int(self.peaks.size)

    @property
    def peak_positions(self) -> np.ndarray:
        """Centers of the peak bins, in distance units."""
        left = self.bin_edges[self.peaks]
        right = self.bin_edges[self.peaks + 1]
        if self.scale == "log":
            return np.sqrt(left * right)
        return (left + right) / 2.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "bins": int(self.counts.size),
            "scale": self.scale,
            "bin_edges": [float(edge) for edge in self.bin_edges],
            "counts": [int(count) for count in self.counts],
            "smoothed_counts": [float(value) for value in self.smoothed_counts],
            "peaks": [int(peak) for peak in self.peaks],
            "n_peaks": self.n_peaks,
        }


@dataclass(frozen=True, slots=True)
class CandidateEpsList:
    eps_values: np.ndarray
    assignment: np.ndarray
    n_requested: int
    source: Literal["auto", "override"]

    def __len__(self) -> int:
        return int(self.eps_values.size)

    def to_dict(self) -> dict[str, Any]:
        return {
            "eps_values": [float(value) for value in self.eps_values],
            "sizes": np.bincount(self.assignment, minlength=len(self)).tolist(),
            "n_requested": self.n_requested,
            "source": self.source,
        }


def compute_kdis(snd: SortedNeighborDistances, k: int) -> KdisValues:
    """Distance from each point to its k-th nearest other point."""
    values = np.array(snd.column(k), dtype=np.float64, copy=True)
    values.setflags(write=False)
    ordered = np.sort(values, kind="stable")
    ordered.setflags(write=False)
    return KdisValues(values=values, sorted_values=ordered, k=int(k))


def _resolve_scale(values: np.ndarray, scale: str) -> str:
    if scale not in KDIS_SCALES:
        raise ValueError(f"unknown k-dis scale {scale!r}; expected one of {KDIS_SCALES}")
    if scale == "log" and float(values.min()) <= 0.0:
        LOGGER.info("k-dis values include zero distances; binning on the linear scale")
        return "linear"
    return scale


def build_histogram(
    kdis: KdisValues,
    bins: int | None = None,
    config: Type[BaseConfig] | None = None,
    *,
    scale: str | None = None,
) -> KdisHistogram:
    """Bin the k-dis values, smooth the counts and find the density peaks.

    On the log scale the bins are equal-width in log(k-dis); ``bin_edges``
    are always reported in distance units.
    """
    settings = config or get_config(None)
    used_scale = _resolve_scale(kdis.values, scale or settings.KDIS_SCALE)
    values = np.log(kdis.values) if used_scale == "log" else kdis.values
    low, high = float(values.min()), float(values.max())

    if low == high:
        counts = np.array([values.size], dtype=np.int64)
        edge = float(kdis.values.min())
        return KdisHistogram(
            bin_edges=np.array([edge, edge]),
            counts=counts,
            smoothed_counts=counts.astype(np.float64),
            peaks=np.array([0], dtype=np.intp),
            scale=used_scale,
        )

    bin_count = bins if bins is not None else math.ceil(math.sqrt(values.size))
    if bin_count < 1:
        raise ValueError(f"bins must be at least 1, got {bin_count}")
    counts, edges = np.histogram(values, bins=bin_count, range=(low, high))
    if used_scale == "log":
        edges = np.exp(edges)

    window = int(settings.HISTOGRAM_SMOOTHING_WINDOW)
    smoothed = np.convolve(counts.astype(np.float64), np.ones(window) / window, mode="same")
    if smoothed.size != counts.size:
        # window wider than the histogram
        smoothed = np.full(counts.size, counts.sum() / window)

    padded = np.concatenate(([0.0], smoothed, [0.0]))
    prominence = float(settings.PEAK_PROMINENCE_FRACTION) * float(smoothed.max())
    found, _ = find_peaks(padded, prominence=prominence)
    peaks = found - 1
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(smoothed))], dtype=np.intp)

    LOGGER.debug("k-dis histogram: %s %s bins, peaks at %s", bin_count, used_scale, peaks.tolist())
    return KdisHistogram(
        bin_edges=edges,
        counts=counts.astype(np.int64),
        smoothed_counts=smoothed,
        peaks=peaks.astype(np.intp),
        scale=used_scale,
    )


def _assign(values: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # argmin keeps the first minimum, so ties go to the lower-indexed center
    return np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)


def _sse(values: np.ndarray, centers: np.ndarray, assignment: np.ndarray) -> float:
    return float(np.sum((values - centers[assignment]) ** 2))


def _lloyd(values: np.ndarray, k: int, max_iter: int) -> np.ndarray:
    centers = np.quantile(values, (2 * np.arange(k) + 1) / (2 * k))
    previous: np.ndarray | None = None
    for iteration in range(max_iter):
        assignment = _assign(values, centers)
        if previous is not None and np.array_equal(assignment, previous):
            LOGGER.debug("k-means converged after %s iterations", iteration)
            break
        previous = assignment

        taken = np.zeros(values.size, dtype=bool)
        for j in range(k):
            members = values[assignment == j]
            if members.size:
                centers[j] = members.mean()
                continue
            spread = np.abs(values - centers[assignment])
            spread[taken] = -1.0
            far = int(np.argmax(spread))
            taken[far] = True
            centers[j] = values[far]
    return np.sort(centers)


def _optimal_partition(values: np.ndarray, k: int) -> np.ndarray:
    """Centers of the minimum-SSE contiguous partition of the sorted values."""
    distinct, weights = np.unique(values, return_counts=True)
    m = distinct.size
    w = np.concatenate(([0.0], np.cumsum(weights, dtype=np.float64)))
    s1 = np.concatenate(([0.0], np.cumsum(weights * distinct)))
    s2 = np.concatenate(([0.0], np.cumsum(weights * distinct * distinct)))

    best = np.full((k + 1, m + 1), np.inf)
    split = np.zeros((k + 1, m + 1), dtype=np.intp)
    best[0, 0] = 0.0
    for layer in range(1, k + 1):
        for stop in range(layer, m + 1):
            starts = np.arange(layer - 1, stop)
            width = w[stop] - w[starts]
            total = s1[stop] - s1[starts]
            cost = (s2[stop] - s2[starts]) - total * total / width
            candidates = best[layer - 1, starts] + np.maximum(cost, 0.0)
            pick = int(np.argmin(candidates))
            best[layer, stop] = candidates[pick]
            split[layer, stop] = starts[pick]

    centers = np.empty(k)
    stop = m
    for layer in range(k, 0, -1):
        start = split[layer, stop]
        centers[layer - 1] = (s1[stop] - s1[start]) / (w[stop] - w[start])
        stop = start
    return centers


def kmeans_1d(
    values: np.ndarray,
    k: int,
    config: Type[BaseConfig] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster scalar values into ``k`` groups; returns sorted centers and labels."""
    settings = config or get_config(None)
    data = np.asarray(values, dtype=np.float64).ravel()
    distinct = int(np.unique(data).size)
    if k < 1 or k > distinct:
        raise KMeansError(f"cannot form {k} clusters from {distinct} distinct values")

    centers = _lloyd(data, k, int(settings.KMEANS_MAX_ITER))
    assignment = _assign(data, centers)

    if distinct <= int(settings.KMEANS_EXACT_LIMIT):
        exact = _optimal_partition(data, k)
        exact_assignment = _assign(data, exact)
        if _sse(data, exact, exact_assignment) < _sse(data, centers, assignment):
            LOGGER.debug("exact 1-D partition improves on the Lloyd result")
            centers, assignment = exact, exact_assignment

    return centers, assignment


def _group_means(values: np.ndarray, assignment: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    sizes = np.bincount(assignment, minlength=fallback.size)
    sums = np.bincount(assignment, weights=values, minlength=fallback.size)
    return np.where(sizes > 0, sums / np.maximum(sizes, 1), fallback)


def candidate_eps(
    kdis: KdisValues,
    hist: KdisHistogram,
    n_peaks: int | None = None,
    config: Type[BaseConfig] | None = None,
) -> CandidateEpsList:
    """One candidate radius per density regime seen in the histogram.

    The values are grouped on the histogram's scale. Each radius is the
    mean k-dis distance of its group.
    """
    distinct = kdis.distinct_count
    if n_peaks is not None:
        if n_peaks < 1 or n_peaks > distinct:
            raise KMeansError(
                f"--peaks {n_peaks} is outside 1..{distinct} (distinct k-dis values)"
            )
        requested, source = int(n_peaks), "override"
    else:
        requested, source = hist.n_peaks, "auto"
        if requested > distinct:
            LOGGER.warning(
                "Histogram shows %s peaks but only %s distinct k-dis values; clamping",
                requested,
                distinct,
            )
            requested = distinct

    if hist.scale == "log":
        log_centers, assignment = kmeans_1d(np.log(kdis.values), requested, config=config)
        centers = _group_means(kdis.values, assignment, np.exp(log_centers))
    else:
        centers, assignment = kmeans_1d(kdis.values, requested, config=config)
    LOGGER.info(
        "Candidate eps (%s, N=%s): %s",
        source,
        requested,
        ", ".join(f"{value:.6g}" for value in centers),
    )
    return CandidateEpsList(
        eps_values=centers,
        assignment=assignment,
        n_requested=requested,
        source=source,
    )


def write_histogram_csv(hist: KdisHistogram, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bin_left", "bin_right", "count", "smoothed"])
        for index, count in enumerate(hist.counts):
            writer.writerow(
                [
                    repr(float(hist.bin_edges[index])),
                    repr(float(hist.bin_edges[index + 1])),
                    int(count),
                    f"{hist.smoothed_counts[index]:.6f}",
                ]
            )
    return target
