"""Layered DBSCAN and the end-to-end pipeline."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Literal, Type

import numpy as np

from ..config import BaseConfig, get_config
from ..models import NOISE, Clustering, Dataset, DbscanParams, SortedNeighborDistances
from . import dbscan_core
from .dataset import require_points, sorted_neighbor_distances
from .eps_candidates import (
    CandidateEpsList,
    KdisHistogram,
    KdisValues,
    build_histogram,
    candidate_eps,
    compute_kdis,
)
from .param_adapt import AdaptationResult, adapt_k, round_half_up

LOGGER = logging.getLogger(__name__)


@dataclass(slots=True)
class LayerReport:
    layer_index: int
    eps: float
    min_pts: int
    points_clustered: int
    clusters_found: int
    active_before: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(slots=True)
class PipelineResult:
    dataset: Dataset
    clustering: Clustering
    adaptation: AdaptationResult | None
    kdis: KdisValues
    histogram: KdisHistogram
    candidates: CandidateEpsList
    layers: list[LayerReport]
    k_source: Literal["adaptive", "forced"]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.kdis.k


def obtain_min_pts(
    snd: SortedNeighborDistances, eps: float, active: np.ndarray | None = None
) -> int:
    """Mean count of other active points within ``eps``, rounded half up."""
    mask = np.ones(snd.n, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    require_points(int(np.count_nonzero(mask)), 2)
    counts = snd.counts_within(eps, mask)[mask]
    return max(round_half_up(float(counts.mean())), 1)


def _dedup_candidates(values: np.ndarray, rtol: float) -> list[float]:
    kept: list[float] = []
    for value in np.sort(np.asarray(values, dtype=np.float64)):
        if not value > 0:
            LOGGER.warning("Discarding non-positive candidate eps %r", float(value))
            continue
        if kept and np.isclose(value, kept[-1], rtol=rtol, atol=0.0):
            continue
        kept.append(float(value))
    return kept


def multi_density_cluster(
    ds: Dataset,
    snd: SortedNeighborDistances,
    candidates: CandidateEpsList | np.ndarray | list[float],
    config: Type[BaseConfig] | None = None,
) -> tuple[Clustering, list[LayerReport]]:
    """DBSCAN once per candidate radius, smallest first, freezing clustered points."""
    settings = config or get_config(None)
    values = candidates.eps_values if isinstance(candidates, CandidateEpsList) else candidates
    radii = _dedup_candidates(np.asarray(values), float(settings.CANDIDATE_DEDUP_RTOL))

    labels = np.full(ds.n, NOISE, dtype=np.int64)
    layer_of = np.full(ds.n, NOISE, dtype=np.int64)
    active = np.ones(ds.n, dtype=bool)
    next_id = 0
    reports: list[LayerReport] = []

    for layer_index, eps in enumerate(radii):
        remaining = int(np.count_nonzero(active))
        if remaining < 2:
            break
        min_pts = obtain_min_pts(snd, eps, active)
        layer = dbscan_core.dbscan(ds, snd, DbscanParams(eps, min_pts), active=active)
        clustered = layer.labels != NOISE
        labels[clustered] = layer.labels[clustered] + next_id
        layer_of[clustered] = layer_index
        active &= ~clustered
        next_id += layer.num_clusters

        report = LayerReport(
            layer_index=layer_index,
            eps=eps,
            min_pts=min_pts,
            points_clustered=int(np.count_nonzero(clustered)),
            clusters_found=layer.num_clusters,
            active_before=remaining,
        )
        reports.append(report)
        LOGGER.info(
            "Layer %s: eps=%.6g min_pts=%s -> %s clusters, %s points",
            layer_index,
            eps,
            min_pts,
            report.clusters_found,
            report.points_clustered,
        )

    return Clustering(labels=labels, num_clusters=next_id, layer_of=layer_of), reports


def amd_dbscan(
    ds: Dataset,
    config: Type[BaseConfig] | None = None,
    n_peaks: int | None = None,
    k: int | None = None,
    bins: int | None = None,
    snd: SortedNeighborDistances | None = None,
) -> PipelineResult:
    """Run adaptive k, candidate radii and layered clustering on ``ds``.

    A forced ``k`` skips the adaptive search entirely.
    """
    settings = config or get_config(None)
    require_points(ds, 5)
    timings: dict[str, float] = {}

    started = time.perf_counter()
    distances = snd if snd is not None else sorted_neighbor_distances(ds, settings)
    timings["distances"] = time.perf_counter() - started

    adaptation: AdaptationResult | None = None
    if k is None:
        started = time.perf_counter()
        adaptation = adapt_k(ds, distances, config=settings)
        timings["adapt_k"] = time.perf_counter() - started
        chosen_k, k_source = adaptation.adaptive_k, "adaptive"
    else:
        if not 1 <= k <= ds.n - 1:
            raise ValueError(f"k must be in [1, {ds.n - 1}], got {k}")
        chosen_k, k_source = int(k), "forced"
    chosen_k = min(chosen_k, ds.n - 1)

    started = time.perf_counter()
    kdis = compute_kdis(distances, chosen_k)
    histogram = build_histogram(kdis, bins=bins, config=settings)
    candidates = candidate_eps(kdis, histogram, n_peaks=n_peaks, config=settings)
    timings["candidates"] = time.perf_counter() - started

    started = time.perf_counter()
    clustering, layers = multi_density_cluster(ds, distances, candidates, config=settings)
    timings["layers"] = time.perf_counter() - started

    LOGGER.info(
        "%s: k=%s (%s), %s candidates, %s clusters, %s noise",
        ds.name,
        chosen_k,
        k_source,
        len(candidates),
        clustering.num_clusters,
        clustering.noise_count,
    )
    return PipelineResult(
        dataset=ds,
        clustering=clustering,
        adaptation=adaptation,
        kdis=kdis,
        histogram=histogram,
        candidates=candidates,
        layers=layers,
        k_source=k_source,
        timings=timings,
    )
