"""Candidate Eps/MinPts lists and the adaptive k search."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Literal, Type

import numpy as np

from ..config import BaseConfig, get_config
from ..errors import PipelineError
from ..models import NOISE, Clustering, Dataset, DbscanParams, SortedNeighborDistances
from . import dbscan_core
from .dataset import require_points

LOGGER = logging.getLogger(__name__)

Strategy = Literal["binary", "linear"]


class NoStablePlateau(PipelineError):
    """Raised when the cluster-count sweep never settles on a positive value."""

    def __init__(self, counts: list[int]) -> None:
        self.counts = counts
        super().__init__(
            "no stable cluster count found along the parameter sweep; counts: "
            + ", ".join(str(c) for c in counts)
        )


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


@dataclass(slots=True)
class ParameterTable:
    """Paired Eps / MinPts candidates; entry k-1 belongs to the k-th neighbor."""

    eps_list: np.ndarray
    min_pts_list: np.ndarray

    def __len__(self) -> int:
        return int(self.eps_list.shape[0])

    @property
    def last_index(self) -> int:
        return len(self) - 1

    def usable(self, index: int) -> bool:
        """False when the radius at ``index`` is zero, e.g. for duplicated points."""
        return bool(self.eps_list[index] > 0)

    def pair(self, index: int) -> DbscanParams:
        return DbscanParams(eps=float(self.eps_list[index]), min_pts=int(self.min_pts_list[index]))


@dataclass(slots=True)
class SweepPoint:
    index: int
    eps: float
    min_pts: int
    cluster_count: int
    phase: str
    nmi: float | None = None


@dataclass(slots=True)
class AdaptationResult:
    best_index: int
    adaptive_k: int
    stable_cluster_count: int
    first_stable_index: int
    dbscan_invocations: int
    trace: list[SweepPoint] = field(default_factory=list)
    strategy: str = "binary"
    fallback_used: bool = False
    window_used: int | None = None

    def to_dict(self) -> dict[str, Any]:
        payload = asdict(self)
        payload["trace"] = [asdict(point) for point in self.trace]
        return payload


def build_parameter_table(ds: Dataset, snd: SortedNeighborDistances) -> ParameterTable:
    """EpsList from column means, MinPtsList from mean neighbor counts."""
    require_points(ds, 3)
    if snd.n != ds.n:
        raise ValueError(f"distance rows cover {snd.n} points but dataset has {ds.n}")

    eps_list = snd.rows.mean(axis=0)
    # Column means of row-sorted data are nondecreasing in exact arithmetic;
    # pin float rounding so the table stays monotone.
    eps_list = np.maximum.accumulate(eps_list)

    totals = np.zeros(eps_list.shape[0], dtype=np.int64)
    for row in snd.rows:
        totals += np.searchsorted(row, eps_list, side="right")
    means = totals / ds.n
    min_pts_list = np.maximum(np.floor(means + 0.5).astype(np.int64), 1)

    LOGGER.debug(
        "Parameter table: eps %.6g..%.6g, min_pts %s..%s",
        eps_list[0],
        eps_list[-1],
        min_pts_list[0],
        min_pts_list[-1],
    )
    return ParameterTable(eps_list=eps_list, min_pts_list=min_pts_list)


class ClusterCountSweep:
    """Memoized cluster counts along the paired parameter table."""

    def __init__(
        self,
        ds: Dataset,
        snd: SortedNeighborDistances,
        table: ParameterTable,
    ) -> None:
        self.ds = ds
        self.snd = snd
        self.table = table
        self.invocations = 0
        self.trace: list[SweepPoint] = []
        self._cache: dict[int, int] = {}
        self.stable_window: int | None = None

    def __len__(self) -> int:
        return len(self.table)

    def evaluate(self, index: int) -> int:
        if not self.table.usable(index):
            # DbscanParams rejects eps <= 0
            return 0
        return dbscan_core.count_clusters(self.ds, self.snd, self.table.pair(index))

    def count(self, index: int, *, phase: str = "scan") -> int:
        if index in self._cache:
            return self._cache[index]
        value = int(self.evaluate(index))
        self.invocations += 1
        self._cache[index] = value
        self.trace.append(
            SweepPoint(
                index=index,
                eps=float(self.table.eps_list[index]),
                min_pts=int(self.table.min_pts_list[index]),
                cluster_count=value,
                phase=phase,
            )
        )
        LOGGER.debug("sweep[%s] %s -> %s clusters", phase, index, value)
        return value

    def known(self, index: int) -> int | None:
        return self._cache.get(index)


def _scan_for_plateau(sweep: ClusterCountSweep, window: int) -> tuple[int, int] | None:
    last = len(sweep) - 1
    for start in range(0, last - window + 2):
        first = sweep.count(start)
        if first <= 0:
            continue
        if all(sweep.count(start + offset) == first for offset in range(1, window)):
            return start, first
    return None


def find_stable_count(
    ds: Dataset,
    snd: SortedNeighborDistances,
    table: ParameterTable,
    *,
    sweep: ClusterCountSweep | None = None,
    config: Type[BaseConfig] | None = None,
) -> tuple[int, int]:
    """First index where the cluster count repeats ``STABILITY_WINDOW`` times."""
    settings = config or get_config(None)
    evaluator = sweep or ClusterCountSweep(ds, snd, table)

    window = int(settings.STABILITY_WINDOW)
    found = _scan_for_plateau(evaluator, window)
    if found is None:
        relaxed = int(settings.FALLBACK_STABILITY_WINDOW)
        LOGGER.warning(
            "No %s-long stable cluster count; relaxing window to %s", window, relaxed
        )
        window = relaxed
        found = _scan_for_plateau(evaluator, window)
    if found is None:
        counts = [evaluator.count(i) for i in range(len(evaluator))]
        raise NoStablePlateau(counts)
    evaluator.stable_window = window

    LOGGER.info("Cluster count stable at %s from index %s", found[1], found[0])
    return found


def locate_best_index(
    ds: Dataset,
    snd: SortedNeighborDistances,
    table: ParameterTable,
    first_stable_index: int,
    n_true: int,
    *,
    sweep: ClusterCountSweep | None = None,
) -> AdaptationResult:
    """Rightmost index whose cluster count equals ``n_true``, by binary search.

    The search assumes counts do not increase past the plateau. The result is
    checked against that assumption and recomputed by a linear walk when a
    visited index contradicts it.
    """
    evaluator = sweep or ClusterCountSweep(ds, snd, table)
    if evaluator.count(first_stable_index) != n_true:
        raise ValueError(
            f"count at index {first_stable_index} is not the stable value {n_true}"
        )

    left, right = first_stable_index, evaluator.table.last_index
    best = first_stable_index
    contradicted = False
    while left <= right:
        mid = (left + right) // 2
        value = evaluator.count(mid, phase="search")
        if value == n_true:
            best = mid
            left = mid + 1
        elif value < n_true:
            right = mid - 1
        else:
            contradicted = True
            left = mid + 1

    if best + 1 <= evaluator.table.last_index:
        if evaluator.count(best + 1, phase="verify") == n_true:
            contradicted = True

    fallback_used = False
    if contradicted:
        LOGGER.warning(
            "Cluster counts are not monotone after index %s; falling back to a linear scan",
            first_stable_index,
        )
        best = _walk_plateau(evaluator, first_stable_index, n_true, phase="fallback")
        fallback_used = True

    return _result(evaluator, best, first_stable_index, n_true, "binary", fallback_used)


def locate_best_index_linear(
    ds: Dataset,
    snd: SortedNeighborDistances,
    table: ParameterTable,
    first_stable_index: int,
    n_true: int,
    *,
    sweep: ClusterCountSweep | None = None,
) -> AdaptationResult:
    """Exhaustive baseline: walk the plateau one index at a time."""
    evaluator = sweep or ClusterCountSweep(ds, snd, table)
    best = _walk_plateau(evaluator, first_stable_index, n_true, phase="scan")
    return _result(evaluator, best, first_stable_index, n_true, "linear", False)


def _walk_plateau(sweep: ClusterCountSweep, start: int, n_true: int, *, phase: str) -> int:
    best = start
    last = sweep.table.last_index
    while best + 1 <= last and sweep.count(best + 1, phase=phase) == n_true:
        best += 1
    return best


def _result(
    sweep: ClusterCountSweep,
    best: int,
    first_stable_index: int,
    n_true: int,
    strategy: str,
    fallback_used: bool,
) -> AdaptationResult:
    adaptive_k = int(sweep.table.min_pts_list[best])
    LOGGER.info(
        "Best index %s (eps=%.6g) -> adaptive k=%s after %s DBSCAN runs",
        best,
        float(sweep.table.eps_list[best]),
        adaptive_k,
        sweep.invocations,
    )
    return AdaptationResult(
        best_index=best,
        adaptive_k=adaptive_k,
        stable_cluster_count=n_true,
        first_stable_index=first_stable_index,
        dbscan_invocations=sweep.invocations,
        trace=list(sweep.trace),
        strategy=strategy,
        fallback_used=fallback_used,
        window_used=sweep.stable_window,
    )


def adapt_k(
    ds: Dataset,
    snd: SortedNeighborDistances,
    *,
    config: Type[BaseConfig] | None = None,
    strategy: Strategy = "binary",
    table: ParameterTable | None = None,
) -> AdaptationResult:
    """Run the whole adaptive-k search and return the chosen MinPts as k."""
    require_points(ds, 5)
    parameter_table = table or build_parameter_table(ds, snd)
    sweep = ClusterCountSweep(ds, snd, parameter_table)
    first_stable, n_true = find_stable_count(
        ds, snd, parameter_table, sweep=sweep, config=config
    )
    if strategy == "linear":
        return locate_best_index_linear(
            ds, snd, parameter_table, first_stable, n_true, sweep=sweep
        )
    if strategy != "binary":
        raise ValueError(f"unknown strategy {strategy!r}")
    return locate_best_index(ds, snd, parameter_table, first_stable, n_true, sweep=sweep)


def invocation_bound(first_stable_index: int, n: int) -> int:
    return first_stable_index + 3 + math.ceil(math.log2(n)) + 2


def full_sweep(
    ds: Dataset,
    snd: SortedNeighborDistances,
    table: ParameterTable,
    *,
    truth_labels: np.ndarray | None = None,
) -> list[SweepPoint]:
    """Evaluate every table index, with NMI against ``truth_labels`` when given."""
    from .metrics import nmi

    points: list[SweepPoint] = []
    for index in range(len(table)):
        if table.usable(index):
            clustering = dbscan_core.dbscan(ds, snd, table.pair(index))
        else:
            clustering = Clustering(labels=np.full(ds.n, NOISE, dtype=np.int64), num_clusters=0)
        score = None if truth_labels is None else nmi(truth_labels, clustering.labels)
        points.append(
            SweepPoint(
                index=index,
                eps=float(table.eps_list[index]),
                min_pts=int(table.min_pts_list[index]),
                cluster_count=clustering.num_clusters,
                phase="sweep",
                nmi=score,
            )
        )
    return points


def write_trace_csv(points: Iterable[SweepPoint], path: str | Path) -> Path:
    rows = list(points)
    include_nmi = any(point.nmi is not None for point in rows)
    header = ["index", "eps", "min_pts", "cluster_count"] + (["nmi"] if include_nmi else [])
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for point in sorted(rows, key=lambda p: p.index):
            row: list[Any] = [point.index, repr(point.eps), point.min_pts, point.cluster_count]
            if include_nmi:
                row.append("" if point.nmi is None else f"{point.nmi:.6f}")
            writer.writerow(row)
    return target
