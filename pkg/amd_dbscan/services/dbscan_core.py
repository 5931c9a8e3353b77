"""Deterministic DBSCAN over precomputed sorted neighbor distances."""

from __future__ import annotations

import logging
from collections import deque

import numpy as np

from ..models import NOISE, Clustering, Dataset, DbscanParams, SortedNeighborDistances

LOGGER = logging.getLogger(__name__)
_UNVISITED = -2


def dbscan(
    ds: Dataset,
    snd: SortedNeighborDistances,
    params: DbscanParams,
    *,
    active: np.ndarray | None = None,
) -> Clustering:
    """Cluster ``ds`` with one (eps, min_pts) pair.

    A point is core when at least ``min_pts`` points, itself included, lie
    within ``eps``. Clusters open in ascending order of their first core
    point and are fully expanded before the next one opens, so a border point
    reachable from several clusters keeps the one with the lowest core index.
    Points outside ``active`` take no part and come back as ``NOISE``.
    """
    mask = _check_inputs(ds, snd, active)
    reach = snd.reach(params.eps)
    if mask is None:
        counts = reach
        candidates = np.ones(ds.n, dtype=bool)
    else:
        counts = snd.counts_within(params.eps, mask)
        candidates = mask

    is_core = candidates & (counts + 1 >= params.min_pts)
    labels = np.full(ds.n, _UNVISITED, dtype=np.int64)
    labels[~candidates] = NOISE
    cluster_id = 0

    for seed in np.flatnonzero(is_core):
        if labels[seed] != _UNVISITED:
            continue
        labels[seed] = cluster_id
        queue: deque[int] = deque([int(seed)])
        while queue:
            point = queue.popleft()
            nearby = snd.neighbors[point, : reach[point]]
            fresh = nearby[labels[nearby] == _UNVISITED]
            if fresh.size == 0:
                continue
            labels[fresh] = cluster_id
            queue.extend(int(q) for q in fresh[is_core[fresh]])
        cluster_id += 1

    labels[labels == _UNVISITED] = NOISE
    LOGGER.debug(
        "dbscan eps=%.6g min_pts=%s -> %s clusters, %s cores",
        params.eps,
        params.min_pts,
        cluster_id,
        int(np.count_nonzero(is_core)),
    )
    return Clustering(labels=labels, num_clusters=cluster_id)


def count_clusters(
    ds: Dataset,
    snd: SortedNeighborDistances,
    params: DbscanParams,
    *,
    active: np.ndarray | None = None,
) -> int:
    return dbscan(ds, snd, params, active=active).num_clusters


def _check_inputs(
    ds: Dataset, snd: SortedNeighborDistances, active: np.ndarray | None
) -> np.ndarray | None:
    if snd.n != ds.n:
        raise ValueError(f"distance rows cover {snd.n} points but dataset has {ds.n}")
    if active is None:
        return None
    mask = np.asarray(active, dtype=bool)
    if mask.shape != (ds.n,):
        raise ValueError(f"active mask must have shape ({ds.n},), got {mask.shape}")
    return mask
