"""Tests for layered clustering and the end-to-end pipeline."""

from __future__ import annotations

import numpy as np
import pytest

from amd_dbscan.config import TestingConfig
from amd_dbscan.models import NOISE, BlobCluster, BlobsSpec, Dataset, DbscanParams
from amd_dbscan.services import dbscan_core, metrics, multi_density
from amd_dbscan.services.dataset import DatasetTooSmallError, generate_blobs

UNIT_SQUARE = Dataset([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


def test_obtain_min_pts_over_all_points(snd_of):
    assert multi_density.obtain_min_pts(snd_of(UNIT_SQUARE), 1.0) == 2


def test_obtain_min_pts_over_active_points(snd_of):
    active = np.array([True, True, True, False])
    assert multi_density.obtain_min_pts(snd_of(UNIT_SQUARE), 1.0, active) == 1


def test_obtain_min_pts_is_at_least_one(snd_of):
    assert multi_density.obtain_min_pts(snd_of(UNIT_SQUARE), 0.5) == 1


def test_obtain_min_pts_needs_two_active_points(snd_of):
    active = np.array([True, False, False, False])
    with pytest.raises(DatasetTooSmallError):
        multi_density.obtain_min_pts(snd_of(UNIT_SQUARE), 1.0, active)


def test_layers_separate_dense_and_sparse_regions(dense_sparse, snd_of):
    clustering, layers = multi_density.multi_density_cluster(
        dense_sparse, snd_of(dense_sparse), [1.5, 0.15], config=TestingConfig
    )
    assert clustering.num_clusters == 2
    assert clustering.noise_count == 0
    assert clustering.labels.tolist() == dense_sparse.truth_labels.tolist()
    assert np.all(clustering.layer_of[:100] == 0)
    assert np.all(clustering.layer_of[100:] == 1)

    assert [layer.eps for layer in layers] == [0.15, 1.5]
    assert [layer.min_pts for layer in layers] == [2, 7]
    assert [layer.active_before for layer in layers] == [200, 100]
    assert [layer.points_clustered for layer in layers] == [100, 100]


def test_candidates_are_deduplicated_and_positive(dense_sparse, snd_of):
    _, layers = multi_density.multi_density_cluster(
        dense_sparse,
        snd_of(dense_sparse),
        [0.0, -1.0, 0.15, 0.15 * (1 + 1e-12), 1.5],
        config=TestingConfig,
    )
    assert len(layers) == 2


def test_no_usable_candidates_leaves_everything_noise(dense_sparse, snd_of):
    clustering, layers = multi_density.multi_density_cluster(
        dense_sparse, snd_of(dense_sparse), [0.0], config=TestingConfig
    )
    assert layers == []
    assert clustering.num_clusters == 0
    assert np.all(clustering.labels == NOISE)


def test_single_candidate_equals_plain_dbscan(two_grids, snd_of):
    snd = snd_of(two_grids)
    eps = 1.5
    clustering, _ = multi_density.multi_density_cluster(two_grids, snd, [eps], config=TestingConfig)
    plain = dbscan_core.dbscan(
        two_grids, snd, DbscanParams(eps, multi_density.obtain_min_pts(snd, eps))
    )
    assert clustering.labels.tolist() == plain.labels.tolist()


def test_amd_dbscan_with_forced_k_recovers_both_regions(dense_sparse):
    result = multi_density.amd_dbscan(dense_sparse, TestingConfig, k=1)
    assert result.k_source == "forced"
    assert result.adaptation is None
    assert result.histogram.n_peaks == 2
    assert result.candidates.eps_values.tolist() == [0.125, 1.0]
    assert result.clustering.num_clusters == 2
    assert result.clustering.noise_count == 0
    assert metrics.accuracy(dense_sparse.truth_labels, result.clustering.labels) == 1.0


def test_amd_dbscan_single_peak_on_grids(two_grids):
    result = multi_density.amd_dbscan(two_grids, TestingConfig, k=1, n_peaks=1)
    assert result.candidates.eps_values.tolist() == [1.0]
    assert result.clustering.num_clusters == 2
    assert metrics.accuracy(two_grids.truth_labels, result.clustering.labels) == 1.0


def test_amd_dbscan_adaptive_path(two_grids, snd_of):
    snd = snd_of(two_grids)
    result = multi_density.amd_dbscan(two_grids, TestingConfig, snd=snd)
    assert result.k_source == "adaptive"
    assert result.adaptation is not None
    assert result.k == result.adaptation.adaptive_k
    assert result.adaptation.stable_cluster_count == 2
    assert result.clustering.labels.shape == (two_grids.n,)
    assert {"adapt_k", "candidates", "layers"} <= set(result.timings)


def test_amd_dbscan_input_checks(two_grids):
    with pytest.raises(DatasetTooSmallError):
        multi_density.amd_dbscan(Dataset(np.arange(4.0)), TestingConfig)
    with pytest.raises(ValueError, match="k must be"):
        multi_density.amd_dbscan(two_grids, TestingConfig, k=two_grids.n)


def test_amd_dbscan_on_duplicated_points(doubled_grids):
    result = multi_density.amd_dbscan(doubled_grids, TestingConfig)
    assert result.adaptation is not None
    assert result.adaptation.first_stable_index == 1
    assert result.clustering.labels.shape == (doubled_grids.n,)
    assert np.all(result.candidates.eps_values > 0)


def _three_densities() -> Dataset:
    clusters = (
        BlobCluster((0.0, 0.0), 0.2, 60),
        BlobCluster((15.0, 0.0), 1.0, 60),
        BlobCluster((50.0, 0.0), 3.0, 60),
    )
    return generate_blobs(BlobsSpec(clusters=clusters, seed=4, name="three"))


def test_layers_partition_the_points_in_order(snd_of):
    ds = _three_densities()
    snd = snd_of(ds)
    radii = [0.1, 0.5, 1.5, 4.0]
    clustering, layers = multi_density.multi_density_cluster(ds, snd, radii, config=TestingConfig)

    labels, layer_of = clustering.labels, clustering.layer_of
    assert np.array_equal(labels == NOISE, layer_of == NOISE)
    clustered = labels != NOISE
    assert set(labels[clustered].tolist()) == set(range(clustering.num_clusters))

    ids_by_layer = [np.unique(labels[layer_of == layer.layer_index]) for layer in layers]
    for ids in ids_by_layer:
        for cluster_id in ids:
            assert np.unique(layer_of[labels == cluster_id]).size == 1
    nonempty = [ids for ids in ids_by_layer if ids.size]
    for earlier, later in zip(nonempty, nonempty[1:]):
        assert earlier.max() < later.min()

    assert [layer.eps for layer in layers] == sorted(layer.eps for layer in layers)
    for earlier, later in zip(layers, layers[1:]):
        assert later.active_before == earlier.active_before - earlier.points_clustered
    assert sum(layer.points_clustered for layer in layers) == int(np.count_nonzero(clustered))
    assert sum(layer.clusters_found for layer in layers) == clustering.num_clusters


def test_layered_clustering_is_deterministic(snd_of):
    ds = _three_densities()
    snd = snd_of(ds)
    first, first_layers = multi_density.multi_density_cluster(
        ds, snd, [0.5, 1.5, 4.0], config=TestingConfig
    )
    second, second_layers = multi_density.multi_density_cluster(
        ds, snd, [4.0, 1.5, 0.5], config=TestingConfig
    )
    assert np.array_equal(first.labels, second.labels)
    assert np.array_equal(first.layer_of, second.layer_of)
    assert [layer.to_dict() for layer in first_layers] == [
        layer.to_dict() for layer in second_layers
    ]
