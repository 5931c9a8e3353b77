"""Pytest fixtures for the clustering pipeline."""

from __future__ import annotations

import os
import sys
from typing import Type

import numpy as np
import pytest

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from amd_dbscan.config import BaseConfig, TestingConfig  # noqa: E402
from amd_dbscan.models import Dataset  # noqa: E402
from amd_dbscan.services.dataset import sorted_neighbor_distances  # noqa: E402

BENCHMARK_DIR = str(BaseConfig.BENCHMARK_DIR)
SPEC_DIR = str(BaseConfig.SPEC_DIR)


def grid(columns: int, rows: int, *, spacing: float = 1.0, offset=(0.0, 0.0)) -> np.ndarray:
    xs, ys = np.meshgrid(np.arange(columns) * spacing, np.arange(rows) * spacing)
    return np.column_stack([xs.ravel() + offset[0], ys.ravel() + offset[1]])


@pytest.fixture(autouse=True)
def _testing_environment(monkeypatch):
    monkeypatch.setenv("AMD_DBSCAN_ENV", "testing")
    yield


@pytest.fixture()
def testing_config() -> Type[BaseConfig]:
    return TestingConfig


@pytest.fixture()
def two_grids() -> Dataset:
    """Two 6x5 unit grids 100 apart, labeled 0 and 1."""
    points = np.vstack([grid(6, 5), grid(6, 5, offset=(100.0, 0.0))])
    labels = np.repeat([0, 1], 30)
    return Dataset(points, labels, "two-grids")


@pytest.fixture()
def dense_sparse() -> Dataset:
    """A 10x10 grid at spacing 0.125 and a 10x10 grid at spacing 1, far apart."""
    points = np.vstack([grid(10, 10, spacing=0.125), grid(10, 10, offset=(100.0, 0.0))])
    labels = np.repeat([0, 1], 100)
    return Dataset(points, labels, "dense-sparse")


@pytest.fixture()
def snd_of(testing_config):
    def _compute(ds: Dataset):
        return sorted_neighbor_distances(ds, testing_config)

    return _compute


@pytest.fixture()
def doubled_grids(two_grids) -> Dataset:
    """``two_grids`` with every point present twice."""
    return Dataset(
        np.vstack([two_grids.points, two_grids.points]),
        np.concatenate([two_grids.truth_labels, two_grids.truth_labels]),
        "doubled",
    )
