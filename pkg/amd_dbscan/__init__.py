"""Adaptive multi-density DBSCAN.

k is picked from the data's own neighbor-distance table and the k-dis
histogram is turned into candidate radii. One DBSCAN layer then runs per
radius, smallest first.
"""

from .models import NOISE, Clustering, Dataset, DbscanParams, SortedNeighborDistances
from .services.dataset import generate_blobs, load_dataset, sorted_neighbor_distances
from .services.metrics import accuracy, nmi, vnn
from .services.multi_density import amd_dbscan

__all__ = [
    "NOISE",
    "Clustering",
    "Dataset",
    "DbscanParams",
    "SortedNeighborDistances",
    "accuracy",
    "amd_dbscan",
    "generate_blobs",
    "load_dataset",
    "nmi",
    "sorted_neighbor_distances",
    "vnn",
]
