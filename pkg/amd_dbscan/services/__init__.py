"""Service package exports."""

from . import dataset, dbscan_core, eps_candidates, metrics, multi_density, param_adapt, reports  # noqa: F401
