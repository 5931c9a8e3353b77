"""Exception hierarchy shared by the clustering services."""

from __future__ import annotations


class ClusteringError(RuntimeError):
    """Base exception for pipeline failures."""


class InputError(ClusteringError):
    """Raised when a dataset, spec, or override cannot be used as given."""


class PipelineError(ClusteringError):
    """Raised when a clustering stage cannot produce a result."""
