"""Labels CSV, JSON run reports and SVG figures."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Mapping, Type

import numpy as np
from matplotlib import colormaps, rc_context
from matplotlib.figure import Figure

from ..config import BaseConfig, get_config
from ..models import NOISE, Clustering, Dataset
from .eps_candidates import KdisHistogram
from .multi_density import PipelineResult

LOGGER = logging.getLogger(__name__)

_SVG_RC = {"svg.hashsalt": "amd-dbscan", "svg.fonttype": "none"}
_NOISE_COLOR = "#9e9e9e"


def write_labels_csv(ds: Dataset, clustering: Clustering, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    header = ["index"] + [f"x{axis}" for axis in range(ds.d)]
    if ds.has_labels:
        header.append("truth_label")
    header += ["predicted_label", "layer"]

    layers = clustering.layer_of
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for index in range(ds.n):
            row: list[Any] = [index] + [repr(float(value)) for value in ds.points[index]]
            if ds.truth_labels is not None:
                row.append(int(ds.truth_labels[index]))
            row.append(int(clustering.labels[index]))
            row.append(NOISE if layers is None else int(layers[index]))
            writer.writerow(row)
    return target


def build_report(
    result: PipelineResult,
    *,
    metrics: Mapping[str, Any] | None = None,
    settings: Mapping[str, Any] | None = None,
    ablation: Mapping[str, Any] | None = None,
    config: Type[BaseConfig] | None = None,
) -> dict[str, Any]:
    """Assemble the JSON-ready report for one pipeline run; timings are left out."""
    cfg = config or get_config(None)
    report: dict[str, Any] = {
        "schema_version": cfg.REPORT_SCHEMA_VERSION,
        "dataset": result.dataset.to_dict(),
        "settings": dict(settings or {}),
        "k": result.k,
        "k_source": result.k_source,
        "adaptation": None if result.adaptation is None else result.adaptation.to_dict(),
        "histogram": result.histogram.to_dict(),
        "candidates": result.candidates.to_dict(),
        "layers": [layer.to_dict() for layer in result.layers],
        "clustering": result.clustering.to_dict(),
        "metrics": dict(metrics or {}),
    }
    if ablation is not None:
        report["ablation"] = dict(ablation)
    return report


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return value.as_posix()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_report_json(report: Mapping[str, Any], path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(report, sort_keys=True, indent=2, default=_json_default)
    target.write_text(payload + "\n", encoding="utf-8")
    LOGGER.debug("Wrote report %s", target)
    return target


def _save_svg(fig: Figure, target: Path) -> Path:
    target.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(target, format="svg", metadata={"Date": None})
    return target


def write_scatter_svg(
    ds: Dataset,
    clustering: Clustering,
    path: str | Path,
    *,
    accuracy: float | None = None,
) -> Path:
    """Two-dimensional scatter, one color per cluster and gray noise."""
    if ds.d != 2:
        raise ValueError(f"scatter plots need 2-D data, got d={ds.d}")

    palette = colormaps["tab20"]
    with rc_context(_SVG_RC):
        fig = Figure(figsize=(6, 6))
        ax = fig.add_subplot()
        noise = clustering.labels == NOISE
        if np.any(noise):
            ax.scatter(ds.points[noise, 0], ds.points[noise, 1], s=6, c=_NOISE_COLOR, label="noise")
        for cluster in range(clustering.num_clusters):
            members = clustering.labels == cluster
            ax.scatter(
                ds.points[members, 0],
                ds.points[members, 1],
                s=6,
                color=palette(cluster % palette.N),
            )
        ax.set_title(f"{ds.name}: {clustering.num_clusters} clusters")
        if accuracy is not None:
            ax.text(
                0.02,
                0.98,
                f"accuracy {accuracy:.3f}",
                transform=ax.transAxes,
                va="top",
            )
        ax.set_aspect("equal", adjustable="datalim")
        return _save_svg(fig, Path(path))


def write_histogram_svg(hist: KdisHistogram, path: str | Path, *, title: str = "k-dis") -> Path:
    edges = hist.bin_edges
    widths = np.diff(edges)
    if widths.size and widths[0] == 0:
        widths = np.ones_like(widths)
    if hist.scale == "log":
        centers = np.sqrt(edges[:-1] * (edges[:-1] + widths))
    else:
        centers = edges[:-1] + widths / 2.0

    with rc_context(_SVG_RC):
        fig = Figure(figsize=(7, 4))
        ax = fig.add_subplot()
        ax.bar(edges[:-1], hist.counts, width=widths, align="edge", color="#90caf9")
        ax.plot(centers, hist.smoothed_counts, color="#1565c0")
        ax.plot(
            hist.peak_positions,
            hist.smoothed_counts[hist.peaks],
            linestyle="none",
            marker="v",
            color="#c62828",
        )
        if hist.scale == "log":
            ax.set_xscale("log")
        ax.set_xlabel("k-dis value")
        ax.set_ylabel("frequency")
        ax.set_title(f"{title}: {hist.n_peaks} peaks")
        return _save_svg(fig, Path(path))
