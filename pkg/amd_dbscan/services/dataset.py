"""Dataset loading, blob generation, and the exact distance engine."""

from __future__ import annotations

import logging
import re
import tomllib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Optional, Type

import numpy as np
from scipy.spatial.distance import cdist

from ..config import BaseConfig, get_config
from ..errors import InputError
from ..models import NOISE, BlobCluster, BlobsSpec, Dataset, SortedNeighborDistances

LOGGER = logging.getLogger(__name__)
_SEPARATORS = re.compile(r"[,\s]+")
_INTEGER_TOKEN = re.compile(r"^[+-]?\d+$")
_FORMAT_HINTS = ("auto", "labeled", "unlabeled")


class DatasetError(InputError):
    """Raised when a dataset file cannot be parsed."""


class DatasetTooSmallError(InputError):
    """Raised when an operation needs more points than the dataset holds."""


class BlobsSpecError(InputError):
    """Raised when a blob spec is malformed or degenerate."""


def require_points(ds_or_n: Dataset | SortedNeighborDistances | int, minimum: int) -> None:
    n = ds_or_n if isinstance(ds_or_n, int) else ds_or_n.n
    if n < minimum:
        raise DatasetTooSmallError(
            f"dataset too small: {n} points, at least {minimum} required"
        )


def load_dataset(
    path: str | Path,
    format_hint: str | None = None,
    *,
    labels_path: str | Path | None = None,
    name: str | None = None,
) -> Dataset:
    """Parse a whitespace/comma separated point file into a ``Dataset``."""
    hint = (format_hint or "auto").lower()
    if hint not in _FORMAT_HINTS:
        raise DatasetError(f"unknown format hint {format_hint!r}; use one of {_FORMAT_HINTS}")

    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {source}: {exc}") from exc

    rows: list[list[str]] = []
    line_numbers: list[int] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = [token for token in _SEPARATORS.split(stripped) if token]
        if rows and len(tokens) != len(rows[0]):
            raise DatasetError(
                f"{source}:{line_no}: expected {len(rows[0])} columns, found {len(tokens)}"
            )
        rows.append(tokens)
        line_numbers.append(line_no)

    if not rows:
        raise DatasetError(f"{source}: dataset file is empty")

    width = len(rows[0])
    has_label_column = _has_label_column(rows, width, hint, source)
    coord_width = width - 1 if has_label_column else width
    if coord_width < 1:
        raise DatasetError(f"{source}: no coordinate columns")

    points = np.empty((len(rows), coord_width), dtype=np.float64)
    labels = np.empty(len(rows), dtype=np.int64) if has_label_column else None
    for row_index, (tokens, line_no) in enumerate(zip(rows, line_numbers)):
        for col, token in enumerate(tokens[:coord_width]):
            try:
                points[row_index, col] = float(token)
            except ValueError as exc:
                raise DatasetError(
                    f"{source}:{line_no}: non-numeric token {token!r}"
                ) from exc
        if labels is not None:
            token = tokens[-1]
            if not _INTEGER_TOKEN.match(token):
                raise DatasetError(f"{source}:{line_no}: label {token!r} is not an integer")
            labels[row_index] = int(token)

    if not np.all(np.isfinite(points)):
        raise DatasetError(f"{source}: coordinates must be finite")

    if labels_path is not None:
        labels = load_labels(labels_path)
        if labels.shape[0] != points.shape[0]:
            raise DatasetError(
                f"{labels_path}: {labels.shape[0]} labels for {points.shape[0]} points"
            )

    dataset = Dataset(points, labels, name or source.stem)
    LOGGER.info(
        "Loaded %s: n=%s d=%s labels=%s", dataset.name, dataset.n, dataset.d, dataset.has_labels
    )
    return dataset


def _has_label_column(rows: list[list[str]], width: int, hint: str, source: Path) -> bool:
    if hint == "labeled":
        if width < 2:
            raise DatasetError("labeled format needs at least one coordinate column")
        return True
    if hint == "unlabeled" or width < 3:
        return False
    detected = all(_INTEGER_TOKEN.match(tokens[-1]) for tokens in rows)
    if detected:
        LOGGER.info(
            "%s: last of %s columns is all integers, reading it as labels "
            "(pass --format unlabeled to keep it as a coordinate)",
            source,
            width,
        )
    return detected


def load_labels(path: str | Path) -> np.ndarray:
    """Read one integer label per line, skipping header lines of partition files."""
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read labels {source}: {exc}") from exc

    values = [
        int(line)
        for line in (raw.strip() for raw in text.splitlines())
        if _INTEGER_TOKEN.match(line)
    ]
    if not values:
        raise DatasetError(f"{source}: no integer labels found")
    return np.asarray(values, dtype=np.int64)


def save_dataset(ds: Dataset, path: str | Path) -> Path:
    """Write ``ds`` in the plain text format read by ``load_dataset``."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {ds.name} n={ds.n} d={ds.d}"]
    for index, point in enumerate(ds.points):
        fields = [repr(float(value)) for value in point]
        if ds.truth_labels is not None:
            fields.append(str(int(ds.truth_labels[index])))
        lines.append(" ".join(fields))
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return target


def load_blobs_spec(path: str | Path) -> BlobsSpec:
    """Read a TOML blob spec (``[[clusters]]`` tables plus optional ``[noise]``)."""
    source = Path(path)
    try:
        with source.open("rb") as handle:
            raw = tomllib.load(handle)
    except OSError as exc:
        raise BlobsSpecError(f"cannot read blob spec {source}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise BlobsSpecError(f"{source}: invalid TOML: {exc}") from exc

    return parse_blobs_spec(raw, default_name=source.stem)


def parse_blobs_spec(raw: dict[str, Any], *, default_name: str = "blobs") -> BlobsSpec:
    entries = raw.get("clusters")
    if not isinstance(entries, list) or not entries:
        raise BlobsSpecError("blob spec needs a non-empty [[clusters]] array")

    clusters: list[BlobCluster] = []
    for index, entry in enumerate(entries):
        try:
            center = tuple(float(value) for value in entry["center"])
            std = float(entry["std"])
            count = int(entry["count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BlobsSpecError(f"cluster {index}: needs center, std and count ({exc})") from exc
        if not center:
            raise BlobsSpecError(f"cluster {index}: center must have at least one coordinate")
        if not std > 0:
            raise BlobsSpecError(f"cluster {index}: std must be positive, got {std}")
        if count < 1:
            raise BlobsSpecError(f"cluster {index}: count must be at least 1, got {count}")
        clusters.append(BlobCluster(center=center, std=std, count=count))

    dims = {len(cluster.center) for cluster in clusters}
    if len(dims) != 1:
        raise BlobsSpecError(f"cluster centers disagree on dimension: {sorted(dims)}")

    noise = raw.get("noise") or {}
    try:
        noise_count = int(noise.get("count", 0))
        low = tuple(float(v) for v in noise["low"]) if "low" in noise else None
        high = tuple(float(v) for v in noise["high"]) if "high" in noise else None
        seed = int(raw.get("seed", 0))
    except (TypeError, ValueError) as exc:
        raise BlobsSpecError(f"invalid noise block or seed: {exc}") from exc

    if noise_count < 0:
        raise BlobsSpecError("noise count must be nonnegative")

    return BlobsSpec(
        clusters=tuple(clusters),
        noise_count=noise_count,
        noise_low=low,
        noise_high=high,
        seed=seed,
        name=str(raw.get("name", default_name)),
    )


def generate_blobs(spec: BlobsSpec, *, seed: int | None = None) -> Dataset:
    """Draw Gaussian blobs and uniform noise with a PCG64 generator."""
    dimension = spec.dimension
    low, high = _resolve_noise_bounds(spec, dimension)

    rng = np.random.Generator(np.random.PCG64(spec.seed if seed is None else seed))
    blocks: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    for index, cluster in enumerate(spec.clusters):
        center = np.asarray(cluster.center, dtype=np.float64)
        blocks.append(rng.normal(loc=center, scale=cluster.std, size=(cluster.count, dimension)))
        labels.append(np.full(cluster.count, index, dtype=np.int64))

    if spec.noise_count > 0:
        blocks.append(rng.uniform(low, high, size=(spec.noise_count, dimension)))
        labels.append(np.full(spec.noise_count, NOISE, dtype=np.int64))

    dataset = Dataset(np.vstack(blocks), np.concatenate(labels), spec.name)
    LOGGER.debug("Generated %s with %s points", spec.name, dataset.n)
    return dataset


def _resolve_noise_bounds(
    spec: BlobsSpec, dimension: int
) -> tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    if spec.noise_count == 0:
        return None, None
    if spec.noise_low is None or spec.noise_high is None:
        raise BlobsSpecError("noise_count > 0 requires noise low/high bounds")
    low = np.asarray(spec.noise_low, dtype=np.float64)
    high = np.asarray(spec.noise_high, dtype=np.float64)
    if low.shape != (dimension,) or high.shape != (dimension,):
        raise BlobsSpecError(f"noise bounds must have dimension {dimension}")
    if np.any(high <= low):
        raise BlobsSpecError("noise bounds have zero volume")
    return low, high


def sorted_neighbor_distances(
    ds: Dataset, config: Type[BaseConfig] | None = None
) -> SortedNeighborDistances:
    """Exact pairwise distances, each row sorted ascending with self removed."""
    require_points(ds, 2)
    settings = config or get_config(None)
    n = ds.n
    chunk = max(int(settings.DISTANCE_CHUNK_ROWS), 1)
    workers = max(int(settings.DISTANCE_WORKERS), 1)

    rows = np.empty((n, n - 1), dtype=np.float64)
    neighbors = np.empty((n, n - 1), dtype=np.int32 if n < 2**31 else np.int64)
    blocks = [(start, min(start + chunk, n)) for start in range(0, n, chunk)]

    def _fill(block: tuple[int, int]) -> None:
        start, stop = block
        full = cdist(ds.points[start:stop], ds.points, metric="euclidean")
        order = np.argsort(full, axis=1, kind="stable")
        own = np.arange(start, stop)[:, None]
        order = order[order != own].reshape(stop - start, n - 1)
        rows[start:stop] = np.take_along_axis(full, order, axis=1)
        neighbors[start:stop] = order

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_fill, blocks))
    else:
        for block in blocks:
            _fill(block)

    LOGGER.debug("Computed %sx%s sorted distance rows in %s blocks", n, n - 1, len(blocks))
    return SortedNeighborDistances(rows=rows, neighbors=neighbors)
