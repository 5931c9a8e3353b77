"""Configuration helpers for the AMD-DBSCAN pipeline."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Type

_BASE_DIR = Path(__file__).resolve().parent.parent
KDIS_SCALES = ("log", "linear")


def _coerce_positive_int(
    raw_value: str | None,
    *,
    fallback: int,
    minimum: int = 1,
    maximum: int | None = None,
) -> int:
    """Best-effort conversion of an environment value into a bounded integer."""

    if raw_value is None:
        return fallback

    try:
        parsed = int(raw_value)
    except (TypeError, ValueError):
        return fallback

    if parsed < minimum:
        return minimum

    if maximum is not None and parsed > maximum:
        return maximum

    return parsed


def _coerce_fraction(
    raw_value: str | None,
    *,
    fallback: float,
    minimum: float = 0.0,
    maximum: float = 1.0,
) -> float:
    """Best-effort conversion of an environment value into a bounded float."""

    if raw_value is None:
        return fallback

    try:
        parsed = float(raw_value)
    except (TypeError, ValueError):
        return fallback

    if parsed != parsed:  # NaN
        return fallback

    return min(max(parsed, minimum), maximum)


def _coerce_choice(raw_value: str | None, *, choices: tuple[str, ...], fallback: str) -> str:
    """Case-insensitive pick from a fixed set of names."""

    if raw_value is None:
        return fallback

    parsed = raw_value.strip().lower()
    return parsed if parsed in choices else fallback


def _resolve_output_dir(env_name: str = "OUTPUT_DIR", *, default: str = "results") -> Path:
    raw = os.getenv(env_name)
    path = Path(raw) if raw else Path(default)
    if not path.is_absolute():
        path = _BASE_DIR / path
    return path


class BaseConfig:
    """Default configuration shared by all environments."""

    REPORT_SCHEMA_VERSION = 1
    LOG_LEVEL = (os.getenv("LOG_LEVEL") or "INFO").upper()
    OUTPUT_DIR = _resolve_output_dir()
    BENCHMARK_DIR = _BASE_DIR / "data" / "benchmarks"
    SPEC_DIR = _BASE_DIR / "data" / "specs"

    DISTANCE_CHUNK_ROWS = _coerce_positive_int(
        os.getenv("DISTANCE_CHUNK_ROWS"), fallback=1024
    )
    DISTANCE_WORKERS = _coerce_positive_int(
        os.getenv("DISTANCE_WORKERS"), fallback=1, maximum=64
    )

    STABILITY_WINDOW = _coerce_positive_int(
        os.getenv("STABILITY_WINDOW"), fallback=3, minimum=2
    )
    FALLBACK_STABILITY_WINDOW = _coerce_positive_int(
        os.getenv("FALLBACK_STABILITY_WINDOW"),
        fallback=2,
        minimum=1,
        maximum=STABILITY_WINDOW,
    )

    HISTOGRAM_SMOOTHING_WINDOW = _coerce_positive_int(
        os.getenv("HISTOGRAM_SMOOTHING_WINDOW"), fallback=5
    )
    PEAK_PROMINENCE_FRACTION = _coerce_fraction(
        os.getenv("PEAK_PROMINENCE_FRACTION"), fallback=0.05
    )
    KDIS_SCALE = _coerce_choice(
        os.getenv("KDIS_SCALE"), choices=KDIS_SCALES, fallback="log"
    )

    KMEANS_MAX_ITER = _coerce_positive_int(os.getenv("KMEANS_MAX_ITER"), fallback=300)
    KMEANS_EXACT_LIMIT = _coerce_positive_int(
        os.getenv("KMEANS_EXACT_LIMIT"), fallback=2048, minimum=0
    )

    CANDIDATE_DEDUP_RTOL = _coerce_fraction(
        os.getenv("CANDIDATE_DEDUP_RTOL"), fallback=1e-9
    )

    BENCH_REPEATS = _coerce_positive_int(os.getenv("BENCH_REPEATS"), fallback=3)


class DevelopmentConfig(BaseConfig):
    LOG_LEVEL = "DEBUG"


class TestingConfig(BaseConfig):
    LOG_LEVEL = "DEBUG"
    DISTANCE_CHUNK_ROWS = 16
    BENCH_REPEATS = 1
    OUTPUT_DIR = _resolve_output_dir("OUTPUT_DIR_TEST", default="results-test")


class BenchmarkConfig(BaseConfig):
    LOG_LEVEL = "WARNING"
    DISTANCE_WORKERS = _coerce_positive_int(
        os.getenv("DISTANCE_WORKERS"), fallback=os.cpu_count() or 1, maximum=64
    )


_CONFIG_MAP: dict[str | None, Type[BaseConfig]] = {
    None: BaseConfig,
    "default": BaseConfig,
    "development": DevelopmentConfig,
    "testing": TestingConfig,
    "benchmark": BenchmarkConfig,
}


def get_config(name: str | None) -> Type[BaseConfig]:
    """Pick a configuration object based on the provided name."""
    key = (name or os.getenv("AMD_DBSCAN_ENV") or "default").lower()
    return _CONFIG_MAP.get(key, BaseConfig)
