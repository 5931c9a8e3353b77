"""Command line interface for clustering, ablations and benchmarks."""

from __future__ import annotations

import argparse
import csv
import logging
import statistics
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Type

import numpy as np
from dotenv import load_dotenv

from .config import BaseConfig, get_config
from .errors import InputError, PipelineError
from .models import Dataset, SortedNeighborDistances
from .services import dataset as dataset_service
from .services import metrics, multi_density, param_adapt, reports
from .services.eps_candidates import write_histogram_csv

LOGGER = logging.getLogger("amd_dbscan")

_SPEC_SUFFIXES = {".toml", ".spec"}
ABLATION_MODES = ("auto", "fixed-k-4", "k-half-n")


@dataclass(slots=True)
class RunConfig:
    """Validated options shared by the dataset-driven subcommands."""

    data: Path | None = None
    spec: Path | None = None
    labels: Path | None = None
    format_hint: str = "auto"
    peaks: int | None = None
    k: int | None = None
    bins: int | None = None
    repeats: int = 3
    seed: int | None = None
    out: Path | None = None
    exclude_noise_accuracy: bool = False

    def __post_init__(self) -> None:
        if (self.data is None) == (self.spec is None):
            raise InputError("give exactly one of --data or --spec")
        if self.data is not None and self.data.suffix.lower() in _SPEC_SUFFIXES:
            self.data, self.spec = None, self.data
        for option in ("peaks", "k", "bins"):
            value = getattr(self, option)
            if value is not None and value < 1:
                raise InputError(f"--{option} must be at least 1, got {value}")
        if self.repeats < 1:
            raise InputError(f"--repeats must be at least 1, got {self.repeats}")
        if self.labels is not None and self.spec is not None:
            raise InputError("--labels only applies to --data files")

    @classmethod
    def from_args(cls, args: argparse.Namespace, config: Type[BaseConfig]) -> "RunConfig":
        return cls(
            data=_path_or_none(getattr(args, "data", None)),
            spec=_spec_path(getattr(args, "spec", None), config),
            labels=_path_or_none(getattr(args, "labels", None)),
            format_hint=getattr(args, "format", None) or "auto",
            peaks=getattr(args, "peaks", None),
            k=getattr(args, "k", None),
            bins=getattr(args, "bins", None),
            repeats=getattr(args, "repeats", None) or config.BENCH_REPEATS,
            seed=getattr(args, "seed", None),
            out=_path_or_none(getattr(args, "out", None)),
            exclude_noise_accuracy=bool(getattr(args, "exclude_noise_accuracy", False)),
        )

    def output_dir(self, config: Type[BaseConfig]) -> Path:
        return self.out if self.out is not None else Path(config.OUTPUT_DIR)

    def settings(self) -> dict[str, Any]:
        """Report-safe subset of the options."""
        payload = asdict(self)
        for key in ("data", "spec", "labels"):
            payload[key] = None if payload[key] is None else Path(payload[key]).name
        payload.pop("out")
        return payload


def _path_or_none(value: str | None) -> Path | None:
    return Path(value) if value else None


def _spec_path(value: str | None, config: Type[BaseConfig]) -> Path | None:
    """A spec file path, or the name of a bundled spec under ``SPEC_DIR``."""
    path = _path_or_none(value)
    if path is None or path.suffix or path.exists():
        return path
    return Path(config.SPEC_DIR) / f"{path.name}.toml"


def _add_input_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="Point file, or a .toml blob spec")
    parser.add_argument("--spec", help="Blob spec (TOML) to generate the dataset from, or a bundled spec name")
    parser.add_argument("--labels", help="Separate ground-truth label file, one per line")
    parser.add_argument(
        "--format",
        choices=("auto", "labeled", "unlabeled"),
        default="auto",
        help="Whether the last column of --data holds labels (default: auto)",
    )
    parser.add_argument("--seed", type=int, default=None, help="Override the blob spec seed")
    parser.add_argument("--out", help="Output directory (default: OUTPUT_DIR)")
    parser.add_argument(
        "--exclude-noise-accuracy",
        action="store_true",
        help="Leave predicted noise out of the accuracy denominator",
    )


def _add_pipeline_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--peaks", type=int, default=None, help="Force the candidate count N")
    parser.add_argument("--k", type=int, default=None, help="Force k and skip the adaptive search")
    parser.add_argument("--bins", type=int, default=None, help="Histogram bins (default: ceil(sqrt(n)))")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amd-dbscan", description=__doc__)
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging output")
    commands = parser.add_subparsers(dest="command", required=True)

    cluster = commands.add_parser("cluster", help="Run the full pipeline on one dataset")
    _add_input_arguments(cluster)
    _add_pipeline_arguments(cluster)

    ablate = commands.add_parser("ablate", help="Compare adaptive k with fixed choices")
    _add_input_arguments(ablate)
    ablate.add_argument("--peaks", type=int, default=None, help="Force the candidate count N")
    ablate.add_argument("--bins", type=int, default=None, help="Histogram bins")
    ablate.add_argument(
        "--mode",
        choices=ABLATION_MODES + ("all",),
        default="all",
        help="Which k to use (default: all)",
    )

    bench = commands.add_parser("bench", help="Time binary against linear best-index search")
    _add_input_arguments(bench)
    bench.add_argument("--repeats", type=int, default=None, help="Timed repetitions per strategy")

    vnn = commands.add_parser("vnn", help="Report the density-difference metric")
    vnn.add_argument("--data", nargs="*", default=[], help="Point files or .toml blob specs")
    vnn.add_argument("--spec", nargs="*", default=[], help="Blob specs")
    vnn.add_argument("--format", choices=("auto", "labeled", "unlabeled"), default="auto")
    vnn.add_argument("--seed", type=int, default=None)

    gen = commands.add_parser("gen", help="Write a dataset file generated from a blob spec")
    gen.add_argument("--spec", required=True, help="Blob spec (TOML) or bundled spec name")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", help="Output directory (default: OUTPUT_DIR)")

    evaluate = commands.add_parser("eval", help="Score one labeling against another")
    evaluate.add_argument("--truth", required=True, help="Ground-truth label file")
    evaluate.add_argument("--pred", required=True, help="Predicted label file or labels CSV")
    evaluate.add_argument("--exclude-noise-accuracy", action="store_true")

    sweep = commands.add_parser("sweep", help="Cluster count and NMI at every table index")
    _add_input_arguments(sweep)

    return parser


def parse_args(argv: Iterable[str] | None = None) -> argparse.Namespace:
    return build_parser().parse_args(None if argv is None else list(argv))


def configure_logging(verbose: bool, level: str = "INFO") -> None:
    resolved = logging.DEBUG if verbose else getattr(logging, level.upper(), logging.INFO)
    logging.basicConfig(
        level=resolved,
        format="%(asctime)s %(levelname)s %(message)s",
        force=True,
    )


def load_input(run: RunConfig) -> Dataset:
    if run.spec is not None:
        spec = dataset_service.load_blobs_spec(run.spec)
        return dataset_service.generate_blobs(spec, seed=run.seed)
    assert run.data is not None
    return dataset_service.load_dataset(run.data, run.format_hint, labels_path=run.labels)


def _load_any(path: Path, format_hint: str, seed: int | None) -> Dataset:
    if path.suffix.lower() in _SPEC_SUFFIXES:
        return dataset_service.generate_blobs(dataset_service.load_blobs_spec(path), seed=seed)
    return dataset_service.load_dataset(path, format_hint)


def _format_score(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


def _scores(
    ds: Dataset,
    result: multi_density.PipelineResult,
    run: RunConfig,
    vnn_report: metrics.VnnReport | None = None,
) -> dict[str, Any]:
    return metrics.evaluate(
        ds.truth_labels,
        result.clustering,
        vnn_report=vnn_report,
        exclude_noise=run.exclude_noise_accuracy,
    )


def _forced_k(mode: str, n: int) -> int | None:
    if mode == "auto":
        return None
    if mode == "fixed-k-4":
        return min(4, n - 1)
    if mode == "k-half-n":
        return min(max(n // 2, 1), n - 1)
    raise InputError(f"unknown ablation mode {mode!r}")


def cmd_cluster(args: argparse.Namespace, config: Type[BaseConfig]) -> int:
    run = RunConfig.from_args(args, config)
    ds = load_input(run)
    if run.k is not None and run.k > ds.n - 1:
        raise InputError(f"--k {run.k} exceeds n-1 = {ds.n - 1}")

    snd = dataset_service.sorted_neighbor_distances(ds, config)
    result = multi_density.amd_dbscan(
        ds, config, n_peaks=run.peaks, k=run.k, bins=run.bins, snd=snd
    )
    scores = _scores(ds, result, run, metrics.vnn(ds, snd))

    out = run.output_dir(config)
    stem = out / ds.name
    reports.write_labels_csv(ds, result.clustering, f"{stem}_labels.csv")
    reports.write_report_json(
        reports.build_report(result, metrics=scores, settings=run.settings(), config=config),
        f"{stem}_report.json",
    )
    write_histogram_csv(result.histogram, f"{stem}_histogram.csv")
    reports.write_histogram_svg(result.histogram, f"{stem}_histogram.svg", title=ds.name)
    if result.adaptation is not None:
        param_adapt.write_trace_csv(result.adaptation.trace, f"{stem}_trace.csv")
    if ds.d == 2:
        reports.write_scatter_svg(
            ds, result.clustering, f"{stem}_scatter.svg", accuracy=scores["accuracy"]
        )

    print(
        f"{ds.name}: n={ds.n} k={result.k} ({result.k_source}) N={len(result.candidates)} "
        f"clusters={result.clustering.num_clusters} noise={result.clustering.noise_count} "
        f"accuracy={_format_score(scores['accuracy'])} nmi={_format_score(scores['nmi'])}"
    )
    return 0


def cmd_ablate(args: argparse.Namespace, config: Type[BaseConfig]) -> int:
    run = RunConfig.from_args(args, config)
    ds = load_input(run)
    snd = dataset_service.sorted_neighbor_distances(ds, config)
    modes = ABLATION_MODES if args.mode == "all" else (args.mode,)

    rows: dict[str, dict[str, Any]] = {}
    results: dict[str, multi_density.PipelineResult] = {}
    for mode in modes:
        result = multi_density.amd_dbscan(
            ds,
            config,
            n_peaks=run.peaks,
            k=_forced_k(mode, ds.n),
            bins=run.bins,
            snd=snd,
        )
        scores = _scores(ds, result, run)
        results[mode] = result
        rows[mode] = {
            "k": result.k,
            "clusters": result.clustering.num_clusters,
            "accuracy": scores["accuracy"],
            "nmi": scores["nmi"],
        }

    primary = results[modes[0]]
    report = reports.build_report(
        primary,
        metrics=_scores(ds, primary, run, metrics.vnn(ds, snd)),
        settings=run.settings() | {"mode": args.mode},
        ablation={"modes": rows, "truth_clusters": ds.cluster_count},
        config=config,
    )
    reports.write_report_json(report, run.output_dir(config) / f"{ds.name}_ablation.json")

    print(f"{'mode':<10} {'k':>6} {'clusters':>9} {'accuracy':>9} {'nmi':>7}")
    for mode, row in rows.items():
        print(
            f"{mode:<10} {row['k']:>6} {row['clusters']:>9} "
            f"{_format_score(row['accuracy']):>9} {_format_score(row['nmi']):>7}"
        )
    return 0


def _time_strategy(
    ds: Dataset,
    snd: SortedNeighborDistances,
    strategy: param_adapt.Strategy,
    repeats: int,
    config: Type[BaseConfig],
) -> tuple[param_adapt.AdaptationResult, list[float]]:
    timings: list[float] = []
    result: param_adapt.AdaptationResult | None = None
    for _ in range(repeats):
        started = time.perf_counter()
        result = param_adapt.adapt_k(ds, snd, config=config, strategy=strategy)
        timings.append(time.perf_counter() - started)
    assert result is not None
    return result, timings


def cmd_bench(args: argparse.Namespace, config: Type[BaseConfig]) -> int:
    run = RunConfig.from_args(args, config)
    ds = load_input(run)
    snd = dataset_service.sorted_neighbor_distances(ds, config)

    summary: dict[str, Any] = {
        "schema_version": config.REPORT_SCHEMA_VERSION,
        "dataset": ds.to_dict(),
        "repeats": run.repeats,
    }
    found: dict[str, param_adapt.AdaptationResult] = {}
    for strategy in ("binary", "linear"):
        result, timings = _time_strategy(ds, snd, strategy, run.repeats, config)
        found[strategy] = result
        summary[strategy] = {
            "best_index": result.best_index,
            "adaptive_k": result.adaptive_k,
            "dbscan_invocations": result.dbscan_invocations,
            "fallback_used": result.fallback_used,
            "min_seconds": min(timings),
            "mean_seconds": statistics.fmean(timings),
        }

    linear_time = summary["linear"]["min_seconds"]
    summary["time_ratio"] = summary["binary"]["min_seconds"] / linear_time if linear_time else None
    summary["match"] = found["binary"].best_index == found["linear"].best_index
    reports.write_report_json(summary, run.output_dir(config) / f"{ds.name}_bench.json")

    for strategy in ("binary", "linear"):
        row = summary[strategy]
        print(
            f"{strategy:<7} best={row['best_index']} k={row['adaptive_k']} "
            f"runs={row['dbscan_invocations']} min={row['min_seconds']:.4f}s "
            f"mean={row['mean_seconds']:.4f}s"
        )
    if not summary["match"]:
        LOGGER.error(
            "Best index mismatch: binary %s, linear %s",
            found["binary"].best_index,
            found["linear"].best_index,
        )
        return 3
    return 0


def cmd_vnn(args: argparse.Namespace, config: Type[BaseConfig]) -> int:
    paths = [Path(value) for value in args.data]
    paths += [_spec_path(value, config) for value in args.spec]
    if not paths:
        raise InputError("give at least one --data or --spec")

    reports_by_name: list[tuple[Dataset, metrics.VnnReport]] = []
    for path in paths:
        ds = _load_any(path, args.format, args.seed)
        snd = dataset_service.sorted_neighbor_distances(ds, config)
        reports_by_name.append((ds, metrics.vnn(ds, snd)))

    if len(reports_by_name) == 1:
        ds, report = reports_by_name[0]
        print(f"{ds.name}: eps1={report.eps1:.6g} vnn={report.vnn:.4f} class={report.density_class}")
        return 0

    print(f"{'dataset':<16} {'size':>7} {'clusters':>9} {'VNN':>12} multi-density")
    for ds, report in reports_by_name:
        clusters = "-" if ds.cluster_count is None else str(ds.cluster_count)
        flag = "TRUE" if report.is_multi_density else "FALSE"
        print(f"{ds.name:<16} {ds.n:>7} {clusters:>9} {report.vnn:>12.4f} {flag}")
    return 0


def cmd_gen(args: argparse.Namespace, config: Type[BaseConfig]) -> int:
    spec = dataset_service.load_blobs_spec(_spec_path(args.spec, config))
    ds = dataset_service.generate_blobs(spec, seed=args.seed)
    out = Path(args.out) if args.out else Path(config.OUTPUT_DIR)
    target = dataset_service.save_dataset(ds, out / f"{ds.name}.txt")
    print(f"{ds.name}: wrote {ds.n} points to {target}")
    return 0


def read_label_file(path: str | Path) -> np.ndarray:
    """Plain label file, or the ``predicted_label`` column of a labels CSV."""
    source = Path(path)
    if source.suffix.lower() == ".csv":
        try:
            with source.open(newline="", encoding="utf-8") as handle:
                reader = csv.DictReader(handle)
                if reader.fieldnames and "predicted_label" in reader.fieldnames:
                    return np.asarray(
                        [int(row["predicted_label"]) for row in reader], dtype=np.int64
                    )
        except OSError as exc:
            raise dataset_service.DatasetError(f"cannot read labels {source}: {exc}") from exc
        except ValueError as exc:
            raise dataset_service.DatasetError(
                f"{source}: predicted_label must hold integers ({exc})"
            ) from exc
    return dataset_service.load_labels(source)


def cmd_eval(args: argparse.Namespace, config: Type[BaseConfig]) -> int:
    truth = read_label_file(args.truth)
    predicted = read_label_file(args.pred)
    score_nmi = metrics.nmi(truth, predicted)
    score_acc = metrics.accuracy(truth, predicted, exclude_noise=args.exclude_noise_accuracy)
    print(f"nmi={score_nmi:.4f} accuracy={score_acc:.4f}")
    return 0


def cmd_sweep(args: argparse.Namespace, config: Type[BaseConfig]) -> int:
    run = RunConfig.from_args(args, config)
    ds = load_input(run)
    snd = dataset_service.sorted_neighbor_distances(ds, config)
    table = param_adapt.build_parameter_table(ds, snd)
    points = param_adapt.full_sweep(ds, snd, table, truth_labels=ds.truth_labels)
    target = param_adapt.write_trace_csv(points, run.output_dir(config) / f"{ds.name}_sweep.csv")

    scored = [point for point in points if point.nmi is not None]
    if scored:
        top = max(scored, key=lambda point: point.nmi or 0.0)
        print(f"{ds.name}: highest NMI {top.nmi:.4f} at index {top.index} (k={top.min_pts})")
    print(f"{ds.name}: wrote {len(points)} sweep points to {target}")
    return 0


_COMMANDS = {
    "cluster": cmd_cluster,
    "ablate": cmd_ablate,
    "bench": cmd_bench,
    "vnn": cmd_vnn,
    "gen": cmd_gen,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
}


def main(argv: Iterable[str] | None = None) -> int:
    load_dotenv()
    args = parse_args(argv)
    config = get_config(None)
    configure_logging(args.verbose, config.LOG_LEVEL)

    try:
        return _COMMANDS[args.command](args, config)
    except InputError as exc:
        LOGGER.error("%s", exc)
        return 2
    except PipelineError as exc:
        LOGGER.error("%s", exc)
        return 3
    except ValueError as exc:
        LOGGER.error("invalid input: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
