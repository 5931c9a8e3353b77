"""Tests for the command line interface."""

from __future__ import annotations

import json

import numpy as np
import pytest

from amd_dbscan import cli
from amd_dbscan.errors import InputError
from amd_dbscan.models import Dataset
from amd_dbscan.services import dataset as dataset_service
from amd_dbscan.services import multi_density, param_adapt
from amd_dbscan.services.param_adapt import AdaptationResult, NoStablePlateau

MINI_SPEC = """
name = "mini"
seed = 4

[[clusters]]
center = [0.0, 0.0]
std = 0.3
count = 25

[[clusters]]
center = [20.0, 0.0]
std = 1.5
count = 25
"""


@pytest.fixture()
def grid_file(two_grids, tmp_path):
    return dataset_service.save_dataset(two_grids, tmp_path / "grids.txt")


@pytest.fixture()
def spec_file(tmp_path):
    path = tmp_path / "mini.toml"
    path.write_text(MINI_SPEC, encoding="utf-8")
    return path


def test_cluster_writes_outputs(grid_file, tmp_path, capsys):
    out = tmp_path / "out"
    code = cli.main(["cluster", "--data", str(grid_file), "--k", "1", "--peaks", "1", "--out", str(out)])
    assert code == 0
    summary = capsys.readouterr().out
    assert "clusters=2" in summary
    assert "accuracy=1.0000" in summary
    for suffix in ("labels.csv", "report.json", "histogram.csv", "histogram.svg", "scatter.svg"):
        assert (out / f"grids_{suffix}").exists()
    assert not (out / "grids_trace.csv").exists()

    report = json.loads((out / "grids_report.json").read_text())
    assert report["settings"]["data"] == "grids.txt"
    assert report["metrics"]["nmi"] == pytest.approx(1.0)


def test_cluster_accepts_spec_given_as_data(spec_file, tmp_path, capsys):
    code = cli.main(["cluster", "--data", str(spec_file), "--k", "2", "--out", str(tmp_path)])
    assert code == 0
    assert capsys.readouterr().out.startswith("mini:")
    assert (tmp_path / "mini_labels.csv").exists()


def test_missing_file_exits_with_input_error(tmp_path):
    assert cli.main(["cluster", "--data", str(tmp_path / "absent.txt"), "--out", str(tmp_path)]) == 2


def test_too_small_dataset_exits_with_input_error(tmp_path):
    path = tmp_path / "tiny.txt"
    path.write_text("0 0\n1 1\n2 2\n", encoding="utf-8")
    assert cli.main(["cluster", "--data", str(path), "--out", str(tmp_path)]) == 2


def test_forced_k_beyond_n_is_an_input_error(grid_file, tmp_path):
    assert cli.main(["cluster", "--data", str(grid_file), "--k", "60", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({}, "exactly one"),
        ({"data": "a.txt", "spec": "b.toml"}, "exactly one"),
        ({"data": "a.txt", "peaks": 0}, "--peaks"),
        ({"data": "a.txt", "repeats": 0}, "--repeats"),
        ({"spec": "b.toml", "labels": "gt.txt"}, "--labels"),
    ],
)
def test_run_config_validation(kwargs, message):
    from pathlib import Path

    values = {key: Path(value) if isinstance(value, str) else value for key, value in kwargs.items()}
    with pytest.raises(InputError, match=message):
        cli.RunConfig(**values)


def test_run_config_routes_toml_data_to_spec():
    from pathlib import Path

    run = cli.RunConfig(data=Path("regime.toml"))
    assert run.data is None
    assert run.spec == Path("regime.toml")


def test_run_config_resolves_bundled_spec_names():
    import argparse

    from amd_dbscan.config import TestingConfig

    run = cli.RunConfig.from_args(argparse.Namespace(spec="blobs3"), TestingConfig)
    assert run.spec == TestingConfig.SPEC_DIR / "blobs3.toml"
    assert run.spec.exists()

    explicit = cli.RunConfig.from_args(argparse.Namespace(spec="mine.toml"), TestingConfig)
    assert explicit.spec.name == "mine.toml"


def test_pipeline_failure_exits_with_3(grid_file, tmp_path, monkeypatch):
    def _fail(*args, **kwargs):
        raise NoStablePlateau([3, 2, 1])

    monkeypatch.setattr(multi_density, "amd_dbscan", _fail)
    assert cli.main(["cluster", "--data", str(grid_file), "--out", str(tmp_path)]) == 3


def test_ablate_prints_table_and_writes_report(grid_file, tmp_path, capsys):
    code = cli.main(
        ["ablate", "--data", str(grid_file), "--mode", "fixed-k-4", "--out", str(tmp_path)]
    )
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["mode", "k", "clusters", "accuracy", "nmi"]
    assert lines[1].split()[:2] == ["fixed-k-4", "4"]

    report = json.loads((tmp_path / "grids_ablation.json").read_text())
    assert report["ablation"]["modes"]["fixed-k-4"]["k"] == 4
    assert report["settings"]["mode"] == "fixed-k-4"


def test_forced_k_for_ablation_modes():
    assert cli._forced_k("auto", 100) is None
    assert cli._forced_k("fixed-k-4", 100) == 4
    assert cli._forced_k("fixed-k-4", 3) == 2
    assert cli._forced_k("k-half-n", 100) == 50
    assert cli._forced_k("k-half-n", 2) == 1


def _fake_adaptation(best_index: int, strategy: str) -> AdaptationResult:
    return AdaptationResult(
        best_index=best_index,
        adaptive_k=best_index + 1,
        stable_cluster_count=2,
        first_stable_index=0,
        dbscan_invocations=3,
        strategy=strategy,
    )


def test_bench_reports_matching_strategies(grid_file, tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(
        param_adapt,
        "adapt_k",
        lambda ds, snd, config=None, strategy="binary", table=None: _fake_adaptation(7, strategy),
    )
    code = cli.main(["bench", "--data", str(grid_file), "--repeats", "2", "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads((tmp_path / "grids_bench.json").read_text())
    assert summary["match"] is True
    assert summary["repeats"] == 2
    assert summary["binary"]["best_index"] == 7
    assert "binary" in capsys.readouterr().out


def test_bench_mismatch_exits_with_3(grid_file, tmp_path, monkeypatch):
    monkeypatch.setattr(
        param_adapt,
        "adapt_k",
        lambda ds, snd, config=None, strategy="binary", table=None: _fake_adaptation(
            7 if strategy == "binary" else 9, strategy
        ),
    )
    assert cli.main(["bench", "--data", str(grid_file), "--out", str(tmp_path)]) == 3


def test_vnn_single_and_table(grid_file, spec_file, capsys):
    assert cli.main(["vnn", "--data", str(grid_file)]) == 0
    single = capsys.readouterr().out
    assert single.startswith("grids:")
    assert "class=single" in single

    assert cli.main(["vnn", "--data", str(grid_file), "--spec", str(spec_file)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split()[0] == "dataset"
    assert lines[1].split()[:3] == ["grids", "60", "2"]
    assert lines[1].split()[-1] == "FALSE"
    assert lines[2].split()[0] == "mini"


def test_vnn_needs_an_input():
    assert cli.main(["vnn"]) == 2


def test_gen_writes_loadable_dataset(spec_file, tmp_path):
    assert cli.main(["gen", "--spec", str(spec_file), "--out", str(tmp_path)]) == 0
    loaded = dataset_service.load_dataset(tmp_path / "mini.txt")
    assert loaded.n == 50
    assert loaded.cluster_count == 2


def test_eval_reads_label_files_and_labels_csv(grid_file, two_grids, tmp_path, capsys):
    truth = tmp_path / "truth.txt"
    truth.write_text("\n".join(str(v) for v in two_grids.truth_labels) + "\n", encoding="utf-8")
    assert cli.main(["cluster", "--data", str(grid_file), "--k", "1", "--peaks", "1", "--out", str(tmp_path)]) == 0
    capsys.readouterr()

    assert cli.main(["eval", "--truth", str(truth), "--pred", str(tmp_path / "grids_labels.csv")]) == 0
    assert capsys.readouterr().out.strip() == "nmi=1.0000 accuracy=1.0000"


def test_eval_length_mismatch_exits_with_2(tmp_path):
    truth = tmp_path / "truth.txt"
    truth.write_text("0\n1\n", encoding="utf-8")
    pred = tmp_path / "pred.txt"
    pred.write_text("0\n", encoding="utf-8")
    assert cli.main(["eval", "--truth", str(truth), "--pred", str(pred)]) == 2


def test_sweep_writes_trace_with_nmi(grid_file, tmp_path, capsys):
    assert cli.main(["sweep", "--data", str(grid_file), "--out", str(tmp_path)]) == 0
    header = (tmp_path / "grids_sweep.csv").read_text().splitlines()[0]
    assert header == "index,eps,min_pts,cluster_count,nmi"
    assert "highest NMI 1.0000" in capsys.readouterr().out


def test_read_label_file_plain(tmp_path):
    path = tmp_path / "labels.txt"
    path.write_text("1\n2\n-1\n", encoding="utf-8")
    assert cli.read_label_file(path).tolist() == [1, 2, -1]


def test_read_label_file_rejects_non_integer_predictions(tmp_path):
    path = tmp_path / "pred.csv"
    path.write_text("index,predicted_label\n0,1\n1,oops\n", encoding="utf-8")
    with pytest.raises(dataset_service.DatasetError, match="predicted_label"):
        cli.read_label_file(path)

    truth = tmp_path / "truth.txt"
    truth.write_text("0\n1\n", encoding="utf-8")
    assert cli.main(["eval", "--truth", str(truth), "--pred", str(path)]) == 2


def test_cluster_on_duplicated_points(doubled_grids, tmp_path, capsys):
    path = dataset_service.save_dataset(doubled_grids, tmp_path / "doubled.txt")
    code = cli.main(["cluster", "--data", str(path), "--out", str(tmp_path)])
    captured = capsys.readouterr()
    assert code == 0
    assert "Traceback" not in captured.err
    assert captured.out.startswith("doubled:")


def test_value_error_exits_with_2(grid_file, tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise ValueError("eps must be a positive finite number, got 0.0")

    monkeypatch.setattr(multi_density, "amd_dbscan", broken)
    assert cli.main(["cluster", "--data", str(grid_file), "--out", str(tmp_path)]) == 2


def test_verbose_flag_parses():
    args = cli.parse_args(["--verbose", "vnn", "--data", "x.txt"])
    assert args.verbose
    assert args.command == "vnn"


def test_dataset_fixture_is_two_dimensional(two_grids):
    assert isinstance(two_grids, Dataset)
    assert np.asarray(two_grids.points).shape == (60, 2)
