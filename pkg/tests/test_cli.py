from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pytest

from dgo_optim import __main__
from dgo_optim.experiment import (
    ExperimentConfig,
    ExperimentReport,
    experiment_schema,
)
from dgo_optim.objectives import OBJECTIVES, SUITES, Objective
from dgo_optim.results import RESULT_COLUMNS, TRACE_COLUMNS, BenchTable


def _main(monkeypatch: pytest.MonkeyPatch, *args: str) -> int:
    monkeypatch.setattr(sys, "argv", ["dgo", *args])
    return __main__.main()


@pytest.fixture
def workdir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def nan_objective(monkeypatch: pytest.MonkeyPatch) -> str:
    def factory() -> Objective:
        return Objective(
            "nan_1d", lambda x: np.full(x.shape[:-1], np.nan), ((0.0, 1.0),)
        )

    monkeypatch.setitem(OBJECTIVES, "nan_1d", factory)
    monkeypatch.setitem(SUITES, "broken", ("quadratic_1d", "nan_1d"))
    return "nan_1d"


def test_run_config_files(
    config_file: Path, workdir: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Every example experiment runs with small budgets."""
    args = ["-c", str(config_file), "--max-evaluations", "3000", "--budget", "2000"]
    assert _main(monkeypatch, "run", *args) == 0

    config = ExperimentConfig.from_file(config_file)
    output = config.output
    table = BenchTable.from_file(workdir / output.results)
    assert len(table.rows) == config.repetitions
    assert {row.optimizer for row in table.rows} == {config.optimizer}
    assert {row.seed for row in table.rows} == {
        config.repetition_seed(r) for r in range(config.repetitions)
    }
    limit = 3000 * config.dgo.starts if config.optimizer == "dgo" else 2000
    for row in table.rows:
        assert row.evaluations <= limit
        assert (row.wall_time_s is None) is (not output.timing)
    if output.trace is not None:
        assert (workdir / output.trace).exists()
    if output.report is not None:
        assert (workdir / output.report).exists()


def test_run_f2(
    workdir: Path, monkeypatch: pytest.MonkeyPatch, f2_minimizer: float
) -> None:
    args = ["--objective", "f2_1d", "--optimizer", "dgo", "--max-bits", "32"]
    args += ["--seed", "7", "--starts", "5", "--deterministic-refine"]
    assert _main(monkeypatch, "run", *args) == 0

    (row,) = BenchTable.from_file(workdir / "results.csv").rows
    assert row.objective == "f2_1d"
    assert row.seed == 7
    assert abs(row.best_point[0] - f2_minimizer) <= 1e-3
    assert row.termination == "max_resolution_converged"
    assert row.wall_time_s is not None

    trace = (workdir / "trace.csv").read_text().splitlines()
    assert trace[0] == ",".join(TRACE_COLUMNS)
    column = TRACE_COLUMNS.index("start_index")
    assert {line.split(",")[column] for line in trace[1:]} == {"0", "1", "2", "3", "4"}

    # result and trace files are appended to
    assert _main(monkeypatch, "run", *args, "--no-timing") == 0
    rows = BenchTable.from_file(workdir / "results.csv").rows
    assert len(rows) == 2
    assert rows[0].best_value == rows[1].best_value
    assert rows[1].wall_time_s is None


def test_run_report(workdir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    args = ["--objective", "camel6_2d", "--optimizer", "monte_carlo", "--budget", "50"]
    args += ["--repetitions", "2", "--no-trace", "--report", "report.json"]
    args += ["--results", "results.yaml"]
    assert _main(monkeypatch, "-v", "run", *args) == 0
    assert sorted(p.name for p in workdir.iterdir()) == ["report.json", "results.yaml"]
    report = ExperimentReport.from_file(workdir / "report.json")
    assert [r.evaluations for r in report.runs] == [50, 50]
    assert report.config.output.trace is None


def test_run_overrides_config(workdir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    config = Path(__file__).parent / "configs" / "camel_annealing.yaml"
    args = ["-c", str(config), "--repetitions", "1", "--budget", "300"]
    args += ["--results", "override.csv", "--trace", "override_trace.csv"]
    assert _main(monkeypatch, "run", *args) == 0
    (row,) = BenchTable.from_file(workdir / "override.csv").rows
    assert row.optimizer == "annealing"
    assert row.seed == 11
    assert row.evaluations == 300
    assert (workdir / "camel_report.yaml").exists()
    assert not (workdir / "camel_results.tsv").exists()


@pytest.mark.parametrize(
    "args",
    [
        ["--optimizer", "dgo"],
        ["--objective", "nope"],
        ["--objective", "f2_1d", "--optimizer", "newton"],
        ["--objective", "f2_1d", "--initial-bits", "8", "--max-bits", "24"],
        ["--objective", "f2_1d", "--results", "results.xlsx"],
        ["--objective", "f2_1d", "--seed", "-1"],
        ["-c", "missing.yaml"],
        ["--objective", "synthetic_highdim", "--max-bits", "64"],
    ],
    ids=[
        "no-objective",
        "unknown-objective",
        "unknown-optimizer",
        "bad-schedule",
        "bad-results",
        "negative-seed",
        "missing-config",
        "too-many-bits",
    ],
)
def test_run_invalid(
    args: list[str],
    workdir: Path,
    monkeypatch: pytest.MonkeyPatch,
    capsys: pytest.CaptureFixture,
) -> None:
    assert _main(monkeypatch, "run", *args) == 2
    assert "error" in capsys.readouterr().err
    # nothing is evaluated or written
    assert not list(workdir.iterdir())


def test_run_start_outside_box(workdir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    config = workdir / "start.yaml"
    config.write_text("objective: quadratic_1d\noptimizer: annealing\nstart: [12.0]\n")
    assert _main(monkeypatch, "run", "-c", str(config)) == 2
    assert sorted(p.name for p in workdir.iterdir()) == ["start.yaml"]


def test_run_evaluation_error(
    nan_objective: str, workdir: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    assert _main(monkeypatch, "run", "--objective", nan_objective) == 1
    assert not list(workdir.iterdir())


def test_bench_is_deterministic(workdir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    args = ["1d", "--optimizers", "dgo,monte_carlo", "--budget", "500"]
    args += ["--seed", "3", "--no-timing"]
    assert _main(monkeypatch, "bench", *args, "-o", "first.csv") == 0
    assert _main(monkeypatch, "bench", *args, "-o", "second.csv") == 0
    first = (workdir / "first.csv").read_bytes()
    assert first == (workdir / "second.csv").read_bytes()

    table = BenchTable.from_file(workdir / "first.csv")
    assert first.decode().splitlines()[0] == ",".join(RESULT_COLUMNS)
    pairs = [(row.objective, row.optimizer) for row in table.rows]
    assert pairs == [
        (objective, optimizer)
        for objective in SUITES["1d"]
        for optimizer in ("dgo", "monte_carlo")
    ]
    assert all(row.distance_to_optimum is not None for row in table.rows)
    assert {"f2_1d", "f3_1d"} <= {row.objective for row in table.rows}


def test_bench_workers(workdir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    args = ["2d", "--optimizers", "monte_carlo,annealing", "--budget", "200"]
    args += ["--repetitions", "2", "--no-timing"]
    assert _main(monkeypatch, "bench", *args, "-o", "serial.yaml") == 0
    assert _main(monkeypatch, "bench", *args, "--workers", "4", "-o", "pool.yaml") == 0
    assert (workdir / "serial.yaml").read_text() == (workdir / "pool.yaml").read_text()
    assert len(BenchTable.from_file(workdir / "pool.yaml").rows) == 12


def test_bench_failures(
    nan_objective: str,
    workdir: Path,
    monkeypatch: pytest.MonkeyPatch,
    capsys: pytest.CaptureFixture,
) -> None:
    args = ["broken", "--optimizers", "monte_carlo", "--budget", "10", "-o", "b.json"]
    assert _main(monkeypatch, "bench", *args) == 1
    table = BenchTable.from_file(workdir / "b.json")
    assert [row.objective for row in table.rows] == ["quadratic_1d"]
    assert len(table.failures) == 1
    assert table.failures[0].startswith(f"{nan_objective}/monte_carlo/seed=")
    assert nan_objective in capsys.readouterr().err


@pytest.mark.parametrize(
    "args",
    [
        ["1d", "--optimizers", "dgo,newton"],
        ["1d", "--optimizers", ","],
        ["1d", "--repetitions", "0"],
        ["1d", "--workers", "0"],
        ["1d", "--seed", "-5"],
        ["1d", "-o", "bench.txt"],
        ["1d", "--max-bits", "12"],
        ["1d", "--budget", "0"],
    ],
)
def test_bench_invalid(
    args: list[str], workdir: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    assert _main(monkeypatch, "bench", *args) == 2
    assert not list(workdir.iterdir())


def test_bench_unknown_suite(monkeypatch: pytest.MonkeyPatch) -> None:
    with pytest.raises(SystemExit):
        _main(monkeypatch, "bench", "5d")


@pytest.mark.parametrize("command", ["list-objectives", "list-optimizers"])
def test_list(
    command: str, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture
) -> None:
    assert _main(monkeypatch, command) == 0
    out = capsys.readouterr().out
    expected = "camel6_2d" if command == "list-objectives" else "gradient_descent"
    assert expected in out


def test_schema(
    workdir: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture
) -> None:
    assert _main(monkeypatch, "schema") == 0
    assert '"$id"' in capsys.readouterr().out

    target = workdir / "schemas" / "experiment.schema.json"
    assert _main(monkeypatch, "schema", "-o", str(target)) == 0
    assert json.loads(target.read_text()) == experiment_schema()
