from __future__ import annotations

import csv
from pathlib import Path

import pytest
from pydantic import ValidationError

from dgo_optim.bitstring import BitString
from dgo_optim.results import (
    RESULT_COLUMNS,
    TRACE_COLUMNS,
    BenchTable,
    IterationRecord,
    MultiStartResult,
    ResultRow,
    RunResult,
    write_delimited,
    write_trace,
)


def _run(best_value: float, start_index: int = 0) -> RunResult:
    return RunResult(
        objective="camel6_2d",
        seed=3,
        start_index=start_index,
        best_point=(0.1, -0.7),
        best_value=best_value,
        best_bits="0110",
        resolution_bits=2,
        evaluations=10,
        steps=2,
        termination="max_resolution_converged",
        trace=[
            IterationRecord(
                iteration=0,
                event="start",
                best_value=1.0,
                parent_value=1.0,
                evaluations_so_far=1,
                resolution_bits=2,
            ),
            IterationRecord(
                iteration=1,
                event="improve",
                best_value=best_value,
                parent_value=best_value,
                evaluations_so_far=4,
                resolution_bits=2,
            ),
        ],
    )


def _table() -> BenchTable:
    return BenchTable(
        suite="2d",
        rows=[
            ResultRow(
                objective="camel6_2d",
                optimizer="dgo",
                seed=7,
                best_value=-1.0316284534898774,
                best_point=(0.08984201368301331, -0.7126564032704135),
                distance_to_optimum=2.5e-10,
                evaluations=123456,
                steps=42,
                wall_time_s=0.125,
                termination="max_resolution_converged",
            ),
            ResultRow(
                objective="sphere_2d",
                optimizer="monte_carlo",
                seed=8,
                repetition=1,
                best_value=0.1,
                best_point=(1 / 3, -2 / 3),
                evaluations=10,
                termination="evaluation_budget",
            ),
        ],
    )


def test_run_result_bits() -> None:
    run = _run(-1.0)
    assert run.best_bits == BitString("0110")
    data = run.model_dump(mode="json")
    assert data["best_bits"] == "0110"
    assert RunResult.model_validate(data) == run
    assert RunResult.model_validate({**data, "best_bits": ""}).best_bits is None
    with pytest.raises(ValidationError):
        RunResult.model_validate({**data, "best_bits": "0120"})
    with pytest.raises(ValidationError):
        RunResult.model_validate({**data, "termination": "bored"})


def test_multi_start_ties_pick_lowest_index() -> None:
    runs = [_run(-0.5, 0), _run(-1.0, 1), _run(-1.0, 2)]
    result = MultiStartResult.from_runs(runs)
    assert result.best_index == 1
    assert result.best == runs[1]
    assert result.evaluations == 30
    with pytest.raises(ValidationError, match="out of range"):
        MultiStartResult(runs=runs, best_index=3)


@pytest.mark.parametrize("ext", [".csv", ".tsv"])
def test_delimited_table(tmp_path: Path, ext: str) -> None:
    table = _table()
    out = tmp_path / f"table{ext}"
    table.write_file(out)
    lines = out.read_text().splitlines()
    delimiter = "," if ext == ".csv" else "\t"
    assert lines[0] == delimiter.join(RESULT_COLUMNS)
    assert len(lines) == 3
    # empty fields stand for missing values
    assert lines[2].split(delimiter)[RESULT_COLUMNS.index("wall_time_s")] == ""

    loaded = BenchTable.from_file(out)
    assert loaded.rows == table.rows

    table.write_file(out, append=True)
    assert BenchTable.from_file(out).rows == table.rows * 2
    table.write_file(out)
    assert BenchTable.from_file(out).rows == table.rows


def test_append_requires_matching_header(tmp_path: Path) -> None:
    out = tmp_path / "other.csv"
    out.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="Cannot append"):
        _table().write_file(out, append=True)
    # an empty file is simply written
    out.write_text("")
    _table().write_file(out, append=True)
    assert out.read_text().startswith(",".join(RESULT_COLUMNS))


@pytest.mark.parametrize("ext", [".json", ".yaml", ".yml"])
def test_structured_table(tmp_path: Path, ext: str) -> None:
    table = _table()
    out = tmp_path / f"table{ext}"
    table.write_file(out)
    assert "schema_version" in out.read_text()
    loaded = BenchTable.from_file(out)
    assert loaded == table
    assert loaded.schema_version == "1.0"


def test_schema_version_always_dumped() -> None:
    table = BenchTable()
    for mode in ("python", "json"):
        assert "schema_version" in table.model_dump(exclude_unset=True, mode=mode)
        assert "schema_version" in table.model_dump(exclude_defaults=True, mode=mode)


def test_unsupported_formats(tmp_path: Path) -> None:
    with pytest.raises(NotImplementedError):
        _table().write_file(tmp_path / "table.txt")
    with pytest.raises(NotImplementedError):
        BenchTable.from_file(tmp_path / "table.txt")


def test_write_trace(tmp_path: Path) -> None:
    out = tmp_path / "trace.csv"
    write_trace(out, [(0, _run(-1.0)), (1, _run(-2.0))])
    with out.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(TRACE_COLUMNS)
    assert [r["repetition"] for r in rows] == ["0", "0", "1", "1"]
    assert [r["event"] for r in rows] == ["start", "improve"] * 2
    assert rows[3]["best_value"] == "-2.0"
    write_trace(out, [(2, _run(-3.0))], append=True)
    assert len(out.read_text().splitlines()) == 7


def test_write_delimited_full_precision(tmp_path: Path) -> None:
    out = tmp_path / "values.csv"
    value = 0.1 + 0.2
    write_delimited(out, ["x"], [{"x": value}])
    with out.open(newline="") as fh:
        (row,) = csv.DictReader(fh)
    assert float(row["x"]) == value
