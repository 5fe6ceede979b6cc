"""Main cli."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table
from rich.text import Text

from .baselines import BaselineConfig
from .core import DEFAULT_SEED, DgoConfig
from .experiment import ExperimentConfig, experiment_schema, load_config_data
from .harness import BENCH_DGO, OPTIMIZERS, run_bench, run_experiment, write_outputs
from .objectives import SUITES, EvaluationError, list_objectives
from .results import ResultRow

logger = logging.getLogger("dgo_optim")

console = Console()
err_console = Console(stderr=True)


def _add_dgo_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("dgo")
    group.add_argument("--starts", type=int, help="Independent DGO starts.")
    group.add_argument(
        "--initial-bits", type=int, help="Per-variable bits of the first level."
    )
    group.add_argument(
        "--max-bits", type=int, help="Per-variable bits of the last level."
    )
    group.add_argument(
        "--max-evaluations", type=int, help="Cap on objective calls per DGO start."
    )
    group.add_argument(
        "--deterministic-refine",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Append zero bits (instead of random bits) when refining.",
    )
    group.add_argument(
        "--eval-workers",
        type=int,
        dest="eval_workers",
        help="Threads used to evaluate the children of one DGO step.",
    )
    baseline = parser.add_argument_group("baselines")
    baseline.add_argument(
        "--budget", type=int, help="Evaluation budget of the baseline optimizers."
    )


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse command line arguments for the DGO benchmark harness."""
    parser = argparse.ArgumentParser(
        prog="dgo", description="DGO global optimizer and benchmark harness."
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress (-v) or debugging details (-vv).",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one experiment and write its results.")
    run.add_argument(
        "-c", "--config", type=Path, help="Experiment file (.yaml, .yml or .json)."
    )
    run.add_argument("--objective", help="Registered objective name.")
    run.add_argument("--optimizer", help="Registered optimizer name.")
    run.add_argument("--seed", type=int, help="Seed of the first repetition.")
    run.add_argument("--repetitions", type=int, help="Number of repetitions.")
    _add_dgo_options(run)
    output = run.add_argument_group("output")
    output.add_argument("--results", type=Path, help="Result table path.")
    output.add_argument("--trace", type=Path, help="Trace path (.csv or .tsv).")
    output.add_argument(
        "--no-trace", action="store_true", help="Do not write a trace file."
    )
    output.add_argument("--report", type=Path, help="JSON/YAML report path.")
    output.add_argument(
        "--no-timing",
        action="store_true",
        help="Leave wall time empty so reruns give byte-identical files.",
    )

    bench = commands.add_parser(
        "bench", help="Run a suite of objectives with several optimizers."
    )
    bench.add_argument("suite", choices=list(SUITES), help="Objective suite.")
    bench.add_argument(
        "--optimizers",
        default="dgo",
        help="Comma-separated optimizer names (default: dgo).",
    )
    bench.add_argument("--seed", type=int, default=None, help="Seed of repetition 0.")
    bench.add_argument("--repetitions", type=int, default=1)
    bench.add_argument(
        "--workers", type=int, default=None, help="Runs executed concurrently."
    )
    bench.add_argument(
        "-o",
        "--output",
        type=Path,
        default=Path("bench.csv"),
        help="Table path (.csv, .tsv, .json, .yaml; default: bench.csv).",
    )
    bench.add_argument("--no-timing", action="store_true")
    _add_dgo_options(bench)

    commands.add_parser("list-objectives", help="Show the registered objectives.")
    commands.add_parser("list-optimizers", help="Show the registered optimizers.")
    schema = commands.add_parser(
        "schema", help="Print the JSON schema of experiment files."
    )
    schema.add_argument(
        "-o", "--output", type=Path, help="Write the schema to this file instead."
    )
    return parser.parse_args(argv)


# ----------------------  config merging  ----------------------


def _set(section: dict[str, Any], key: str, value: Any) -> None:
    if value is not None:
        section[key] = value


def _dgo_overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    _set(overrides, "starts", args.starts)
    _set(overrides, "initial_bits", args.initial_bits)
    _set(overrides, "max_bits", args.max_bits)
    _set(overrides, "max_evaluations", args.max_evaluations)
    _set(overrides, "deterministic_refine", args.deterministic_refine)
    _set(overrides, "workers", args.eval_workers)
    return overrides


def experiment_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Merge ``--config`` with command line flags and validate the result once."""
    data = load_config_data(args.config) if args.config else {}
    _set(data, "objective", args.objective)
    _set(data, "optimizer", args.optimizer)
    _set(data, "seed", args.seed)
    _set(data, "repetitions", args.repetitions)

    data["dgo"] = {**(data.get("dgo") or {}), **_dgo_overrides(args)}
    baseline = dict(data.get("baseline") or {})
    _set(baseline, "evaluation_budget", args.budget)
    data["baseline"] = baseline

    output = dict(data.get("output") or {})
    _set(output, "results", args.results)
    _set(output, "trace", args.trace)
    _set(output, "report", args.report)
    if args.no_trace:
        output["trace"] = None
    if args.no_timing:
        output["timing"] = False
    data["output"] = output
    return ExperimentConfig.model_validate(data)


# ----------------------  output  ----------------------


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.10g}"


def _rows_table(rows: Sequence[ResultRow], title: str | None = None) -> Table:
    table = Table(title=title)
    for column in ("objective", "optimizer", "seed", "best value", "best point"):
        table.add_column(column)
    for column in ("distance", "evaluations", "wall time (s)"):
        table.add_column(column, justify="right")
    table.add_column("termination")
    for row in rows:
        table.add_row(
            row.objective,
            row.optimizer,
            str(row.seed),
            _fmt(row.best_value),
            ", ".join(_fmt(v) for v in row.best_point[:4])
            + (", ..." if len(row.best_point) > 4 else ""),
            _fmt(row.distance_to_optimum),
            str(row.evaluations),
            _fmt(row.wall_time_s),
            row.termination,
        )
    return table


def _fail(message: str, status: int = 2) -> int:
    err_console.print(Text.assemble(("error: ", "bold red"), message))
    return status


# ----------------------  commands  ----------------------


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = experiment_from_args(args)
    except (ValidationError, ValueError, OSError, NotImplementedError) as e:
        return _fail(str(e))
    try:
        report = run_experiment(config)
    except EvaluationError as e:
        return _fail(str(e), status=1)
    except ValueError as e:
        # start point outside the box, or a bad bound/start combination
        return _fail(str(e))
    try:
        written = write_outputs(report)
    except (ValueError, OSError) as e:
        return _fail(str(e), status=1)
    for path in written:
        logger.info("wrote %s", path)
    console.print(_rows_table(report.rows))
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    names = [name.strip() for name in args.optimizers.split(",") if name.strip()]
    unknown = [name for name in names if name not in OPTIMIZERS]
    if not names or unknown:
        return _fail(
            f"Unknown optimizer(s) {unknown or names!r}. "
            f"Available: {', '.join(sorted(OPTIMIZERS))}"
        )
    if args.seed is not None and args.seed < 0:
        return _fail("--seed must be non-negative")
    if args.repetitions < 1:
        return _fail("--repetitions must be at least 1")
    if args.workers is not None and args.workers < 1:
        return _fail("--workers must be at least 1")
    if args.output.suffix not in {".csv", ".tsv", ".json", ".yaml", ".yml"}:
        return _fail(f"Unsupported output file format: {args.output.suffix}")
    try:
        overrides = _dgo_overrides(args)
        dgo = DgoConfig.model_validate({**BENCH_DGO.model_dump(), **overrides})
        baseline = BaselineConfig(
            **({} if args.budget is None else {"evaluation_budget": args.budget})
        )
    except ValidationError as e:
        return _fail(str(e))

    table = run_bench(
        args.suite,
        names,
        seed=DEFAULT_SEED if args.seed is None else args.seed,
        repetitions=args.repetitions,
        dgo=dgo,
        baseline=baseline,
        workers=args.workers,
        timing=not args.no_timing,
    )
    table.write_file(args.output)
    logger.info("wrote %s", args.output)
    console.print(_rows_table(table.rows, title=f"suite {args.suite!r}"))
    if table.failures:
        for failure in table.failures:
            err_console.print(Text.assemble(("failed: ", "red"), failure))
        return 1
    return 0


def _cmd_list_objectives(args: argparse.Namespace) -> int:
    table = Table(title="objectives")
    table.add_column("name", no_wrap=True)
    table.add_column("dim", justify="right")
    table.add_column("suites")
    table.add_column("known minimum", justify="right")
    table.add_column("description")
    for objective in list_objectives():
        suites = [
            s for s, names in SUITES.items() if s != "all" and objective.name in names
        ]
        optimum = objective.known_optimum
        table.add_row(
            objective.name,
            str(objective.dimension),
            ", ".join(suites),
            "" if optimum is None else _fmt(optimum.value),
            objective.description,
        )
    console.print(table)
    return 0


def _cmd_list_optimizers(args: argparse.Namespace) -> int:
    table = Table(title="optimizers")
    table.add_column("name", no_wrap=True)
    table.add_column("description")
    for spec in OPTIMIZERS.values():
        table.add_row(spec.name, spec.description)
    console.print(table)
    return 0


def _cmd_schema(args: argparse.Namespace) -> int:
    content = json.dumps(experiment_schema(), indent=2) + "\n"
    if args.output is None:
        console.print_json(content)
        return 0
    try:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        args.output.write_text(content, encoding="utf-8")
    except OSError as e:
        return _fail(str(e), status=1)
    logger.info("wrote %s", args.output)
    return 0


COMMANDS = {
    "run": _cmd_run,
    "bench": _cmd_bench,
    "list-objectives": _cmd_list_objectives,
    "list-optimizers": _cmd_list_optimizers,
    "schema": _cmd_schema,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Run the ``dgo`` command line interface and return its exit status."""
    args = parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
    )
    logger.setLevel(level)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
