"""Optimizer registry and the run/bench drivers behind the command line."""

from __future__ import annotations

import logging
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .baselines import BASELINES, BaselineConfig, BaselineMethod
from .bitstring import Transform
from .core import DEFAULT_SEED, DgoConfig, multi_start
from .experiment import ExperimentConfig, ExperimentReport
from .objectives import SUITES, Objective, get_objective
from .results import BenchTable, ResultRow, RunResult, write_trace

__all__ = [
    "BENCH_DGO",
    "OPTIMIZERS",
    "OptimizerSpec",
    "run_bench",
    "run_experiment",
    "run_once",
    "write_outputs",
]

logger = logging.getLogger(__name__)

#: DGO settings used by ``bench`` unless overridden.
BENCH_DGO = DgoConfig(starts=5, max_evaluations=2_000_000)

Bounds = Sequence[tuple[float, float]]
RunFunc = Callable[[Objective, Bounds | None, Sequence[float] | None, int], RunResult]
Builder = Callable[[DgoConfig, BaselineConfig], RunFunc]


@dataclass(frozen=True)
class OptimizerSpec:
    """A registered optimizer.

    ``build`` receives the DGO and baseline settings of an experiment and returns
    a function ``(objective, bounds, start, seed) -> RunResult``.
    """

    name: str
    description: str
    build: Builder


def _dgo_runner(transform: Transform) -> Builder:
    def build(dgo: DgoConfig, baseline: BaselineConfig) -> RunFunc:
        def run(
            objective: Objective,
            bounds: Bounds | None,
            start: Sequence[float] | None,
            seed: int,
        ) -> RunResult:
            config = dgo.model_copy(update={"seed": seed, "transform": transform})
            result = multi_start(objective, bounds, config, start=start)
            best = result.best
            # one row per multi-start run: charge every start, keep every trace
            return best.model_copy(
                update={
                    "evaluations": result.evaluations,
                    "steps": sum(r.steps for r in result.runs),
                    "trace": [record for r in result.runs for record in r.trace],
                }
            )

        return run

    return build


def _baseline_runner(method: BaselineMethod) -> Builder:
    func = BASELINES[method]
    takes_start = method in ("gradient_descent", "annealing")

    def build(dgo: DgoConfig, baseline: BaselineConfig) -> RunFunc:
        def run(
            objective: Objective,
            bounds: Bounds | None,
            start: Sequence[float] | None,
            seed: int,
        ) -> RunResult:
            config = baseline.model_copy(update={"method": method, "seed": seed})
            if takes_start:
                return func(objective, bounds, config, start=start)
            return func(objective, bounds, config)

        return run

    return build


OPTIMIZERS: dict[str, OptimizerSpec] = {
    spec.name: spec
    for spec in (
        OptimizerSpec(
            "dgo", "DGO, Gray-code segment inversion", _dgo_runner("gray")
        ),
        OptimizerSpec(
            "dgo_binary",
            "DGO ablation, plain binary segment inversion",
            _dgo_runner("binary"),
        ),
        OptimizerSpec(
            "monte_carlo", "uniform random sampling", _baseline_runner("monte_carlo")
        ),
        OptimizerSpec(
            "gradient_descent",
            "projected central-difference gradient descent",
            _baseline_runner("gradient_descent"),
        ),
        OptimizerSpec(
            "genetic",
            "generational binary genetic algorithm",
            _baseline_runner("genetic"),
        ),
        OptimizerSpec(
            "annealing",
            "simulated annealing, geometric cooling",
            _baseline_runner("annealing"),
        ),
    )
}


def _resolve_optimizer(name: str) -> OptimizerSpec:
    try:
        return OPTIMIZERS[name]
    except KeyError:
        raise KeyError(
            f"Unknown optimizer {name!r}. Available: {', '.join(sorted(OPTIMIZERS))}"
        ) from None


def run_once(
    objective: Objective,
    run: RunFunc,
    *,
    seed: int,
    repetition: int = 0,
    bounds: Bounds | None = None,
    start: Sequence[float] | None = None,
    timing: bool = True,
) -> tuple[ResultRow, RunResult]:
    """Execute one run and summarize it as a result row."""
    tic = time.perf_counter()
    result = run(objective, bounds, start, seed)
    elapsed = time.perf_counter() - tic
    optimum = objective.known_optimum
    row = ResultRow(
        objective=objective.name,
        optimizer=result.optimizer,
        seed=seed,
        repetition=repetition,
        best_value=result.best_value,
        best_point=result.best_point,
        distance_to_optimum=(
            None if optimum is None else optimum.distance(result.best_point)
        ),
        evaluations=result.evaluations,
        steps=result.steps,
        wall_time_s=elapsed if timing else None,
        termination=result.termination,
    )
    logger.info(
        "%s on %s (seed %d): best %r after %d evaluations",
        row.optimizer,
        row.objective,
        seed,
        row.best_value,
        row.evaluations,
    )
    return row, result


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run every repetition of an experiment, in order."""
    objective = get_objective(config.objective, **config.objective_params)
    run = _resolve_optimizer(config.optimizer).build(config.dgo, config.baseline)
    rows: list[ResultRow] = []
    runs: list[RunResult] = []
    for repetition in range(config.repetitions):
        row, result = run_once(
            objective,
            run,
            seed=config.repetition_seed(repetition),
            repetition=repetition,
            bounds=config.bounds,
            start=config.start,
            timing=config.output.timing,
        )
        rows.append(row)
        runs.append(result)
    return ExperimentReport(config=config, rows=rows, runs=runs)


def write_outputs(report: ExperimentReport) -> list[Path]:
    """Write the result table, trace and optional report of an experiment.

    Delimited result and trace files are appended to.
    """
    output = report.config.output
    written = [output.results]
    BenchTable(rows=report.rows).write_file(output.results, append=True)
    if output.trace is not None:
        write_trace(
            output.trace,
            ((row.repetition, run) for row, run in zip(report.rows, report.runs)),
            append=True,
        )
        written.append(output.trace)
    if output.report is not None:
        report.write_file(output.report)
        written.append(output.report)
    return written


def run_bench(
    suite: str,
    optimizers: Iterable[str] = ("dgo",),
    *,
    seed: int = DEFAULT_SEED,
    repetitions: int = 1,
    dgo: DgoConfig | None = None,
    baseline: BaselineConfig | None = None,
    workers: int | None = None,
    timing: bool = True,
) -> BenchTable:
    """Run every objective of ``suite`` with every optimizer.

    Rows are ordered by objective, optimizer and repetition, whatever
    ``workers`` is. A run that raises is logged and listed in
    :attr:`BenchTable.failures` instead of a row.

    Raises
    ------
    KeyError
        If the suite, an objective, or an optimizer is unknown.
    """
    if suite not in SUITES:
        raise KeyError(f"Unknown suite {suite!r}. Available: {', '.join(SUITES)}")
    dgo = dgo or BENCH_DGO
    baseline = baseline or BaselineConfig()
    runners = {
        name: _resolve_optimizer(name).build(dgo, baseline) for name in optimizers
    }
    tasks = [
        (get_objective(objective), name, repetition)
        for objective in SUITES[suite]
        for name in runners
        for repetition in range(repetitions)
    ]

    def _task(task: tuple[Objective, str, int]) -> ResultRow | str:
        objective, name, repetition = task
        run_seed = seed + repetition
        try:
            row, _ = run_once(
                objective,
                runners[name],
                seed=run_seed,
                repetition=repetition,
                timing=timing,
            )
        except Exception as e:
            logger.exception(
                "%s on %s (seed %d) failed", name, objective.name, run_seed
            )
            return f"{objective.name}/{name}/seed={run_seed}: {e}"
        return row

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(workers, thread_name_prefix="dgo-bench") as pool:
            outcomes = list(pool.map(_task, tasks))
    else:
        outcomes = [_task(task) for task in tasks]
    return BenchTable(
        suite=suite,
        rows=[o for o in outcomes if isinstance(o, ResultRow)],
        failures=[o for o in outcomes if isinstance(o, str)],
    )
