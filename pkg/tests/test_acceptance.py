"""End-to-end quality checks of the optimizer on the benchmark objectives."""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np
import pytest

from dgo_optim.bitstring import BitString
from dgo_optim.core import DgoConfig, dgo_step, multi_start, optimize
from dgo_optim.encoding import SearchSpace, decode
from dgo_optim.experiment import ExperimentConfig
from dgo_optim.harness import run_experiment, write_outputs
from dgo_optim.objectives import SUITES, Objective, get_objective

TABLE_CONFIG = DgoConfig(
    initial_bits=8, max_bits=32, starts=5, deterministic_refine=True, seed=1
)


def test_f2_global_minimizer(f2_minimizer: float) -> None:
    result = multi_start(get_objective("f2_1d"), config=TABLE_CONFIG)
    assert abs(result.best.best_point[0] - f2_minimizer) <= 1e-3


def test_f3_global_minimizer(f3_minimizers: list[float]) -> None:
    result = multi_start(get_objective("f3_1d"), config=TABLE_CONFIG)
    x = result.best.best_point[0]
    assert min(abs(x - m) for m in f3_minimizers) <= 1e-3


def test_camel_global_minimizer(camel_minimizers: list[tuple[float, float]]) -> None:
    # zero-append refinement can stall about 4e-3 from a minimizer
    config = DgoConfig(initial_bits=8, max_bits=32, starts=40, seed=1)
    result = multi_start(get_objective("camel6_2d"), config=config)
    point = np.array(result.best.best_point)
    assert min(np.linalg.norm(point - m) for m in camel_minimizers) <= 1e-3


@pytest.mark.slow
def test_xor_training() -> None:
    xor = get_objective("xor")
    errors = [
        multi_start(
            xor, config=DgoConfig(initial_bits=16, max_bits=32, starts=10, seed=seed)
        ).best.best_value
        for seed in range(10)
    ]
    assert sum(e <= 1e-2 for e in errors) >= 8
    assert min(errors) <= 1e-3


def test_monotone_descent_per_resolution() -> None:
    names = [*SUITES["1d"], *SUITES["2d"]]
    violations = 0
    for i in range(100):
        objective = get_objective(names[i % len(names)])
        result = optimize(objective, config=DgoConfig(seed=i))
        level: dict[int | None, float] = {}
        for record in result.trace:
            if record.event == "improve" and not (
                record.parent_value < level[record.resolution_bits]
            ):
                violations += 1
            level[record.resolution_bits] = record.parent_value
        best = [r.best_value for r in result.trace]
        violations += sum(a < b for a, b in zip(best, best[1:]))
    assert violations == 0


COMBINATIONS = [
    ("f2_1d", "dgo"),
    ("f3_1d", "dgo"),
    ("camel6_2d", "dgo"),
    ("xor", "dgo"),
    ("sphere_2d", "dgo_binary"),
    ("camel6_2d", "monte_carlo"),
    ("quadratic_1d", "gradient_descent"),
    ("rastrigin_2d", "genetic"),
    ("camel6_2d", "annealing"),
    ("xor", "monte_carlo"),
]


@pytest.mark.parametrize(("objective", "optimizer"), COMBINATIONS)
def test_result_files_are_reproducible(
    objective: str, optimizer: str, tmp_path: Path
) -> None:
    contents = []
    for name in ("a", "b"):
        config = ExperimentConfig(
            objective=objective,
            optimizer=optimizer,
            seed=42,
            dgo={"starts": 2, "max_evaluations": 20_000},
            baseline={"evaluation_budget": 2_000},
            output={
                "results": tmp_path / f"{name}.csv",
                "trace": tmp_path / f"{name}_trace.csv",
                "timing": False,
            },
        )
        write_outputs(run_experiment(config))
        contents.append(
            (
                (tmp_path / f"{name}.csv").read_bytes(),
                (tmp_path / f"{name}_trace.csv").read_bytes(),
            )
        )
    assert contents[0] == contents[1]


def _plateau(x: np.ndarray) -> np.ndarray:
    # coarse steps make many children tie
    return np.floor(4 * np.sum(x * x, axis=-1))


def test_child_selection_ignores_evaluation_order() -> None:
    rng = np.random.default_rng(2024)
    objectives = [
        get_objective("rastrigin_2d"),
        get_objective("f3_1d"),
        get_objective("xor"),
        Objective("plateau", _plateau, ((-2.0, 2.0),) * 3),
    ]
    mismatches = 0
    for i in range(1000):
        objective = objectives[i % len(objectives)]
        space = SearchSpace.from_bounds(objective.bounds, bits=int(rng.integers(2, 9)))
        parent = BitString.random(space.total_bits, rng)
        value = objective(decode(parent, space))
        expected = dgo_step(parent, value, space, objective)
        order = rng.permutation(2 * space.total_bits - 1)
        shuffled = dgo_step(parent, value, space, objective, order=order)
        mismatches += shuffled != expected
    assert mismatches == 0


def test_evaluations_per_step_scale_linearly() -> None:
    bits = 8
    dims = [10, 50, 100]
    counts = []
    for d in dims:
        objective = get_objective("synthetic_highdim", dimension=d)
        space = SearchSpace.from_bounds(objective.bounds, bits=bits)
        parent = BitString.random(space.total_bits, np.random.default_rng(d))
        outcome = dgo_step(parent, np.inf, space, objective)
        assert outcome.evaluations == 2 * d * bits - 1
        counts.append(outcome.evaluations)
    slope, intercept = np.polyfit(dims, counts, 1)
    fitted = slope * np.array(dims) + intercept
    residual = np.sum((np.array(counts) - fitted) ** 2)
    total = np.sum((np.array(counts) - np.mean(counts)) ** 2)
    assert 1 - residual / total >= 0.999


@pytest.mark.parametrize("name", SUITES["1d"])
def test_one_dimensional_run_is_fast(name: str) -> None:
    objective = get_objective(name)
    optimize(objective, config=DgoConfig(max_bits=32))  # warm up
    tic = time.perf_counter()
    result = optimize(objective, config=DgoConfig(max_bits=32, seed=3))
    assert time.perf_counter() - tic < 1.0
    assert result.resolution_bits == 32


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_high_dimensional_gap_reduction(seed: int) -> None:
    objective = get_objective("synthetic_highdim", dimension=100)
    # every seed starts from the lower corner; seeds vary the refinement bits
    corner = [lower for lower, _ in objective.bounds]
    config = DgoConfig(seed=seed, max_evaluations=2_000_000)
    result = optimize(objective, config=config, start=corner)
    initial = result.trace[0].parent_value
    assert initial == pytest.approx(objective(corner))
    assert result.evaluations <= 2_000_000
    assert result.best_value <= 0.1 * initial
