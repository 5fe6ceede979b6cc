"""Reference optimizers for comparison with DGO.

Each optimizer takes an :class:`~dgo_optim.objectives.Objective`, optional box
bounds and a :class:`BaselineConfig`, never spends more than
``evaluation_budget`` objective calls, and returns a
:class:`~dgo_optim.results.RunResult` with a progress trace.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from typing import ClassVar, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .bitstring import BitString, Transform
from .core import DEFAULT_SEED, BatchEvaluator, DgoConfig, optimize, resolve_bounds
from .encoding import MAX_VARIABLE_BITS, SearchSpace, decode_matrix
from .objectives import Objective
from .results import IterationRecord, RunResult, Termination, TraceEvent

__all__ = [
    "BaselineConfig",
    "BaselineMethod",
    "annealing",
    "central_difference",
    "compare_transforms",
    "gradient_descent",
    "genetic",
    "metropolis_accept",
    "monte_carlo",
]

logger = logging.getLogger(__name__)

BaselineMethod = Literal["monte_carlo", "gradient_descent", "genetic", "annealing"]

GRADIENT_TOLERANCE = 1e-10
TEMPERATURE_SAMPLES = 100
_MC_CHUNK = 4096


class BaselineConfig(BaseModel):
    """Settings shared by the reference optimizers.

    Only the fields relevant to the chosen ``method`` are used.
    """

    model_config: ClassVar[ConfigDict] = ConfigDict(extra="forbid", frozen=True)

    method: BaselineMethod = Field(
        default="monte_carlo", description="Which reference optimizer to run."
    )
    evaluation_budget: int = Field(
        default=10_000, ge=1, description="Maximum number of objective calls."
    )
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)
    step_size: float = Field(
        default=0.01, gt=0, description="Gradient descent step length."
    )
    population_size: int = Field(default=50, ge=2, description="GA population.")
    crossover_rate: float = Field(
        default=0.9, ge=0, le=1, description="Probability of one-point crossover."
    )
    mutation_rate: float | None = Field(
        default=None,
        ge=0,
        le=1,
        description="Per-bit flip probability; 1 / genome length when omitted.",
    )
    bits_per_variable: int = Field(
        default=16, ge=1, le=MAX_VARIABLE_BITS, description="GA genome resolution."
    )
    tournament_size: int = Field(default=2, ge=1, description="GA tournament size.")
    initial_temperature: float | None = Field(
        default=None,
        gt=0,
        description=(
            "Annealing start temperature. When omitted it is the spread of the "
            f"objective over {TEMPERATURE_SAMPLES} random sample points."
        ),
    )
    cooling_rate: float = Field(
        default=0.995, gt=0, le=1, description="Geometric cooling factor per step."
    )
    perturbation: float = Field(
        default=0.1,
        gt=0,
        le=1,
        description="Annealing move size as a fraction of the variable's range.",
    )


class _Tracker:
    """Counts calls, remembers the best point, and collects the trace."""

    def __init__(self, objective: Objective, budget: int) -> None:
        self.objective = objective
        self.budget = budget
        self.evaluator = BatchEvaluator(objective)
        self.best_value = math.inf
        self.best_point: np.ndarray | None = None
        self.best_bits: BitString | None = None
        self.trace: list[IterationRecord] = []

    @property
    def evaluations(self) -> int:
        return self.evaluator.evaluations

    def affordable(self, count: int) -> bool:
        return self.evaluations + count <= self.budget

    def evaluate(
        self, points: np.ndarray, bits: np.ndarray | None = None
    ) -> np.ndarray:
        points = np.atleast_2d(points)
        values = self.evaluator(points)
        i = int(np.argmin(values))
        if values[i] < self.best_value:
            self.best_value = float(values[i])
            self.best_point = points[i].copy()
            self.best_bits = None if bits is None else BitString(bits[i])
        return values

    def record(
        self,
        iteration: int,
        event: TraceEvent,
        parent_value: float,
        *,
        best_value: float | None = None,
        evaluations: int | None = None,
        resolution_bits: int | None = None,
    ) -> None:
        self.trace.append(
            IterationRecord(
                iteration=iteration,
                event=event,
                best_value=self.best_value if best_value is None else best_value,
                parent_value=float(parent_value),
                evaluations_so_far=(
                    self.evaluations if evaluations is None else evaluations
                ),
                resolution_bits=resolution_bits,
            )
        )

    def result(
        self,
        optimizer: BaselineMethod,
        seed: int,
        steps: int,
        termination: Termination,
        resolution_bits: int | None = None,
    ) -> RunResult:
        assert self.best_point is not None
        logger.debug(
            "%s on %r finished: %s after %d steps, %d evaluations, best %r",
            optimizer,
            self.objective.name,
            termination,
            steps,
            self.evaluations,
            self.best_value,
        )
        return RunResult(
            optimizer=optimizer,
            objective=self.objective.name,
            seed=seed,
            best_point=tuple(self.best_point.tolist()),
            best_value=self.best_value,
            best_bits=self.best_bits,
            resolution_bits=resolution_bits if self.best_bits is not None else None,
            evaluations=self.evaluations,
            steps=steps,
            termination=termination,
            trace=self.trace,
        )


def _setup(
    objective: Objective,
    bounds: Sequence[tuple[float, float]] | None,
    config: BaselineConfig | None,
    method: BaselineMethod,
) -> tuple[BaselineConfig, np.ndarray, np.ndarray, np.random.Generator]:
    config = config or BaselineConfig(method=method)
    box = np.array(resolve_bounds(objective, bounds))
    return config, box[:, 0], box[:, 1], np.random.default_rng(config.seed)


def _start_point(
    start: Sequence[float] | np.ndarray | None,
    lower: np.ndarray,
    upper: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    if start is None:
        return rng.uniform(lower, upper)
    x = np.asarray(start, dtype=np.float64)
    if x.shape != lower.shape or np.any(x < lower) or np.any(x > upper):
        raise ValueError(f"start {x.tolist()} is not a point of the search box")
    return x


# ----------------------  Monte Carlo  ----------------------


def monte_carlo(
    objective: Objective,
    bounds: Sequence[tuple[float, float]] | None = None,
    config: BaselineConfig | None = None,
) -> RunResult:
    """Sample ``evaluation_budget`` uniform random points and keep the best.

    The trace has one record per new running minimum.
    """
    config, lower, upper, rng = _setup(objective, bounds, config, "monte_carlo")
    tracker = _Tracker(objective, config.evaluation_budget)
    running = math.inf
    while tracker.affordable(1):
        count = min(_MC_CHUNK, config.evaluation_budget - tracker.evaluations)
        done = tracker.evaluations
        points = rng.uniform(lower, upper, size=(count, len(lower)))
        for i, value in enumerate(tracker.evaluate(points).tolist()):
            if value < running:
                running = value
                tracker.record(
                    done + i + 1,
                    "start" if done + i == 0 else "improve",
                    value,
                    best_value=value,
                    evaluations=done + i + 1,
                )
    return tracker.result(
        "monte_carlo", config.seed, tracker.evaluations, "evaluation_budget"
    )


# ----------------------  gradient descent  ----------------------


def central_difference(
    evaluate: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    h: np.ndarray | float,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
) -> np.ndarray:
    """Central-difference gradient of a batch function at ``x``.

    ``evaluate`` maps an ``(m, d)`` array to ``m`` values and is called once with
    the ``2 * d`` offset points. Offsets are clipped to ``[lower, upper]`` when
    bounds are given, and each difference is divided by the actual offset spacing.
    """
    x = np.asarray(x, dtype=np.float64)
    offsets = np.diag(np.broadcast_to(np.asarray(h, dtype=np.float64), x.shape))
    plus = x + offsets
    minus = x - offsets
    if lower is not None and upper is not None:
        plus = np.clip(plus, lower, upper)
        minus = np.clip(minus, lower, upper)
    values = evaluate(np.concatenate([plus, minus]))
    d = x.size
    spacing = np.diagonal(plus) - np.diagonal(minus)
    return (values[:d] - values[d:]) / spacing


def gradient_descent(
    objective: Objective,
    bounds: Sequence[tuple[float, float]] | None = None,
    config: BaselineConfig | None = None,
    *,
    start: Sequence[float] | np.ndarray | None = None,
) -> RunResult:
    """Fixed-step projected gradient descent with finite-difference gradients.

    The difference step is ``1e-6`` times each variable's range. The run stops
    when the gradient norm drops below ``1e-10`` or the next step would exceed
    the budget.
    """
    config, lower, upper, rng = _setup(objective, bounds, config, "gradient_descent")
    tracker = _Tracker(objective, config.evaluation_budget)
    h = 1e-6 * (upper - lower)
    x = _start_point(start, lower, upper, rng)
    value = float(tracker.evaluate(x)[0])
    tracker.record(0, "start", value)

    steps = 0
    termination: Termination = "evaluation_budget"
    while tracker.affordable(2 * x.size + 1):
        grad = central_difference(tracker.evaluator, x, h, lower, upper)
        if np.linalg.norm(grad) < GRADIENT_TOLERANCE:
            termination = "gradient_converged"
            break
        x = np.clip(x - config.step_size * grad, lower, upper)
        value = float(tracker.evaluate(x)[0])
        steps += 1
        tracker.record(steps, "step", value)
    return tracker.result("gradient_descent", config.seed, steps, termination)


# ----------------------  genetic algorithm  ----------------------


def genetic(
    objective: Objective,
    bounds: Sequence[tuple[float, float]] | None = None,
    config: BaselineConfig | None = None,
    *,
    initial_population: np.ndarray | Sequence[BitString] | None = None,
) -> RunResult:
    """Generational binary GA over the same bit layout DGO decodes.

    Uses tournament selection, one-point crossover, per-bit mutation and keeps
    the best individual unchanged (elitism of one). Each generation costs
    ``population_size - 1`` evaluations. A budget smaller than the population
    shrinks the population to the budget; with a single individual no
    generation is bred.

    Raises
    ------
    ValueError
        If ``initial_population`` has the wrong shape.
    """
    config, lower, upper, rng = _setup(objective, bounds, config, "genetic")
    size = min(config.population_size, config.evaluation_budget)
    space = SearchSpace.from_bounds(
        tuple(zip(lower.tolist(), upper.tolist())), config.bits_per_variable
    )
    length = space.total_bits
    rate = 1.0 / length if config.mutation_rate is None else config.mutation_rate

    if initial_population is None:
        population = rng.integers(0, 2, size=(size, length), dtype=np.uint8)
    else:
        population = np.array(
            [
                b.array if isinstance(b, BitString) else np.asarray(b)
                for b in initial_population
            ],
            dtype=np.uint8,
        )
        expected = (config.population_size, length)
        if population.shape != expected:
            raise ValueError(
                f"initial_population must have shape {expected}, "
                f"got {population.shape}"
            )
        population = population[:size]

    tracker = _Tracker(objective, config.evaluation_budget)
    values = tracker.evaluate(decode_matrix(population, space), population)
    tracker.record(0, "start", values.min(), resolution_bits=config.bits_per_variable)

    n_pairs = size // 2  # ceil((size - 1) / 2)
    generation = 0
    while size > 1 and tracker.affordable(size - 1):
        picks = rng.integers(0, size, size=(2 * n_pairs, config.tournament_size))
        winners = picks[np.arange(len(picks)), np.argmin(values[picks], axis=1)]
        mothers, fathers = population[winners[0::2]], population[winners[1::2]]

        cross = rng.random(n_pairs) < config.crossover_rate
        if length > 1:
            cuts = rng.integers(1, length, size=n_pairs)
        else:
            cuts = np.ones(n_pairs, dtype=int)
        swap = (np.arange(length)[np.newaxis, :] >= cuts[:, np.newaxis]) & cross[
            :, np.newaxis
        ]
        offspring = np.concatenate(
            [np.where(swap, fathers, mothers), np.where(swap, mothers, fathers)]
        )[: size - 1]
        offspring ^= (rng.random(offspring.shape) < rate).astype(np.uint8)

        elite = int(np.argmin(values))
        child_values = tracker.evaluate(decode_matrix(offspring, space), offspring)
        population = np.concatenate([population[elite : elite + 1], offspring])
        values = np.concatenate([values[elite : elite + 1], child_values])
        generation += 1
        tracker.record(
            generation, "step", values.min(), resolution_bits=config.bits_per_variable
        )
    return tracker.result(
        "genetic",
        config.seed,
        generation,
        "evaluation_budget",
        resolution_bits=config.bits_per_variable,
    )


# ----------------------  simulated annealing  ----------------------


def metropolis_accept(delta: float, temperature: float, u: float) -> bool:
    """Metropolis rule: accept when ``delta <= 0`` or ``u < exp(-delta / T)``.

    A non-positive temperature accepts only non-worsening moves.
    """
    if delta <= 0:
        return True
    if temperature <= 0 or delta / temperature > 700.0:
        return False
    return u < math.exp(-delta / temperature)


def annealing(
    objective: Objective,
    bounds: Sequence[tuple[float, float]] | None = None,
    config: BaselineConfig | None = None,
    *,
    start: Sequence[float] | np.ndarray | None = None,
) -> RunResult:
    """Simulated annealing with geometric cooling.

    Each step moves one random coordinate by a uniform offset of at most
    ``perturbation`` times its range, clipped to the box. Without an
    ``initial_temperature`` up to 100 sample evaluations, charged to the budget,
    estimate the objective's spread.
    """
    config, lower, upper, rng = _setup(objective, bounds, config, "annealing")
    tracker = _Tracker(objective, config.evaluation_budget)
    x = _start_point(start, lower, upper, rng)
    value = float(tracker.evaluate(x)[0])
    tracker.record(0, "start", value)

    temperature = config.initial_temperature
    if temperature is None:
        samples = min(TEMPERATURE_SAMPLES, config.evaluation_budget - 1)
        temperature = 1.0
        if samples >= 2:
            sample = tracker.evaluate(
                rng.uniform(lower, upper, size=(samples, len(lower)))
            )
            temperature = float(np.ptp(sample)) or 1.0

    width = upper - lower
    steps = 0
    while tracker.affordable(1):
        j = int(rng.integers(len(x)))
        candidate = x.copy()
        candidate[j] += rng.uniform(-1.0, 1.0) * config.perturbation * width[j]
        candidate = np.clip(candidate, lower, upper)
        candidate_value = float(tracker.evaluate(candidate)[0])
        steps += 1
        if metropolis_accept(candidate_value - value, temperature, rng.random()):
            x, value = candidate, candidate_value
            tracker.record(steps, "step", value)
        temperature *= config.cooling_rate
    return tracker.result("annealing", config.seed, steps, "evaluation_budget")


BASELINES: dict[BaselineMethod, Callable[..., RunResult]] = {
    "monte_carlo": monte_carlo,
    "gradient_descent": gradient_descent,
    "genetic": genetic,
    "annealing": annealing,
}


def compare_transforms(
    objective: Objective,
    bounds: Sequence[tuple[float, float]] | None = None,
    config: DgoConfig | None = None,
) -> dict[Transform, RunResult]:
    """Run DGO with Gray-domain and plain-binary segment inversion.

    Both runs share every other setting, including the seed.
    """
    config = config or DgoConfig()
    return {
        transform: optimize(
            objective, bounds, config.model_copy(update={"transform": transform})
        )
        for transform in ("gray", "binary")
    }
