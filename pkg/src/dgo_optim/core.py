"""The DGO search loop, dynamic resolution, and multi-start driver."""

from __future__ import annotations

import logging
import warnings
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, ClassVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .bitstring import BitString, Transform, children_matrix
from .encoding import (
    MAX_TOTAL_BITS,
    MAX_VARIABLE_BITS,
    SearchSpace,
    decode,
    decode_matrix,
    encode_nearest,
    refine_space,
)
from .objectives import EvaluationError, Objective
from .results import (
    IterationRecord,
    MultiStartResult,
    RunResult,
    Termination,
    TraceEvent,
)

if TYPE_CHECKING:
    from types import TracebackType

    from typing_extensions import Self

__all__ = [
    "DEFAULT_SEED",
    "BatchEvaluator",
    "DgoConfig",
    "Improved",
    "NoImprovement",
    "StepOutcome",
    "dgo_step",
    "multi_start",
    "optimize",
    "resolve_bounds",
    "start_rng",
]

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20251019


def start_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for start ``index`` of a run seeded with ``seed``.

    Equal to the ``index``-th child of ``SeedSequence(seed).spawn(...)``, so each
    start's stream depends only on ``(seed, index)``.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


class DgoConfig(BaseModel):
    """Settings of a DGO run."""

    model_config: ClassVar[ConfigDict] = ConfigDict(extra="forbid", frozen=True)

    initial_bits: int = Field(
        default=8,
        ge=1,
        le=MAX_VARIABLE_BITS,
        description="Per-variable resolution of the first search level.",
    )
    max_bits: int = Field(
        default=32,
        ge=1,
        le=MAX_VARIABLE_BITS,
        description=(
            "Per-variable resolution of the last search level. "
            "Must be initial_bits times a power of two."
        ),
    )
    starts: int = Field(default=1, ge=1, description="Number of independent starts.")
    seed: int = Field(
        default=DEFAULT_SEED, ge=0, lt=2**64, description="Seed for every start."
    )
    max_iterations: int = Field(
        default=100_000,
        ge=1,
        description="Safety cap on steps per start.",
    )
    max_evaluations: int | None = Field(
        default=None,
        ge=1,
        description="Optional cap on objective calls per start.",
    )
    deterministic_refine: bool = Field(
        default=False,
        description=(
            "Append zero bits on refinement instead of random bits, so a run uses "
            "randomness only for its initial parent."
        ),
    )
    transform: Transform = Field(
        default="gray",
        description=(
            "Child transform: 'gray' inverts segments in the Gray domain, 'binary' "
            "inverts segments of the plain string."
        ),
    )
    workers: int | None = Field(
        default=None,
        ge=1,
        description="Threads used to evaluate the children of one step.",
    )

    @model_validator(mode="after")
    def _check_schedule(self) -> Self:
        if self.initial_bits > self.max_bits:
            raise ValueError(
                f"initial_bits ({self.initial_bits}) must not exceed "
                f"max_bits ({self.max_bits})"
            )
        ratio, rest = divmod(self.max_bits, self.initial_bits)
        if rest or ratio & (ratio - 1):
            raise ValueError(
                f"max_bits ({self.max_bits}) must be initial_bits "
                f"({self.initial_bits}) times a power of two"
            )
        return self

    @property
    def resolution_schedule(self) -> tuple[int, ...]:
        """Per-variable widths visited, from initial_bits to max_bits."""
        widths = [self.initial_bits]
        while widths[-1] < self.max_bits:
            widths.append(2 * widths[-1])
        return tuple(widths)


# ----------------------  evaluation  ----------------------


class BatchEvaluator:
    """Evaluate batches of points and count the calls.

    With ``workers > 1`` a batch is split into contiguous chunks that run on a
    thread pool. Results are stored by index, so the outcome does not depend on
    the order in which chunks finish.
    """

    def __init__(self, objective: Objective, workers: int | None = None) -> None:
        self.objective = objective
        self.evaluations = 0
        self._workers = workers or 1
        self._pool = (
            ThreadPoolExecutor(self._workers, thread_name_prefix="dgo-eval")
            if self._workers > 1
            else None
        )

    def __enter__(self) -> Self:
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()

    def close(self) -> None:
        """Shut down the thread pool, if any."""
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __call__(
        self, points: np.ndarray, order: Sequence[int] | np.ndarray | None = None
    ) -> np.ndarray:
        """Return the objective value of every row of ``points``.

        Parameters
        ----------
        points : np.ndarray
            ``(m, d)`` array of points.
        order : Sequence[int] | np.ndarray | None
            Permutation of ``range(m)`` giving the order in which rows are
            submitted. The returned values are always in row order.
        """
        count = len(points)
        index = np.arange(count) if order is None else np.asarray(order, dtype=int)
        if not np.array_equal(np.sort(index), np.arange(count)):
            raise ValueError("order must be a permutation of the point indices")
        values = np.empty(count)
        chunks = [c for c in np.array_split(index, min(self._workers, count)) if c.size]
        if self._pool is None:
            for chunk in chunks:
                values[chunk] = self._evaluate_chunk(points, chunk)
        else:
            futures = [
                (chunk, self._pool.submit(self._evaluate_chunk, points, chunk))
                for chunk in chunks
            ]
            for chunk, future in futures:
                values[chunk] = future.result()
        if np.isnan(values).any():
            bad = int(np.flatnonzero(np.isnan(values))[0])
            raise EvaluationError(
                f"Objective {self.objective.name!r} returned NaN for point {bad}.",
                objective=self.objective.name,
                index=bad,
            )
        self.evaluations += count
        return values

    def _evaluate_chunk(self, points: np.ndarray, chunk: np.ndarray) -> np.ndarray:
        try:
            return self.objective.evaluate_batch(points[chunk])
        except Exception as exc:
            bad = self._locate_failure(points, chunk)
            raise EvaluationError(
                f"Objective {self.objective.name!r} failed on point {bad}: {exc}",
                objective=self.objective.name,
                index=bad,
            ) from exc

    def _locate_failure(self, points: np.ndarray, chunk: np.ndarray) -> int | None:
        if chunk.size == 1:
            return int(chunk[0])
        for i in chunk:
            try:
                self.objective(points[i])
            except Exception:
                return int(i)
        return None

    def evaluate_one(self, point: np.ndarray) -> float:
        """Evaluate a single point."""
        return float(self(np.asarray(point)[np.newaxis, :])[0])


# ----------------------  one step  ----------------------


@dataclass(frozen=True)
class Improved:
    """A child strictly better than the parent was found."""

    child: BitString
    value: float
    index: int
    evaluations: int


@dataclass(frozen=True)
class NoImprovement:
    """No child beat the parent."""

    best_child_value: float
    evaluations: int


StepOutcome = Improved | NoImprovement


def dgo_step(
    parent: BitString,
    parent_value: float,
    space: SearchSpace,
    objective: Objective,
    *,
    transform: Transform = "gray",
    evaluator: BatchEvaluator | None = None,
    order: Sequence[int] | np.ndarray | None = None,
) -> StepOutcome:
    """Evaluate all children of ``parent`` and keep the best if it is strictly better.

    Ties between children go to the lowest segment index.

    Parameters
    ----------
    parent : BitString
        Current parent; its length must equal ``space.total_bits``.
    parent_value : float
        Objective value of ``parent``.
    space : SearchSpace
        Decodes bit strings to points.
    objective : Objective
        Function to minimize.
    transform : Transform
        Child transform, see :func:`~dgo_optim.bitstring.children_matrix`.
    evaluator : BatchEvaluator | None
        Evaluator to use (and charge); a private one is created when omitted.
    order : Sequence[int] | np.ndarray | None
        Submission order for the children; does not affect the result.
    """
    children = children_matrix(parent.array, transform)
    points = decode_matrix(children, space)
    if evaluator is None:
        with BatchEvaluator(objective) as private:
            values = private(points, order)
    else:
        values = evaluator(points, order)
    best = int(np.argmin(values))  # first minimum = lowest segment index
    if values[best] < parent_value:
        return Improved(
            child=BitString(children[best]),
            value=float(values[best]),
            index=best,
            evaluations=len(values),
        )
    return NoImprovement(best_child_value=float(values[best]), evaluations=len(values))


# ----------------------  full runs  ----------------------


def resolve_bounds(
    objective: Objective, bounds: Sequence[tuple[float, float]] | None
) -> tuple[tuple[float, float], ...]:
    """Return ``bounds`` as float pairs, defaulting to the objective's own box."""
    pairs = objective.bounds if bounds is None else bounds
    resolved = tuple((float(lo), float(hi)) for lo, hi in pairs)
    if len(resolved) != objective.dimension:
        raise ValueError(
            f"{len(resolved)} bounds given for a {objective.dimension}-dimensional "
            f"objective {objective.name!r}"
        )
    return resolved


def _check_capacity(box: Sequence[tuple[float, float]], config: DgoConfig) -> None:
    if len(box) * config.max_bits > MAX_TOTAL_BITS:
        raise ValueError(
            f"{len(box)} variables at {config.max_bits} bits exceed the "
            f"{MAX_TOTAL_BITS}-bit string limit; lower max_bits"
        )


class _Best:
    """Lowest value seen by one start, with where it was seen."""

    def __init__(self, bits: BitString, value: float, space: SearchSpace) -> None:
        self.update(bits, value, space)

    def update(self, bits: BitString, value: float, space: SearchSpace) -> None:
        self.bits, self.value, self.space = bits, value, space

    def offer(self, bits: BitString, value: float, space: SearchSpace) -> None:
        # ties move to the newer, finer string
        if value <= self.value:
            self.update(bits, value, space)


def _run_start(
    objective: Objective,
    bounds: tuple[tuple[float, float], ...],
    config: DgoConfig,
    start_index: int,
    start: Sequence[float] | np.ndarray | None,
) -> RunResult:
    rng = start_rng(config.seed, start_index)
    space = SearchSpace.from_bounds(bounds, config.initial_bits)
    if start is None:
        parent = BitString.random(space.total_bits, rng)
    else:
        parent = encode_nearest(start, space)

    trace: list[IterationRecord] = []
    steps = 0
    termination: Termination

    with BatchEvaluator(objective, config.workers) as evaluator:

        def record(event: TraceEvent, value: float) -> None:
            trace.append(
                IterationRecord(
                    start_index=start_index,
                    iteration=steps,
                    event=event,
                    best_value=best.value,
                    parent_value=value,
                    evaluations_so_far=evaluator.evaluations,
                    resolution_bits=space.variables[0].bits,
                )
            )

        def affordable(count: int) -> bool:
            budget = config.max_evaluations
            return budget is None or evaluator.evaluations + count <= budget

        value = evaluator.evaluate_one(decode(parent, space))
        best = _Best(parent, value, space)
        record("start", value)

        while True:
            if steps >= config.max_iterations:
                termination = "iteration_cap"
                warnings.warn(
                    f"DGO start {start_index} on {objective.name!r} stopped at the "
                    f"iteration cap ({config.max_iterations}).",
                    stacklevel=3,
                )
                break
            if not affordable(2 * space.total_bits - 1):
                termination = "evaluation_budget"
                break

            outcome = dgo_step(
                parent,
                value,
                space,
                objective,
                transform=config.transform,
                evaluator=evaluator,
            )
            steps += 1
            match outcome:
                case Improved(child=child, value=child_value):
                    parent, value = child, child_value
                    best.offer(parent, value, space)
                    record("improve", value)
                case NoImprovement():
                    if space.variables[0].bits >= config.max_bits:
                        termination = "max_resolution_converged"
                        break
                    if not affordable(1):
                        termination = "evaluation_budget"
                        break
                    space, parent = refine_space(
                        space, parent, None if config.deterministic_refine else rng
                    )
                    value = evaluator.evaluate_one(decode(parent, space))
                    best.offer(parent, value, space)
                    record("refine", value)
                    logger.debug(
                        "start %d refined to %d bits after %d steps (value %r)",
                        start_index,
                        space.variables[0].bits,
                        steps,
                        value,
                    )

        evaluations = evaluator.evaluations

    logger.debug(
        "start %d on %r finished: %s after %d steps, %d evaluations, best %r",
        start_index,
        objective.name,
        termination,
        steps,
        evaluations,
        best.value,
    )
    return RunResult(
        optimizer="dgo" if config.transform == "gray" else "dgo_binary",
        objective=objective.name,
        seed=config.seed,
        start_index=start_index,
        best_point=tuple(decode(best.bits, best.space).tolist()),
        best_value=best.value,
        best_bits=best.bits,
        resolution_bits=best.space.variables[0].bits,
        evaluations=evaluations,
        steps=steps,
        termination=termination,
        trace=trace,
    )


def optimize(
    objective: Objective,
    bounds: Sequence[tuple[float, float]] | None = None,
    config: DgoConfig | None = None,
    *,
    start: Sequence[float] | np.ndarray | None = None,
) -> RunResult:
    """Minimize ``objective`` with a single DGO start.

    Parameters
    ----------
    objective : Objective
        Function to minimize.
    bounds : Sequence[tuple[float, float]] | None
        Box bounds; defaults to ``objective.bounds``.
    config : DgoConfig | None
        Run settings; defaults to ``DgoConfig()``.
    start : Sequence[float] | np.ndarray | None
        Initial point, snapped to the nearest grid point. A random parent is drawn
        from the seeded generator when omitted.
    """
    config = config or DgoConfig()
    box = resolve_bounds(objective, bounds)
    _check_capacity(box, config)
    return _run_start(objective, box, config, 0, start)


def multi_start(
    objective: Objective,
    bounds: Sequence[tuple[float, float]] | None = None,
    config: DgoConfig | None = None,
    *,
    start: Sequence[float] | np.ndarray | None = None,
    workers: int | None = None,
) -> MultiStartResult:
    """Run ``config.starts`` independent DGO starts and keep every result.

    Start 0 uses ``start`` when given; the others begin at random parents. Start
    ``i`` draws from :func:`start_rng` ``(config.seed, i)``, so results do not
    depend on ``workers``.
    """
    config = config or DgoConfig()
    box = resolve_bounds(objective, bounds)
    _check_capacity(box, config)

    def _one(index: int) -> RunResult:
        return _run_start(objective, box, config, index, start if index == 0 else None)

    if workers is not None and workers > 1 and config.starts > 1:
        with ThreadPoolExecutor(workers, thread_name_prefix="dgo-start") as pool:
            runs = list(pool.map(_one, range(config.starts)))
    else:
        runs = [_one(i) for i in range(config.starts)]
    return MultiStartResult.from_runs(runs)
