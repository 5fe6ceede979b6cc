"""Benchmark objective functions and their registry.

Every formula here is written over the last array axis, so it evaluates a single
point of shape ``(d,)`` or a batch of shape ``(m, d)`` in one call.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import partial
from typing import Any

import numpy as np

__all__ = [
    "OBJECTIVES",
    "SUITES",
    "EvaluationError",
    "KnownOptimum",
    "Objective",
    "camel6_2d",
    "f2_1d",
    "f3_1d",
    "get_objective",
    "list_objectives",
    "register_objective",
    "synthetic_highdim",
    "synthetic_shift",
    "xor_error",
    "xor_forward",
]

Bounds = tuple[tuple[float, float], ...]


class EvaluationError(RuntimeError):
    """An objective raised or returned NaN."""

    def __init__(self, message: str, *, objective: str, index: int | None = None):
        super().__init__(message)
        self.objective = objective
        self.index = index


@dataclass(frozen=True)
class KnownOptimum:
    """One or more equivalent global minimizers and their common value."""

    points: tuple[tuple[float, ...], ...]
    value: float

    def distance(self, x: Sequence[float] | np.ndarray) -> float:
        """Euclidean distance from ``x`` to the nearest listed minimizer."""
        diffs = np.asarray(self.points) - np.asarray(x, dtype=np.float64)
        return float(np.min(np.linalg.norm(diffs, axis=-1)))


@dataclass(frozen=True)
class Objective:
    """A named real-valued function on a box.

    ``func`` must be pure and reentrant. When ``vectorized`` is True it accepts an
    array of shape ``(..., d)`` and returns shape ``(...)``.
    """

    name: str
    func: Callable[[np.ndarray], Any]
    bounds: Bounds
    known_optimum: KnownOptimum | None = None
    description: str = ""
    vectorized: bool = True
    params: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def dimension(self) -> int:
        """Number of variables."""
        return len(self.bounds)

    def __call__(self, x: Sequence[float] | np.ndarray) -> float:
        """Evaluate at a single point."""
        return float(self.func(np.asarray(x, dtype=np.float64)))

    def evaluate_batch(self, points: np.ndarray) -> np.ndarray:
        """Evaluate every row of an ``(m, d)`` array."""
        points = np.asarray(points, dtype=np.float64)
        if self.vectorized:
            return np.asarray(self.func(points), dtype=np.float64).reshape(-1)
        return np.fromiter(
            (float(self.func(row)) for row in points),
            dtype=np.float64,
            count=len(points),
        )


# ----------------------  formulas  ----------------------


def f2_1d(x: Any) -> Any:
    """``sin(x) + sin(2x/3)``."""
    return np.sin(x) + np.sin(2.0 * x / 3.0)


def f3_1d(x: Any) -> Any:
    """``-sum(sin((k+1)x + k) for k in 1..5)``."""
    return -sum(np.sin((k + 1) * x + k) for k in range(1, 6))


def camel6_2d(x: Any, y: Any) -> Any:
    """Six-hump camel-back function."""
    x2 = x * x
    y2 = y * y
    return (4.0 - 2.1 * x2 + x2 * x2 / 3.0) * x2 + x * y + (-4.0 + 4.0 * y2) * y2


XOR_INPUTS = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_TARGETS = np.array([0.0, 1.0, 1.0, 0.0])
XOR_WEIGHTS = 9


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # exp(-log(1 + e^-z)) never overflows
    return np.exp(-np.logaddexp(0.0, -z))


def xor_forward(weights: Any, inputs: np.ndarray = XOR_INPUTS) -> np.ndarray:
    """Outputs of the 2-2-1 sigmoid network for each input pattern.

    ``weights`` is laid out as ``[w_ih (2x2, row = hidden unit), b_h (2),
    w_ho (2), b_o]``; leading axes are batch axes.
    """
    w = np.asarray(weights, dtype=np.float64)
    w_ih = w[..., 0:4].reshape(*w.shape[:-1], 2, 2)
    b_h = w[..., 4:6]
    w_ho = w[..., 6:8]
    b_o = w[..., 8]
    hidden = _sigmoid(
        np.einsum("...ji,pi->...pj", w_ih, inputs) + b_h[..., np.newaxis, :]
    )
    out = np.einsum("...pj,...j->...p", hidden, w_ho) + b_o[..., np.newaxis]
    return _sigmoid(out)


def xor_error(weights: Any) -> Any:
    """Summed squared error of the 2-2-1 network over the four XOR patterns."""
    return np.sum((XOR_TARGETS - xor_forward(weights)) ** 2, axis=-1)


def synthetic_highdim(x: Any, shift: np.ndarray) -> Any:
    """Shifted Rastrigin sum, zero at ``x == shift``."""
    z = np.asarray(x, dtype=np.float64) - shift
    return np.sum(z * z - 10.0 * np.cos(2.0 * math.pi * z) + 10.0, axis=-1)


def synthetic_shift(dimension: int, seed: int) -> np.ndarray:
    """Optimum location of :func:`synthetic_highdim`, drawn from ``seed``."""
    return np.random.default_rng(seed).uniform(-4.0, 4.0, size=dimension)


# ----------------------  registry  ----------------------

ObjectiveFactory = Callable[..., Objective]

OBJECTIVES: dict[str, ObjectiveFactory] = {}

SUITES: dict[str, tuple[str, ...]] = {
    "1d": ("f2_1d", "f3_1d", "quadratic_1d"),
    "2d": ("camel6_2d", "sphere_2d", "rastrigin_2d"),
    "nn": ("xor",),
    "highdim": ("synthetic_highdim",),
}
SUITES["all"] = tuple(name for suite in list(SUITES.values()) for name in suite)


def register_objective(name: str) -> Callable[[ObjectiveFactory], ObjectiveFactory]:
    """Register an objective factory under ``name``."""

    def _decorator(factory: ObjectiveFactory) -> ObjectiveFactory:
        if name in OBJECTIVES:
            raise ValueError(f"Objective {name!r} is already registered.")
        OBJECTIVES[name] = factory
        return factory

    return _decorator


def get_objective(name: str, **params: Any) -> Objective:
    """Build the registered objective ``name`` with optional factory parameters."""
    try:
        factory = OBJECTIVES[name]
    except KeyError:
        raise KeyError(
            f"Unknown objective {name!r}. Available: {', '.join(sorted(OBJECTIVES))}"
        ) from None
    return factory(**params)


def list_objectives() -> list[Objective]:
    """Default instance of every registered objective, sorted by name."""
    return [OBJECTIVES[name]() for name in sorted(OBJECTIVES)]


def _optimum(
    func: Callable[[np.ndarray], Any], *points: Sequence[float]
) -> KnownOptimum:
    pts = tuple(tuple(float(c) for c in p) for p in points)
    return KnownOptimum(points=pts, value=float(func(np.asarray(pts[0]))))


def _f2(x: np.ndarray) -> Any:
    return f2_1d(x[..., 0])


def _f3(x: np.ndarray) -> Any:
    return f3_1d(x[..., 0])


def _quadratic(x: np.ndarray, center: float) -> Any:
    return (x[..., 0] - center) ** 2


def _camel(x: np.ndarray) -> Any:
    return camel6_2d(x[..., 0], x[..., 1])


def _sphere(x: np.ndarray) -> Any:
    return np.sum(x * x, axis=-1)


def _rastrigin(x: np.ndarray) -> Any:
    return synthetic_highdim(x, np.zeros(x.shape[-1]))


@register_objective("f2_1d")
def _make_f2() -> Objective:
    return Objective(
        name="f2_1d",
        func=_f2,
        bounds=((3.1, 20.4),),
        known_optimum=_optimum(_f2, (17.039198942,)),
        description="sin(x) + sin(2x/3) on [3.1, 20.4]",
    )


F3_MINIMIZER = 5.8463331


@register_objective("f3_1d")
def _make_f3() -> Objective:
    # 2*pi periodic: three equivalent minimizers fall inside [-10, 10]
    copies = [(F3_MINIMIZER - 2.0 * math.pi * k,) for k in range(3)]
    return Objective(
        name="f3_1d",
        func=_f3,
        bounds=((-10.0, 10.0),),
        known_optimum=_optimum(_f3, *copies),
        description="-sum_{k=1..5} sin((k+1)x + k) on [-10, 10]",
    )


@register_objective("quadratic_1d")
def _make_quadratic(center: float = 3.0) -> Objective:
    func = partial(_quadratic, center=center)
    return Objective(
        name="quadratic_1d",
        func=func,
        bounds=((0.0, 10.0),),
        known_optimum=_optimum(func, (center,)),
        description=f"(x - {center})^2 on [0, 10]",
        params={"center": center},
    )


CAMEL_MINIMIZER = (0.0898420131003, -0.7126564030207)


@register_objective("camel6_2d")
def _make_camel() -> Objective:
    a, b = CAMEL_MINIMIZER
    return Objective(
        name="camel6_2d",
        func=_camel,
        bounds=((-3.0, 3.0), (-2.0, 2.0)),
        known_optimum=_optimum(_camel, (a, b), (-a, -b)),
        description="six-hump camel-back on [-3, 3] x [-2, 2]",
    )


@register_objective("sphere_2d")
def _make_sphere() -> Objective:
    return Objective(
        name="sphere_2d",
        func=_sphere,
        bounds=((-10.0, 10.0), (-10.0, 10.0)),
        known_optimum=_optimum(_sphere, (0.0, 0.0)),
        description="x^2 + y^2 on [-10, 10]^2",
    )


@register_objective("rastrigin_2d")
def _make_rastrigin() -> Objective:
    return Objective(
        name="rastrigin_2d",
        func=_rastrigin,
        bounds=((-5.12, 5.12), (-5.12, 5.12)),
        known_optimum=_optimum(_rastrigin, (0.0, 0.0)),
        description="Rastrigin on [-5.12, 5.12]^2",
    )


XOR_WEIGHT_BOUND = 20.0


@register_objective("xor")
def _make_xor(weight_bound: float = XOR_WEIGHT_BOUND) -> Objective:
    return Objective(
        name="xor",
        func=xor_error,
        bounds=((-weight_bound, weight_bound),) * XOR_WEIGHTS,
        description="summed squared error of a 2-2-1 sigmoid network on XOR",
        params={"weight_bound": weight_bound},
    )


@register_objective("synthetic_highdim")
def _make_synthetic(dimension: int = 100, shift_seed: int = 0) -> Objective:
    if dimension < 1:
        raise ValueError(f"dimension must be >= 1, got {dimension}")
    shift = synthetic_shift(dimension, shift_seed)
    shift.flags.writeable = False
    return Objective(
        name="synthetic_highdim",
        func=partial(synthetic_highdim, shift=shift),
        bounds=((-5.12, 5.12),) * dimension,
        known_optimum=KnownOptimum(points=(tuple(shift.tolist()),), value=0.0),
        description=f"shifted Rastrigin in {dimension} dimensions",
        params={"dimension": dimension, "shift_seed": shift_seed},
    )
