from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest
from scipy import optimize

from dgo_optim.objectives import camel6_2d, f2_1d, f3_1d

CONFIGS = Path(__file__).parent / "configs"
CONFIG_FILES = [
    p for p in CONFIGS.iterdir() if p.suffix in {".yaml", ".yml", ".json"}
]


@pytest.fixture(params=sorted(CONFIG_FILES), ids=lambda x: x.stem)
def config_file(request: pytest.FixtureRequest) -> Path:
    """Fixture to provide experiment files for testing."""
    return request.param  # type: ignore


def _grid_minimizer_1d(func, lower: float, upper: float, points: int) -> float:
    grid = np.linspace(lower, upper, points)
    best_value, i = math.inf, 0
    # evaluated in chunks to bound memory
    for chunk in np.array_split(np.arange(points), 10):
        values = func(grid[chunk])
        j = int(np.argmin(values))
        if values[j] < best_value:
            best_value, i = float(values[j]), int(chunk[j])
    step = (upper - lower) / (points - 1)
    lo, hi = max(lower, grid[i] - step), min(upper, grid[i] + step)
    res = optimize.minimize_scalar(
        func, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
    )
    return float(res.x)


@pytest.fixture(scope="session")
def f2_minimizer() -> float:
    """Dense grid + bounded polish of sin(x) + sin(2x/3) on [3.1, 20.4]."""
    return _grid_minimizer_1d(f2_1d, 3.1, 20.4, 10_000_001)


@pytest.fixture(scope="session")
def f3_minimizers() -> list[float]:
    """Every global minimizer of f3 in [-10, 10] (it is 2*pi periodic)."""
    x = _grid_minimizer_1d(f3_1d, -10.0, 10.0, 10_000_001)
    base = x - 2 * math.pi * math.floor((x + 10.0) / (2 * math.pi))
    return [base + 2 * math.pi * k for k in range(4) if base + 2 * math.pi * k <= 10]


@pytest.fixture(scope="session")
def camel_minimizers() -> list[tuple[float, float]]:
    """Both global minimizers of the six-hump camel-back function."""
    xs = np.linspace(-3.0, 3.0, 1201)
    ys = np.linspace(-2.0, 2.0, 801)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    values = camel6_2d(gx, gy)
    i, j = np.unravel_index(np.argmin(values), values.shape)
    res = optimize.minimize(
        lambda p: camel6_2d(p[0], p[1]),
        x0=[xs[i], ys[j]],
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 10_000},
    )
    x, y = (float(v) for v in res.x)
    return [(x, y), (-x, -y)]
