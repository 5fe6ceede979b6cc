"""DGO global optimizer, benchmark objectives and reference optimizers."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("dgo-optim")
except PackageNotFoundError:
    __version__ = "uninstalled"


from .baselines import (
    BaselineConfig,
    annealing,
    compare_transforms,
    genetic,
    gradient_descent,
    monte_carlo,
)
from .bitstring import (
    BitString,
    Segment,
    generate_children,
    gray_decode,
    gray_encode,
    invert_segment,
    refine,
    segment_tree,
)
from .core import DEFAULT_SEED, DgoConfig, dgo_step, multi_start, optimize
from .encoding import (
    EncodingError,
    ResolutionError,
    SearchSpace,
    VariableSpec,
    decode,
    encode_nearest,
    refine_space,
)
from .experiment import (
    SCHEMA_URL_BASE,
    ExperimentConfig,
    ExperimentReport,
    experiment_schema,
)
from .harness import OPTIMIZERS, run_bench, run_experiment
from .objectives import (
    OBJECTIVES,
    SUITES,
    EvaluationError,
    Objective,
    get_objective,
)
from .results import BenchTable, IterationRecord, MultiStartResult, ResultRow, RunResult

__all__ = [
    "DEFAULT_SEED",
    "OBJECTIVES",
    "OPTIMIZERS",
    "SCHEMA_URL_BASE",
    "SUITES",
    "BaselineConfig",
    "BenchTable",
    "BitString",
    "DgoConfig",
    "EncodingError",
    "EvaluationError",
    "ExperimentConfig",
    "ExperimentReport",
    "IterationRecord",
    "MultiStartResult",
    "Objective",
    "ResolutionError",
    "ResultRow",
    "RunResult",
    "SearchSpace",
    "Segment",
    "VariableSpec",
    "__version__",
    "annealing",
    "compare_transforms",
    "decode",
    "dgo_step",
    "encode_nearest",
    "experiment_schema",
    "generate_children",
    "genetic",
    "get_objective",
    "gradient_descent",
    "gray_decode",
    "gray_encode",
    "invert_segment",
    "monte_carlo",
    "multi_start",
    "optimize",
    "refine",
    "refine_space",
    "run_bench",
    "run_experiment",
    "segment_tree",
]
