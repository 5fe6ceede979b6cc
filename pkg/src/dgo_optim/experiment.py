"""Experiment configuration files and the report of a finished experiment."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Any, ClassVar

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic.json_schema import GenerateJsonSchema

from .baselines import BaselineConfig
from .core import DEFAULT_SEED, DgoConfig
from .objectives import OBJECTIVES, get_objective
from .results import ResultRow, RunResult, VersionedModel

if TYPE_CHECKING:
    from typing_extensions import Self

__all__ = [
    "SCHEMA_URL_BASE",
    "ExperimentConfig",
    "ExperimentReport",
    "OutputConfig",
    "experiment_schema",
    "load_config_data",
]

SCHEMA_URL_BASE = "urn:dgo-optim"


class _BaseModel(BaseModel):
    model_config: ClassVar[ConfigDict] = ConfigDict(extra="forbid")


class OutputConfig(_BaseModel):
    """Where an experiment writes its results."""

    results: Path = Field(
        default=Path("results.csv"),
        description=(
            "Result table, one row per repetition. "
            ".csv/.tsv files are appended to; .json/.yaml files are replaced."
        ),
    )
    trace: Path | None = Field(
        default=Path("trace.csv"),
        description="Per-iteration trace as delimited text; null disables it.",
    )
    report: Path | None = Field(
        default=None,
        description="Optional JSON/YAML report with the config and every full run.",
    )
    timing: bool = Field(
        default=True,
        description=(
            "Record wall-clock time. When false the wall time field is left empty "
            "so reruns produce byte-identical files."
        ),
    )

    @field_validator("results")
    @classmethod
    def _check_results_suffix(cls, value: Path) -> Path:
        if value.suffix not in {".csv", ".tsv", ".json", ".yaml", ".yml"}:
            raise ValueError(f"Unsupported results file format: {value.suffix}")
        return value

    @field_validator("trace")
    @classmethod
    def _check_trace_suffix(cls, value: Path | None) -> Path | None:
        if value is not None and value.suffix not in {".csv", ".tsv"}:
            raise ValueError(f"Trace must be a .csv or .tsv file, got {value.name}")
        return value

    @field_validator("report")
    @classmethod
    def _check_report_suffix(cls, value: Path | None) -> Path | None:
        if value is not None and value.suffix not in {".json", ".yaml", ".yml"}:
            raise ValueError(f"Report must be a JSON or YAML file, got {value.name}")
        return value


class ExperimentConfig(VersionedModel):
    """A single optimization experiment: one objective, one optimizer."""

    model_config: ClassVar[ConfigDict] = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "$id": f"{SCHEMA_URL_BASE}/schemas/experiment/1.0/experiment.schema.json",
        },
    )

    objective: str = Field(
        default=..., description="Name of a registered objective (see list-objectives)."
    )
    objective_params: dict[str, Any] = Field(
        default_factory=dict,
        description="Keyword arguments for the objective factory.",
    )
    optimizer: str = Field(
        default="dgo", description="Name of a registered optimizer."
    )
    repetitions: int = Field(
        default=1, ge=1, description="Independent repetitions, seeded seed, seed+1, ..."
    )
    seed: int = Field(default=DEFAULT_SEED, ge=0, description="Seed of repetition 0.")
    bounds: list[tuple[float, float]] | None = Field(
        default=None,
        description="Box bounds overriding the objective's own.",
    )
    start: list[float] | None = Field(
        default=None,
        description=(
            "Initial point for dgo (first start), gradient_descent and annealing."
        ),
    )
    dgo: DgoConfig = Field(default_factory=DgoConfig)
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @field_validator("objective")
    @classmethod
    def _check_objective(cls, value: str) -> str:
        if value not in OBJECTIVES:
            raise ValueError(
                f"Unknown objective {value!r}. "
                f"Available: {', '.join(sorted(OBJECTIVES))}"
            )
        return value

    @field_validator("optimizer")
    @classmethod
    def _check_optimizer(cls, value: str) -> str:
        from .harness import OPTIMIZERS

        if value not in OPTIMIZERS:
            raise ValueError(
                f"Unknown optimizer {value!r}. "
                f"Available: {', '.join(sorted(OPTIMIZERS))}"
            )
        return value

    @model_validator(mode="after")
    def _check_objective_setup(self) -> Self:
        try:
            objective = get_objective(self.objective, **self.objective_params)
        except TypeError as e:
            raise ValueError(
                f"Invalid objective_params for {self.objective!r}: {e}"
            ) from None
        if self.bounds is not None and len(self.bounds) != objective.dimension:
            raise ValueError(
                f"{len(self.bounds)} bounds given for the "
                f"{objective.dimension}-dimensional objective {self.objective!r}"
            )
        if self.start is not None and len(self.start) != objective.dimension:
            raise ValueError(
                f"start has {len(self.start)} coordinates, objective "
                f"{self.objective!r} has {objective.dimension}"
            )
        return self

    @model_validator(mode="after")
    def _check_nested_seeds(self) -> Self:
        # repetition seeds replace these, so a value here would be ignored
        for name, section in (("dgo", self.dgo), ("baseline", self.baseline)):
            if section.seed != DEFAULT_SEED:
                raise ValueError(
                    f"{name}.seed is not used; set the top-level seed instead "
                    "(repetition r runs with seed + r)"
                )
        return self

    def repetition_seed(self, repetition: int) -> int:
        """Seed used by repetition ``repetition``."""
        return self.seed + repetition


class ExperimentReport(VersionedModel):
    """Everything a run produced, for programmatic use."""

    config: ExperimentConfig
    rows: list[ResultRow] = Field(default_factory=list)
    runs: list[RunResult] = Field(
        default_factory=list, description="Full results, traces included."
    )


def experiment_schema() -> dict[str, Any]:
    """JSON schema of experiment files, led by its ``$schema`` dialect."""
    schema = ExperimentConfig.model_json_schema()
    return {"$schema": GenerateJsonSchema.schema_dialect, **schema}


def load_config_data(filename: str | Path) -> dict[str, Any]:
    """Read an experiment config file as a plain dict, without validating it.

    Used to merge command line overrides before a single validation pass.
    """
    fpath = Path(filename)
    text = fpath.read_text(encoding="utf-8")
    if fpath.suffix == ".json":
        import json

        data = json.loads(text)
    elif fpath.suffix in {".yaml", ".yml"}:
        import yaml

        data = yaml.safe_load(text)
    else:
        raise NotImplementedError(f"Unsupported input file format: {fpath.suffix}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"{fpath} does not contain a mapping.")
    return data
