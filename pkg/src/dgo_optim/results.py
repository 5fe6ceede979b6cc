"""Run results, per-iteration traces, and their file formats."""

from __future__ import annotations

import csv
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Any, Callable, ClassVar, Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    PlainValidator,
    WithJsonSchema,
    field_validator,
    model_validator,
)

from .bitstring import BitString

if TYPE_CHECKING:
    from pydantic.main import IncEx
    from typing_extensions import Self, TypedDict, Unpack

    class DumpKwargs(TypedDict, total=False):
        """Keyword arguments for model_dump_json/yaml."""

        include: IncEx | None
        exclude: IncEx | None
        context: Any | None
        by_alias: bool | None
        exclude_unset: bool
        exclude_defaults: bool
        exclude_none: bool
        round_trip: bool
        warnings: bool | Literal["none", "warn", "error"]
        fallback: Callable[[Any], Any] | None
        serialize_as_any: bool


__all__ = [
    "RESULT_COLUMNS",
    "TRACE_COLUMNS",
    "BenchTable",
    "IterationRecord",
    "MultiStartResult",
    "ResultRow",
    "RunResult",
    "Termination",
    "TraceEvent",
    "VersionedModel",
    "write_delimited",
    "write_trace",
]

SCHEMA_VERSION = "1.0"

Termination = Literal[
    "max_resolution_converged",
    "iteration_cap",
    "evaluation_budget",
    "gradient_converged",
]
TraceEvent = Literal["start", "improve", "refine", "step"]


def _coerce_bits(value: Any) -> BitString:
    if isinstance(value, BitString):
        return value
    if isinstance(value, str):
        return BitString(value)
    raise ValueError(f"Expected a bit string, got {type(value).__name__}")


BitStringField = Annotated[
    BitString,
    PlainValidator(_coerce_bits),
    PlainSerializer(str, return_type=str),
    WithJsonSchema({"type": "string", "pattern": "^[01]+$"}),
]


class _BaseModel(BaseModel):
    model_config: ClassVar[ConfigDict] = ConfigDict(extra="forbid")


class IterationRecord(_BaseModel):
    """One entry of an optimizer's progress trace."""

    start_index: int = Field(default=0, ge=0, description="Multi-start index.")
    iteration: int = Field(
        default=..., ge=0, description="Steps (or generations) completed so far."
    )
    event: TraceEvent = Field(default=..., description="What produced the record.")
    best_value: float = Field(
        default=..., description="Lowest objective value seen so far in this start."
    )
    parent_value: float = Field(
        default=..., description="Objective value of the current parent or state."
    )
    evaluations_so_far: int = Field(
        default=..., ge=0, description="Cumulative objective calls."
    )
    resolution_bits: int | None = Field(
        default=None, description="Per-variable bit width, for bit-string methods."
    )


class RunResult(_BaseModel):
    """Outcome of a single optimizer run."""

    optimizer: str = Field(default="dgo", description="Optimizer name.")
    objective: str = Field(default=..., description="Objective name.")
    seed: int = Field(default=..., description="Seed the run was derived from.")
    start_index: int = Field(default=0, ge=0)
    best_point: tuple[float, ...] = Field(default=..., min_length=1)
    best_value: float
    best_bits: BitStringField | None = Field(
        default=None, description="Bit string of the best point, when bit-encoded."
    )
    resolution_bits: int | None = Field(
        default=None, description="Per-variable bit width of best_bits."
    )
    evaluations: int = Field(default=..., ge=0, description="Total objective calls.")
    steps: int = Field(default=0, ge=0, description="Steps or generations taken.")
    termination: Termination
    trace: list[IterationRecord] = Field(default_factory=list)

    @field_validator("best_bits", mode="before")
    @classmethod
    def _cast_bits(cls, value: Any) -> Any:
        return None if value in ("", None) else value


class MultiStartResult(_BaseModel):
    """Every start of a multi-start run plus the index of the winner."""

    runs: list[RunResult] = Field(default=..., min_length=1)
    best_index: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_index(self) -> Self:
        if self.best_index >= len(self.runs):
            raise ValueError("best_index is out of range")
        return self

    @classmethod
    def from_runs(cls, runs: Sequence[RunResult]) -> MultiStartResult:
        """Select the run with the lowest ``best_value`` (lowest index on ties)."""
        best = min(range(len(runs)), key=lambda i: (runs[i].best_value, i))
        return cls(runs=list(runs), best_index=best)

    @property
    def best(self) -> RunResult:
        """The winning run."""
        return self.runs[self.best_index]

    @property
    def evaluations(self) -> int:
        """Objective calls summed over all starts."""
        return sum(run.evaluations for run in self.runs)


# ----------------------  tabular records  ----------------------


class ResultRow(_BaseModel):
    """One line of a result file or benchmark table."""

    objective: str
    optimizer: str
    seed: int
    repetition: int = Field(default=0, ge=0)
    best_value: float
    best_point: tuple[float, ...]
    distance_to_optimum: float | None = Field(
        default=None, description="Distance to the nearest known minimizer."
    )
    evaluations: int = Field(default=..., ge=0)
    steps: int = Field(default=0, ge=0)
    wall_time_s: float | None = Field(
        default=None, description="Wall-clock seconds; empty when timing is off."
    )
    termination: Termination

    @field_validator("best_point", mode="before")
    @classmethod
    def _split_point(cls, value: Any) -> Any:
        """Accept the ``;``-joined form used in delimited files."""
        if isinstance(value, str):
            return tuple(float(v) for v in value.split(";")) if value else ()
        return value

    @field_validator("distance_to_optimum", "wall_time_s", mode="before")
    @classmethod
    def _none_if_blank(cls, value: Any) -> Any:
        return None if value == "" else value

    def as_record(self) -> dict[str, Any]:
        """Return a flat mapping suitable for a delimited text row."""
        data = self.model_dump()
        data["best_point"] = ";".join(repr(v) for v in self.best_point)
        return data


RESULT_COLUMNS: tuple[str, ...] = tuple(ResultRow.model_fields)
TRACE_COLUMNS: tuple[str, ...] = (
    "objective",
    "optimizer",
    "seed",
    "repetition",
    *IterationRecord.model_fields,
)


class VersionedModel(_BaseModel):
    """A top-level document that carries ``schema_version`` and knows its files."""

    schema_version: Literal["1.0"] = Field(
        default=None,  # type: ignore  # (See model_post_init)
        description="Version of the file layout.",
        init=False,
        frozen=True,
    )

    def model_post_init(self, context: Any) -> None:
        """Called after the model is initialized."""
        # mark schema_version as set (and not the default), so it is written even
        # with exclude_defaults or exclude_unset.
        object.__setattr__(self, "schema_version", SCHEMA_VERSION)
        self.model_fields_set.add("schema_version")

    def model_dump_yaml(
        self, *, indent: int | None = None, **dump_kwargs: Unpack[DumpKwargs]
    ) -> str:
        """Dump the model to a YAML string."""
        import yaml

        data = self.model_dump(mode="json", **dump_kwargs)
        return yaml.safe_dump(data, indent=indent, sort_keys=False)

    def write_file(
        self,
        filename: str | Path,
        indent: int | None = 2,
        **dump_kwargs: Unpack[DumpKwargs],
    ) -> None:
        """Write the model to a file.

        Filename extension determines the format:
        - .json: JSON
        - .yaml or .yml: YAML

        Parameters
        ----------
        filename : str | Path
            The name of the file to write to (the extension determines format).
        indent : int | None
            The number of spaces to use for indentation.
        **dump_kwargs : Unpack[DumpKwargs]
            Additional keyword arguments to pass to the model_dump_json or
            model_dump_yaml methods.
        """
        output = Path(filename)
        if output.suffix == ".json":
            string = self.model_dump_json(indent=indent, **dump_kwargs) + "\n"
        elif output.suffix in {".yaml", ".yml"}:
            string = self.model_dump_yaml(indent=indent, **dump_kwargs)
        else:
            raise NotImplementedError(
                f"Unsupported output file format: {output.suffix}"
            )
        output.write_text(string, encoding="utf-8")

    @classmethod
    def from_file(cls, filename: str | Path) -> Self:
        """Load a JSON or YAML file written by :meth:`write_file`."""
        fpath = Path(filename)
        if fpath.suffix == ".json":
            return cls.model_validate_json(fpath.read_text(encoding="utf-8"))
        if fpath.suffix in {".yaml", ".yml"}:
            import yaml

            data = yaml.safe_load(fpath.read_text(encoding="utf-8"))
            return cls.model_validate(data)
        raise NotImplementedError(f"Unsupported input file format: {fpath.suffix}")


class BenchTable(VersionedModel):
    """A benchmark results table: one row per (objective, optimizer, seed)."""

    suite: str | None = Field(default=None, description="Suite the rows came from.")
    rows: list[ResultRow] = Field(default_factory=list)
    failures: list[str] = Field(
        default_factory=list, description="Runs that raised instead of finishing."
    )

    def write_file(
        self,
        filename: str | Path,
        indent: int | None = 2,
        *,
        append: bool = False,
        **dump_kwargs: Unpack[DumpKwargs],
    ) -> None:
        """Write the table to a file.

        Besides JSON and YAML, ``.csv`` and ``.tsv`` write delimited text with a
        header row (``rows`` only).

        Parameters
        ----------
        filename : str | Path
            Destination; the extension selects the format.
        indent : int | None
            Indentation for JSON and YAML output.
        append : bool
            For delimited text only: add rows to an existing file whose header
            matches, instead of replacing it.
        **dump_kwargs : Unpack[DumpKwargs]
            Passed to model_dump_json or model_dump_yaml.
        """
        output = Path(filename)
        if output.suffix in DELIMITERS:
            records = (row.as_record() for row in self.rows)
            write_delimited(output, RESULT_COLUMNS, records, append=append)
            return
        super().write_file(output, indent, **dump_kwargs)

    @classmethod
    def from_file(cls, filename: str | Path) -> Self:
        """Load a table written by :meth:`write_file`."""
        fpath = Path(filename)
        if fpath.suffix in DELIMITERS:
            rows = [ResultRow.model_validate(r) for r in read_delimited(fpath)]
            return cls(rows=rows)
        return super().from_file(fpath)


# --------------- delimited text -----------------

DELIMITERS = {".csv": ",", ".tsv": "\t"}


def write_delimited(
    path: str | Path,
    columns: Sequence[str],
    records: Iterable[dict[str, Any]],
    *,
    append: bool = False,
) -> None:
    """Write ``records`` under a one-line header of ``columns``.

    With ``append=True`` an existing non-empty file keeps its content and only
    gains rows; its header must equal ``columns``.
    """
    path = Path(path)
    delimiter = DELIMITERS.get(path.suffix, ",")
    existing = append and path.exists() and path.stat().st_size > 0
    if existing:
        with path.open(newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh, delimiter=delimiter), [])
        if tuple(header) != tuple(columns):
            raise ValueError(
                f"Cannot append to {path}: header {header} does not match "
                f"{list(columns)}."
            )
    with path.open("a" if existing else "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=list(columns), delimiter=delimiter, lineterminator="\n"
        )
        if not existing:
            writer.writeheader()
        for record in records:
            writer.writerow(record)


def read_delimited(path: str | Path) -> Iterator[dict[str, str]]:
    """Yield the rows of a delimited file as header-keyed dicts."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        yield from csv.DictReader(fh, delimiter=DELIMITERS.get(path.suffix, ","))


def iter_trace_records(
    run: RunResult, *, repetition: int = 0
) -> Iterator[dict[str, Any]]:
    """Yield the trace of ``run`` as flat rows keyed by :data:`TRACE_COLUMNS`."""
    context = {
        "objective": run.objective,
        "optimizer": run.optimizer,
        "seed": run.seed,
        "repetition": repetition,
    }
    for record in run.trace:
        yield {**context, **record.model_dump()}


def write_trace(
    path: str | Path,
    runs: Iterable[tuple[int, RunResult]],
    *,
    append: bool = False,
) -> None:
    """Write the traces of ``(repetition, run)`` pairs as one delimited file."""
    records = (
        record
        for repetition, run in runs
        for record in iter_trace_records(run, repetition=repetition)
    )
    write_delimited(path, TRACE_COLUMNS, records, append=append)
