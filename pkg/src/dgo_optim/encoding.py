"""Fixed-point mapping between bit strings and bounded real vectors.

All variables are concatenated into a single bit string in declaration order.
A ``w``-bit field holding the unsigned integer ``u`` decodes to
``lower + (upper - lower) * u / (2**w - 1)``, so both bounds are representable.
"""

from __future__ import annotations

from collections.abc import Sequence
from functools import cached_property, lru_cache
from typing import TYPE_CHECKING, ClassVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .bitstring import BitString

if TYPE_CHECKING:
    from typing_extensions import Self

__all__ = [
    "MAX_TOTAL_BITS",
    "MAX_VARIABLE_BITS",
    "EncodingError",
    "ResolutionError",
    "SearchSpace",
    "VariableSpec",
    "decode",
    "decode_matrix",
    "encode_nearest",
    "refine_space",
]

MAX_VARIABLE_BITS = 64
MAX_TOTAL_BITS = 4096


class EncodingError(ValueError):
    """A bit string or point does not fit the search space."""


class ResolutionError(EncodingError):
    """Refinement would exceed the maximum resolution."""


class _FrozenModel(BaseModel):
    model_config: ClassVar[ConfigDict] = ConfigDict(extra="forbid", frozen=True)


class VariableSpec(_FrozenModel):
    """Bounds and bit resolution of a single real variable."""

    lower: float = Field(default=..., description="Lower bound (inclusive).")
    upper: float = Field(default=..., description="Upper bound (inclusive).")
    bits: int = Field(
        default=8,
        ge=1,
        le=MAX_VARIABLE_BITS,
        description="Resolution of the variable's field, in bits.",
    )

    @model_validator(mode="before")
    @classmethod
    def _cast_sequence(cls, value: object) -> object:
        """Allow ``(lower, upper)`` or ``(lower, upper, bits)`` tuples."""
        if isinstance(value, (list, tuple)) and len(value) in (2, 3):
            return dict(zip(("lower", "upper", "bits"), value))
        return value

    @model_validator(mode="after")
    def _check_bounds(self) -> Self:
        if not self.lower < self.upper:
            raise ValueError(
                f"lower bound must be less than upper bound, "
                f"got [{self.lower}, {self.upper}]"
            )
        return self

    @property
    def levels(self) -> int:
        """Largest unsigned value of the field, ``2**bits - 1``."""
        return (1 << self.bits) - 1

    @property
    def step(self) -> float:
        """Spacing of the representable grid."""
        return (self.upper - self.lower) / self.levels


class SearchSpace(_FrozenModel):
    """An ordered box of variables encoded as one concatenated bit string."""

    variables: tuple[VariableSpec, ...] = Field(
        default=...,
        min_length=1,
        description="Variables in the order their fields appear in the string.",
    )

    @model_validator(mode="after")
    def _check_total_bits(self) -> Self:
        total = sum(v.bits for v in self.variables)
        if total > MAX_TOTAL_BITS:
            raise ValueError(
                f"Search space needs {total} bits; at most {MAX_TOTAL_BITS} "
                "are supported."
            )
        return self

    @classmethod
    def from_bounds(
        cls, bounds: Sequence[tuple[float, float]], bits: int | Sequence[int]
    ) -> Self:
        """Build a space from ``(lower, upper)`` pairs and a bit width per variable.

        Parameters
        ----------
        bounds : Sequence[tuple[float, float]]
            Box bounds, one pair per variable.
        bits : int | Sequence[int]
            A single width applied to every variable, or one width per variable.
        """
        widths = [bits] * len(bounds) if isinstance(bits, int) else list(bits)
        if len(widths) != len(bounds):
            raise ValueError("bits must have one entry per variable.")
        return cls(
            variables=tuple(
                VariableSpec(lower=lo, upper=hi, bits=w)
                for (lo, hi), w in zip(bounds, widths)
            )
        )

    @property
    def dimension(self) -> int:
        """Number of variables."""
        return len(self.variables)

    @cached_property
    def widths(self) -> tuple[int, ...]:
        """Bit width of each variable's field."""
        return tuple(v.bits for v in self.variables)

    @cached_property
    def total_bits(self) -> int:
        """Length of the bit strings this space decodes."""
        return sum(self.widths)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        """Start index of each variable's field."""
        return tuple(np.cumsum((0, *self.widths[:-1])).tolist())

    @cached_property
    def lower(self) -> np.ndarray:
        """Lower bounds as an array."""
        return np.array([v.lower for v in self.variables])

    @cached_property
    def upper(self) -> np.ndarray:
        """Upper bounds as an array."""
        return np.array([v.upper for v in self.variables])

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        """``(lower, upper)`` pairs."""
        return tuple((v.lower, v.upper) for v in self.variables)


# ----------------------  decoding  ----------------------


def _check_length(length: int, space: SearchSpace) -> None:
    if length != space.total_bits:
        raise EncodingError(
            f"Bit string has {length} bits but the search space needs "
            f"{space.total_bits}."
        )


@lru_cache(maxsize=MAX_VARIABLE_BITS)
def _field_weights(width: int) -> np.ndarray:
    powers = np.arange(width - 1, -1, -1, dtype=np.uint64)
    return np.left_shift(np.uint64(1), powers)


def decode_matrix(rows: np.ndarray, space: SearchSpace) -> np.ndarray:
    """Decode each row of a ``(m, total_bits)`` bit matrix to an ``(m, d)`` array."""
    rows = np.atleast_2d(rows)
    _check_length(rows.shape[1], space)
    out = np.empty((rows.shape[0], space.dimension))
    for i, (var, start) in enumerate(zip(space.variables, space.offsets)):
        unsigned = rows[:, start : start + var.bits].astype(np.uint64) @ _field_weights(
            var.bits
        )
        fraction = unsigned.astype(np.float64) / float(var.levels)
        values = np.minimum(var.lower + (var.upper - var.lower) * fraction, var.upper)
        # the top of the grid is the upper bound itself, not lower + span
        values[unsigned == np.uint64(var.levels)] = var.upper
        out[:, i] = values
    return out


def decode(b: BitString, space: SearchSpace) -> np.ndarray:
    """Decode a bit string into one real value per variable."""
    return decode_matrix(b.array[np.newaxis, :], space)[0]


def encode_nearest(x: Sequence[float] | np.ndarray, space: SearchSpace) -> BitString:
    """Return the bit string of the grid point nearest to ``x``.

    Rounds half up on each variable's integer grid.

    Raises
    ------
    EncodingError
        If ``x`` has the wrong dimension or any coordinate is outside its bounds.
    """
    point = np.asarray(x, dtype=np.float64).ravel()
    if point.size != space.dimension:
        raise EncodingError(
            f"Point has {point.size} coordinates, space has {space.dimension}."
        )
    fields: list[str] = []
    for value, var in zip(point.tolist(), space.variables):
        if not var.lower <= value <= var.upper:
            raise EncodingError(
                f"Coordinate {value} is outside [{var.lower}, {var.upper}]."
            )
        fraction = (value - var.lower) / (var.upper - var.lower)
        unsigned = min(int(np.floor(fraction * var.levels + 0.5)), var.levels)
        fields.append(format(unsigned, f"0{var.bits}b"))
    return BitString("".join(fields))


def refine_space(
    space: SearchSpace, b: BitString, rng: np.random.Generator | None = None
) -> tuple[SearchSpace, BitString]:
    """Double every variable's resolution, keeping the old bits as high bits.

    Each ``w``-bit field gains ``w`` new low-order bits drawn from ``rng``, or
    zeros when ``rng`` is None.

    Raises
    ------
    ResolutionError
        If any variable would exceed ``MAX_VARIABLE_BITS`` bits, or the string
        ``MAX_TOTAL_BITS`` bits.
    """
    _check_length(len(b), space)
    widest = max(space.widths)
    if 2 * widest > MAX_VARIABLE_BITS:
        raise ResolutionError(
            f"Cannot refine a {widest}-bit variable beyond {MAX_VARIABLE_BITS} bits."
        )
    if 2 * space.total_bits > MAX_TOTAL_BITS:
        raise ResolutionError(
            f"Cannot refine a {space.total_bits}-bit string beyond "
            f"{MAX_TOTAL_BITS} bits."
        )
    pieces: list[np.ndarray] = []
    for var, start in zip(space.variables, space.offsets):
        pieces.append(b.array[start : start + var.bits])
        if rng is None:
            pieces.append(np.zeros(var.bits, dtype=np.uint8))
        else:
            pieces.append(rng.integers(0, 2, size=var.bits, dtype=np.uint8))
    new_space = SearchSpace(
        variables=tuple(
            v.model_copy(update={"bits": 2 * v.bits}) for v in space.variables
        )
    )
    return new_space, BitString(np.concatenate(pieces))
