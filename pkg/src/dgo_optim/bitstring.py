"""Fixed-length bit strings, Gray coding, and DGO child generation.

A parent of ``n`` bits produces ``2n - 1`` children, one per node of a binary
subdivision tree over the bit positions (the whole string, its halves, their
halves, ... down to single bits). Each child is built by Gray-encoding the
parent, complementing the bits of one segment, and Gray-decoding the result.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Iterator, Sequence
from functools import lru_cache
from typing import TYPE_CHECKING, Literal, NamedTuple, overload

import numpy as np

if TYPE_CHECKING:
    from typing_extensions import Self

__all__ = [
    "BitString",
    "Segment",
    "Transform",
    "children_matrix",
    "generate_children",
    "gray_decode",
    "gray_encode",
    "invert_segment",
    "refine",
    "segment_masks",
    "segment_tree",
]

Transform = Literal["gray", "binary"]


class BitString(Sequence[int]):
    """An immutable string of binary digits, most-significant bit first.

    Parameters
    ----------
    bits : str | Iterable[int] | np.ndarray
        Either a string of ``'0'``/``'1'`` characters or an iterable of 0/1
        integers. Must contain at least one bit.
    """

    __slots__ = ("_bits",)

    _bits: np.ndarray

    def __init__(self, bits: str | Iterable[int] | np.ndarray) -> None:
        if isinstance(bits, str):
            if not bits or set(bits) - {"0", "1"}:
                raise ValueError(f"Invalid bit string literal: {bits!r}")
            arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
        else:
            arr = np.asarray(bits if isinstance(bits, np.ndarray) else list(bits))
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError("A BitString must be a non-empty 1-D sequence.")
            if np.any((arr != 0) & (arr != 1)):
                raise ValueError("Every element of a BitString must be 0 or 1.")
        arr = arr.astype(np.uint8)
        arr.flags.writeable = False
        object.__setattr__(self, "_bits", arr)

    # ----------------------  Constructors  ----------------------

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> Self:
        """Wrap a validated uint8 array without copying or re-checking it."""
        obj = cls.__new__(cls)
        arr.flags.writeable = False
        object.__setattr__(obj, "_bits", arr)
        return obj

    @classmethod
    def zeros(cls, length: int) -> Self:
        """Return the all-zero string of ``length`` bits."""
        return cls(np.zeros(length, dtype=np.uint8))

    @classmethod
    def ones(cls, length: int) -> Self:
        """Return the all-one string of ``length`` bits."""
        return cls(np.ones(length, dtype=np.uint8))

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> Self:
        """Return ``length`` uniformly random bits drawn from ``rng``."""
        return cls(rng.integers(0, 2, size=length, dtype=np.uint8))

    @classmethod
    def from_int(cls, value: int, length: int) -> Self:
        """Return the unsigned ``length``-bit representation of ``value``."""
        if not 0 <= value < (1 << length):
            raise ValueError(f"{value} does not fit in {length} unsigned bits.")
        return cls(format(value, f"0{length}b"))

    # ----------------------  Conversions  ----------------------

    @property
    def array(self) -> np.ndarray:
        """Read-only ``uint8`` view of the bits."""
        return self._bits

    @property
    def length(self) -> int:
        """Number of bits."""
        return int(self._bits.size)

    def to_int(self) -> int:
        """Read the bits as an unsigned integer."""
        return int(str(self), 2)

    # ----------------------  Sequence protocol  ----------------------

    def __len__(self) -> int:
        return int(self._bits.size)

    @overload
    def __getitem__(self, index: int) -> int: ...
    @overload
    def __getitem__(self, index: slice) -> BitString: ...
    def __getitem__(self, index: int | slice) -> int | BitString:
        if isinstance(index, slice):
            return BitString(self._bits[index])
        return int(self._bits[index])

    def __iter__(self) -> Iterator[int]:
        return (int(b) for b in self._bits)

    def __add__(self, other: BitString) -> BitString:
        if not isinstance(other, BitString):
            return NotImplemented
        return BitString._wrap(np.concatenate([self._bits, other._bits]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return bool(np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        return hash((self._bits.size, self._bits.tobytes()))

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("BitString is immutable.")

    def __str__(self) -> str:
        return (self._bits + ord("0")).tobytes().decode("ascii")

    def __repr__(self) -> str:
        return f"BitString({str(self)!r})"


class Segment(NamedTuple):
    """A contiguous run of bit positions; one node of the segment tree."""

    start: int
    length: int
    node_id: int

    @property
    def stop(self) -> int:
        """One past the last bit index covered by the segment."""
        return self.start + self.length


# ----------------------  Gray coding  ----------------------


def gray_encode(b: BitString) -> BitString:
    """Binary-reflected Gray code: ``g[0] = b[0]``, ``g[i] = b[i-1] ^ b[i]``."""
    return BitString._wrap(_gray_encode(b.array))


def gray_decode(g: BitString) -> BitString:
    """Inverse Gray code: ``b[i]`` is the XOR of ``g[0..i]``."""
    return BitString._wrap(np.bitwise_xor.accumulate(g.array))


def _gray_encode(bits: np.ndarray) -> np.ndarray:
    out = bits.copy()
    out[..., 1:] ^= bits[..., :-1]
    return out


# ----------------------  Segment tree  ----------------------


@lru_cache(maxsize=256)
def segment_tree(length: int) -> tuple[Segment, ...]:
    """Enumerate the ``2 * length - 1`` segments of the subdivision tree.

    The root covers ``[0, length)``. A segment of two or more bits splits into
    a left half of ``ceil(len / 2)`` bits and a right half of ``floor(len / 2)``
    bits. Nodes are numbered breadth-first, left to right.
    """
    if length < 1:
        raise ValueError(f"Segment tree length must be >= 1, got {length}.")
    segments: list[Segment] = []
    queue: deque[tuple[int, int]] = deque([(0, length)])
    while queue:
        start, size = queue.popleft()
        segments.append(Segment(start, size, len(segments)))
        if size >= 2:
            left = (size + 1) // 2
            queue.append((start, left))
            queue.append((start + left, size - left))
    return tuple(segments)


@lru_cache(maxsize=256)
def segment_masks(length: int) -> np.ndarray:
    """Return a read-only ``(2 * length - 1, length)`` uint8 matrix of segments.

    Row ``k`` has ones exactly at the bit positions of segment ``k``.
    """
    tree = segment_tree(length)
    masks = np.zeros((len(tree), length), dtype=np.uint8)
    for seg in tree:
        masks[seg.node_id, seg.start : seg.stop] = 1
    masks.flags.writeable = False
    return masks


def invert_segment(g: BitString, s: Segment) -> BitString:
    """Complement the bits of ``g`` inside segment ``s``."""
    if s.length < 1 or s.start < 0 or s.stop > len(g):
        raise ValueError(f"Segment {s} is out of range for {len(g)} bits.")
    out = g.array.copy()
    out[s.start : s.stop] ^= 1
    return BitString._wrap(out)


# ----------------------  Children  ----------------------


def children_matrix(parent: np.ndarray, transform: Transform = "gray") -> np.ndarray:
    """Return all children of ``parent`` as rows of a uint8 matrix.

    Row order follows :func:`segment_tree` enumeration.
    With ``transform="binary"`` the segments are inverted on the plain string.
    """
    masks = segment_masks(int(parent.size))
    if transform == "binary":
        return parent[np.newaxis, :] ^ masks
    if transform == "gray":
        flipped = _gray_encode(parent)[np.newaxis, :] ^ masks
        return np.bitwise_xor.accumulate(flipped, axis=1)
    raise ValueError(f"Unknown transform {transform!r}.")


def generate_children(
    parent: BitString, transform: Transform = "gray"
) -> list[BitString]:
    """Generate the ``2n - 1`` children of an ``n``-bit parent."""
    return [BitString._wrap(row) for row in children_matrix(parent.array, transform)]


def refine(b: BitString, extra: BitString) -> BitString:
    """Append ``extra`` as new low-order bits of ``b``."""
    if len(extra) < 1:
        raise ValueError("Refinement must append at least one bit.")
    return b + extra
