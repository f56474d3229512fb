"""Bitmask helpers and in-place lattice sweeps over the subsets of [d].

A subset u of [d] = {1, ..., d} is stored as an integer whose bit j-1 is set
iff j is in u.  Tables over all subsets are flat arrays of length 2**d indexed
by that integer.  Everything here works on float64 arrays and on object arrays
holding Fractions.
"""
from __future__ import annotations

import operator
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

MAX_DENSE_D = 24


class SubsetIndex:
    """A subset of [d] encoded as a bitmask; usable wherever an int index is."""

    __slots__ = ("bits", "d")

    def __init__(self, bits: int, d: int):
        bits = operator.index(bits)
        if not 1 <= d <= MAX_DENSE_D:
            raise ValueError(f"d must lie in [1, {MAX_DENSE_D}], got {d}")
        if not 0 <= bits < (1 << d):
            raise ValueError(f"bits {bits} out of range for d={d}")
        self.bits = bits
        self.d = d

    @classmethod
    def of(cls, members: Iterable[int], d: int) -> "SubsetIndex":
        return cls(mask_of(members), d)

    def __index__(self) -> int:
        return self.bits

    def __eq__(self, other):
        if isinstance(other, SubsetIndex):
            return self.bits == other.bits and self.d == other.d
        return NotImplemented

    def __hash__(self):
        return hash((self.bits, self.d))

    @property
    def cardinality(self) -> int:
        return popcount(self.bits)

    @property
    def members(self) -> tuple[int, ...]:
        return members(self.bits)

    @property
    def max(self) -> int:
        """Largest element, with max of the empty set equal to 0."""
        return self.bits.bit_length()

    def __le__(self, other: "SubsetIndex") -> bool:
        # directed order: u <= v iff max u <= max v
        return self.max <= other.max

    def __repr__(self):
        return f"SubsetIndex({format_subset(self.bits)}, d={self.d})"


def popcount(bits: int) -> int:
    return bin(bits).count("1")


def mask_of(members_: Iterable[int]) -> int:
    bits = 0
    for j in members_:
        j = operator.index(j)
        if j < 1:
            raise ValueError(f"subset members are 1-based, got {j}")
        bits |= 1 << (j - 1)
    return bits


def members(bits: int) -> tuple[int, ...]:
    out = []
    j = 1
    while bits:
        if bits & 1:
            out.append(j)
        bits >>= 1
        j += 1
    return tuple(out)


def format_subset(bits: int) -> str:
    return "{" + ",".join(str(j) for j in members(bits)) + "}"


def submasks(bits: int) -> Iterator[int]:
    """All w with w subset of bits, in decreasing numeric order, ending with 0."""
    w = bits
    while True:
        yield w
        if w == 0:
            return
        w = (w - 1) & bits


def popcounts(d: int) -> np.ndarray:
    pc = np.zeros(1 << d, dtype=np.int64)
    for j in range(d):
        pc[1 << j: 1 << (j + 1)] = pc[: 1 << j] + 1
    return pc


def check_d(d: int) -> int:
    d = operator.index(d)
    if not 1 <= d <= MAX_DENSE_D:
        raise ValueError(f"dense tables need 1 <= d <= {MAX_DENSE_D}, got {d}")
    return d


def dim_of_length(n: int) -> int:
    d = n.bit_length() - 1
    if n <= 1 or (1 << d) != n:
        raise ValueError(f"table length {n} is not 2**d with d >= 1")
    return d


def as_exact(values) -> np.ndarray:
    """Copy into an object array of Fractions."""
    arr = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        arr[i] = v if isinstance(v, Fraction) else Fraction(v)
    return arr


def superset_zeta(values: np.ndarray) -> np.ndarray:
    """In place: values[u] <- sum over v containing u of values[v]."""
    n = len(values)
    d = dim_of_length(n)
    for j in range(d):
        view = values.reshape(-1, 2, 1 << j)
        view[:, 0, :] += view[:, 1, :]
    return values


def superset_mobius(values: np.ndarray) -> np.ndarray:
    """In place inverse of superset_zeta (alternating superset sums)."""
    n = len(values)
    d = dim_of_length(n)
    for j in range(d):
        view = values.reshape(-1, 2, 1 << j)
        view[:, 0, :] -= view[:, 1, :]
    return values


def scale_by_cardinality(values: np.ndarray, base) -> np.ndarray:
    """In place: values[u] <- base**|u| * values[u]."""
    pc = popcounts(dim_of_length(len(values)))
    if values.dtype == object:
        powers = [base ** k for k in range(int(pc.max()) + 1)]
        for i in range(len(values)):
            values[i] = values[i] * powers[pc[i]]
    else:
        with np.errstate(over="ignore"):  # callers test for non-finite results
            values *= np.power(float(base), pc)
    return values
