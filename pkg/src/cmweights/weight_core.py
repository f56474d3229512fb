"""Dense set functions over the subset lattice, difference operators and
complete monotonicity tests for finite d."""
from __future__ import annotations

import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

import numpy as np

from . import lattice
from .errors import DimensionError
from .lattice import format_subset, submasks

BRUTEFORCE_MAX_D = 6
REL_TOL = 1e-12


class SetFunction:
    """Real-valued family indexed by the subsets of [d]; entries may be negative.

    ``values[u]`` holds the entry for the subset with bitmask ``u``.  With
    ``exact=True`` the values are Fractions in an object array.
    """

    def __init__(self, d: int, values, exact: bool = False):
        d = lattice.check_d(d)
        if exact:
            arr = lattice.as_exact(values)
        else:
            arr = np.array(values, dtype=np.float64)
        if arr.shape != (1 << d,):
            raise DimensionError(f"expected {1 << d} values for d={d}, got shape {arr.shape}")
        arr.flags.writeable = False
        self.d = d
        self.values = arr
        self.exact = exact

    @classmethod
    def zeros(cls, d: int, exact: bool = False):
        if exact:
            return cls(d, [Fraction(0)] * (1 << d), exact=True)
        return cls(d, np.zeros(1 << d))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, u):
        return self.values[operator.index(u)]

    def copy_values(self) -> np.ndarray:
        return self.values.copy()

    def with_values(self, values) -> "SetFunction":
        """Same dimension and mode, new values; result class follows the signs."""
        return table_from(self.d, values, self.exact)

    def to_float(self) -> "SetFunction":
        return type(self)(self.d, np.array([float(v) for v in self.values]))

    def to_exact(self) -> "SetFunction":
        return type(self)(self.d, self.values, exact=True)

    def max_abs(self):
        return max(abs(v) for v in self.values) if self.exact else float(np.max(np.abs(self.values)))

    def tolerance(self):
        """Absolute tolerance for sign tests on alternating sums of this table."""
        if self.exact:
            return Fraction(0)
        return REL_TOL * self.max_abs()

    def is_nonnegative(self, tol=0) -> bool:
        return all(v >= -tol for v in self.values) if self.exact else bool(np.all(self.values >= -tol))

    def as_weights(self, tol=None) -> "WeightTable":
        """Reinterpret as weights; entries within ``tol`` below zero are clipped."""
        if tol is None:
            tol = self.tolerance()
        if not self.is_nonnegative(tol):
            raise ValueError("set function has negative entries beyond tolerance")
        if self.exact:
            return WeightTable(self.d, self.values, exact=True)
        return WeightTable(self.d, np.maximum(self.values, 0.0))

    def items(self):
        for u, v in enumerate(self.values):
            yield u, v

    def __eq__(self, other):
        if not isinstance(other, SetFunction):
            return NotImplemented
        return self.d == other.d and all(a == b for a, b in zip(self.values, other.values))

    def __repr__(self):
        body = ", ".join(f"{format_subset(u)}: {v}" for u, v in self.items() if v != 0)
        return f"{type(self).__name__}(d={self.d}, {{{body}}})"


class WeightTable(SetFunction):
    """Non-negative weights over all subsets of [d]."""

    def __init__(self, d: int, values, exact: bool = False):
        super().__init__(d, values, exact)
        if self.exact:
            bad = any(v < 0 for v in self.values)
        else:
            bad = not np.all(self.values >= 0)  # also rejects NaN
        if bad:
            raise ValueError("weights must be non-negative")

    @classmethod
    def from_entries(cls, d: int, entries: dict, exact: bool = False) -> "WeightTable":
        """Build from ``{frozenset_of_1_based_members: value}``; missing entries are 0."""
        values = [Fraction(0) if exact else 0.0] * (1 << d)
        for members_, v in entries.items():
            u = lattice.mask_of(members_)
            if u >= 1 << d:
                raise DimensionError(f"subset {sorted(members_)} not contained in [{d}]")
            values[u] = v
        return cls(d, values, exact=exact)


def table_from(d: int, values, exact: bool) -> SetFunction:
    """WeightTable if every entry is non-negative, otherwise SetFunction."""
    sf = SetFunction(d, values, exact)
    if sf.is_nonnegative():
        return WeightTable(d, sf.values, exact)
    return sf


def _same_dim(gamma: SetFunction, *subsets):
    for s in subsets:
        if not 0 <= operator.index(s) < (1 << gamma.d):
            raise DimensionError(f"subset {format_subset(operator.index(s))} not in [{gamma.d}]")
        if isinstance(s, lattice.SubsetIndex) and s.d != gamma.d:
            raise DimensionError(f"subset index built for d={s.d}, table has d={gamma.d}")


def delta(gamma: SetFunction, v) -> SetFunction:
    """The full difference table u -> (Delta_v gamma)_u.

    Built by peeling one element s of v at a time with
    (Delta_{v+s} g)_u = (Delta_v g)_u - (Delta_v g)_{u+s}.
    """
    _same_dim(gamma, v)
    v = operator.index(v)
    vals = gamma.copy_values()
    idx = np.arange(1 << gamma.d)
    for j in range(gamma.d):
        bit = 1 << j
        if v & bit:
            vals = vals - vals[idx | bit]
    return SetFunction(gamma.d, vals, gamma.exact)


def delta_at(gamma: SetFunction, v, u):
    """Single entry (Delta_v gamma)_u; exactly zero when u and v overlap."""
    _same_dim(gamma, v, u)
    v = operator.index(v)
    u = operator.index(u)
    zero = Fraction(0) if gamma.exact else 0.0
    if u & v:
        return zero
    total = zero
    for w in submasks(v):
        term = gamma.values[u | w]
        total = total - term if lattice.popcount(w) & 1 else total + term
    return total


@dataclass
class MonotonicityCertificate:
    """Outcome of a membership test.

    ``is_member`` is None when membership could not be decided.  For a positive
    dense verdict ``witness`` is a table whose entries are all >= -tol; for a
    negative verdict it is a pair ``(u, v)`` of bitmasks with
    (Delta_v gamma)_u < -tol.
    """

    is_member: Optional[bool]
    cls: str
    witness: Any = None
    min_value: Any = None
    tol: Any = 0.0
    reason: str = ""
    details: dict = field(default_factory=dict)

    @property
    def witness_pair(self) -> Optional[tuple[int, int]]:
        return self.witness if self.is_member is False else None

    def recheck(self, gamma: SetFunction) -> bool:
        """Re-evaluate the witness against ``gamma``."""
        if self.is_member is True:
            w = self.witness
            vals = w.values if isinstance(w, SetFunction) else np.asarray(w)
            return all(x >= -self.tol for x in vals)
        if self.is_member is False:
            u, v = self.witness
            return delta_at(gamma, v, u) < -self.tol
        return True


def check_completely_monotone(gamma: SetFunction) -> MonotonicityCertificate:
    """Membership in M_d via the sign of the Moebius (T-down with C=1) table."""
    from .transforms import TransformParams, t_down

    tol = gamma.tolerance()
    if not gamma.is_nonnegative(tol):
        u = next(i for i, x in enumerate(gamma.values) if x < -tol)
        return MonotonicityCertificate(False, "M_d", (u, 0), min(gamma.values), tol,
                                       "negative entry")
    down = t_down(gamma, TransformParams(1))
    min_value = min(down.values)
    if min_value >= -tol:
        return MonotonicityCertificate(True, "M_d", down, min_value, tol,
                                       "all Moebius coefficients non-negative")
    if gamma.d <= BRUTEFORCE_MAX_D:
        u, v = _first_violation(gamma, tol)
    else:
        # (T-down gamma)_u equals (Delta_{[d]\u} gamma)_u; take the smallest v.
        full = (1 << gamma.d) - 1
        negative = [u for u, x in enumerate(down.values) if x < -tol]
        u = max(negative)
        v = full ^ u
    return MonotonicityCertificate(False, "M_d", (u, v), min_value, tol,
                                   f"(Delta_{format_subset(v)} gamma)_{format_subset(u)} < 0")


def _direct_delta_table(gamma: SetFunction, v: int) -> np.ndarray:
    """(Delta_v gamma)_u for every u straight from the inclusion-exclusion sum."""
    idx = np.arange(1 << gamma.d)
    total = None
    for w in submasks(v):
        term = gamma.values[idx | w]
        if lattice.popcount(w) & 1:
            term = -term
        total = term if total is None else total + term
    total = total.copy()
    total[(idx & v) != 0] = Fraction(0) if gamma.exact else 0.0
    return total


def _first_violation(gamma: SetFunction, tol):
    for v in range(1 << gamma.d):
        table = _direct_delta_table(gamma, v)
        for u in range(1 << gamma.d):
            if table[u] < -tol:
                return u, v
    raise AssertionError("no violation found")  # pragma: no cover


def check_monotone_bruteforce(gamma: SetFunction) -> MonotonicityCertificate:
    """Oracle: test (Delta_v gamma)_u >= 0 for every pair (u, v), d <= 6.

    The positive witness is the table u -> min_v (Delta_v gamma)_u.
    """
    if gamma.d > BRUTEFORCE_MAX_D:
        raise DimensionError(f"brute force limited to d <= {BRUTEFORCE_MAX_D}")
    tol = gamma.tolerance()
    minima = gamma.copy_values()
    for v in range(1, 1 << gamma.d):
        table = _direct_delta_table(gamma, v)
        if gamma.exact:
            minima = np.array([min(a, b) for a, b in zip(minima, table)], dtype=object)
        else:
            minima = np.minimum(minima, table)
    min_value = min(minima)
    if min_value >= -tol:
        return MonotonicityCertificate(True, "M_d", minima, min_value, tol,
                                       "all differences non-negative")
    u, v = _first_violation(gamma, tol)
    return MonotonicityCertificate(False, "M_d", (u, v), min_value, tol,
                                   f"(Delta_{format_subset(v)} gamma)_{format_subset(u)} < 0")
