"""Structured weights: product, POD, finite-order and finitely supported.

Subsets are given as iterables of 1-based coordinates.  Dimensions are a
positive int or ``INF``.  Infinite sums and products are returned as
:class:`~cmweights.transforms.CertifiedValue` enclosures built from exact
partial sums plus rigorous tail bounds.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from . import lattice
from .errors import DimensionError, NotMonotoneError, NotSummableError, UndecidableError
from .transforms import CertifiedValue, TransformParams, _as_params, summability, t_up
from .weight_core import WeightTable

INF = math.inf
TARGET_REL_WIDTH = 1e-10
J_START = 1 << 10
J_MAX = 1 << 22
SERIES_J_START = 1 << 8
SERIES_J_MAX = 1 << 16
SERIES_ORDER_CUT = 64
POD_CHECK_HORIZON = 64


def _as_set(u) -> frozenset:
    s = frozenset(int(j) for j in u)
    if any(j < 1 for j in s):
        raise ValueError("coordinates are 1-based")
    return s


def subsets_of(u) -> list:
    u = sorted(u)
    return [frozenset(c) for k in range(len(u) + 1) for c in itertools.combinations(u, k)]


def _check_dim(d):
    if d is INF or d == INF:
        return INF
    d = int(d)
    if d < 1:
        raise DimensionError("d must be a positive integer or INF")
    return d


# ---------------------------------------------------------------------------
# sequences gamma_1 >= gamma_2 >= ... >= 0


class SequenceSpec:
    """Non-increasing non-negative sequence indexed from j = 1."""

    support: Optional[int] = None  # number of possibly non-zero terms, None if infinite

    def value(self, j: int) -> float:
        raise NotImplementedError

    def values(self, J: int) -> np.ndarray:
        return np.array([self.value(j) for j in range(1, J + 1)], dtype=float)

    def decay(self) -> float:
        raise NotImplementedError

    def power_summable(self, s: float) -> bool:
        """Whether sum_j gamma_j^s is finite."""
        raise NotImplementedError

    def tail_bounds(self, J: int, s: float = 1.0) -> tuple:
        """Enclosure of sum_{j > J} gamma_j^s."""
        raise NotImplementedError

    def scaled(self, f: float) -> "SequenceSpec":
        raise NotImplementedError

    def powered(self, s: float) -> "SequenceSpec":
        raise NotImplementedError

    def is_zero(self) -> bool:
        return self.value(1) == 0


@dataclass(frozen=True)
class PowerLaw(SequenceSpec):
    """gamma_j = c * j^(-lam)."""

    c: float
    lam: float

    def __post_init__(self):
        if self.c < 0 or self.lam < 0:
            raise ValueError("power law needs c >= 0 and lambda >= 0")

    def value(self, j):
        return self.c * float(j) ** (-self.lam)

    def values(self, J):
        return self.c * np.arange(1, J + 1, dtype=float) ** (-self.lam)

    def decay(self):
        return INF if self.c == 0 else self.lam

    def power_summable(self, s):
        return self.c == 0 or self.lam * s > 1

    def tail_bounds(self, J, s=1.0):
        if self.c == 0:
            return 0.0, 0.0
        alpha = self.lam * s
        if alpha <= 1:
            return INF, INF
        cs = self.c ** s
        # x^-alpha is convex: trapezoid bound below, midpoint bound above
        lo = (J + 1) ** (1 - alpha) / (alpha - 1) + 0.5 * (J + 1) ** (-alpha)
        hi = (J + 0.5) ** (1 - alpha) / (alpha - 1)
        return cs * lo, cs * hi

    def scaled(self, f):
        return PowerLaw(self.c * f, self.lam)

    def powered(self, s):
        return PowerLaw(self.c ** s, self.lam * s)


@dataclass(frozen=True)
class Geometric(SequenceSpec):
    """gamma_j = c * q^j with 0 <= q < 1."""

    c: float
    q: float

    def __post_init__(self):
        if self.c < 0 or not 0 <= self.q < 1:
            raise ValueError("geometric sequence needs c >= 0 and 0 <= q < 1")

    def value(self, j):
        return self.c * self.q ** j

    def values(self, J):
        return self.c * self.q ** np.arange(1, J + 1, dtype=float)

    def decay(self):
        return INF

    def power_summable(self, s):
        return True

    def tail_bounds(self, J, s=1.0):
        if self.c == 0 or self.q == 0:
            return 0.0, 0.0
        qs = self.q ** s
        t = self.c ** s * qs ** (J + 1) / (1 - qs)
        return t, t

    def scaled(self, f):
        return Geometric(self.c * f, self.q)

    def powered(self, s):
        return Geometric(self.c ** s, self.q ** s)


class Explicit(SequenceSpec):
    """Finitely many listed values followed by zeros."""

    def __init__(self, values: Iterable[float]):
        vals = tuple(float(v) for v in values)
        if any(v < 0 for v in vals):
            raise ValueError("sequence values must be non-negative")
        if any(a < b for a, b in zip(vals, vals[1:])):
            raise ValueError("sequence must be non-increasing")
        self.listed = vals
        self.support = len(vals)

    def value(self, j):
        return self.listed[j - 1] if j <= len(self.listed) else 0.0

    def decay(self):
        return INF

    def power_summable(self, s):
        return True

    def tail_bounds(self, J, s=1.0):
        t = float(sum(v ** s for v in self.listed[J:] if v > 0))
        return t, t

    def scaled(self, f):
        return Explicit([v * f for v in self.listed])

    def powered(self, s):
        return Explicit([v ** s if v > 0 else 0.0 for v in self.listed])

    def __eq__(self, other):
        return isinstance(other, Explicit) and self.listed == other.listed

    def __hash__(self):
        return hash(self.listed)

    def __repr__(self):
        return f"Explicit({list(self.listed)})"


@dataclass(frozen=True)
class UpFactor(SequenceSpec):
    """mult * c2 g_j / (1 + c2 g_j): the factor sequence of T-up of product weights."""

    base: SequenceSpec
    c2: float
    mult: float = 1.0

    @property
    def support(self):
        return self.base.support

    def _f(self, x):
        return self.mult * self.c2 * x / (1 + self.c2 * x)

    def value(self, j):
        return self._f(self.base.value(j))

    def values(self, J):
        return self._f(self.base.values(J))

    def decay(self):
        return self.base.decay()

    def power_summable(self, s):
        return self.base.power_summable(s)

    def tail_bounds(self, J, s=1.0):
        lo, hi = self.base.tail_bounds(J, s)
        top = self.mult * self.c2
        shrink = 1 / (1 + self.c2 * self.base.value(J + 1))
        return (top * shrink) ** s * lo, top ** s * hi

    def scaled(self, f):
        return UpFactor(self.base, self.c2, self.mult * f)


def _certify(partial_and_tail: Callable[[int], tuple], support: Optional[int],
             j_start=J_START, j_max=J_MAX) -> CertifiedValue:
    """Grow the cutoff J until the enclosure is narrow enough."""
    if support is not None:
        lo, hi = partial_and_tail(support)
        return CertifiedValue(lo, hi)
    J = j_start
    while True:
        lo, hi = partial_and_tail(J)
        cv = CertifiedValue(lo, hi)
        if math.isinf(hi) or cv.rel_width <= TARGET_REL_WIDTH or J >= j_max:
            return cv
        J *= 4


def power_sum(seq: SequenceSpec, s: float = 1.0, d=INF) -> CertifiedValue:
    """sum_{j <= d} gamma_j^s."""
    if d != INF:
        v = float(np.sum(seq.values(int(d)) ** s))
        return CertifiedValue(v, v)
    if not seq.power_summable(s):
        return CertifiedValue(INF, INF)

    def at(J):
        part = float(np.sum(seq.values(J) ** s))
        lo, hi = seq.tail_bounds(J, s)
        return part + lo, part + hi

    return _certify(at, seq.support)


def _log_product(seq: SequenceSpec, scale: float, sign: int, d) -> CertifiedValue:
    """Enclosure of prod_{j <= d} (1 + sign * scale * gamma_j), sign in {+1, -1}."""
    if d != INF:
        x = scale * seq.values(int(d))
        v = float(np.prod(1 + sign * x))
        return CertifiedValue(v, v)
    if sign < 0 and scale * seq.value(1) >= 1:
        return CertifiedValue(0.0, 0.0)
    if not seq.power_summable(1):
        return CertifiedValue(0.0, 0.0) if sign < 0 else CertifiedValue(INF, INF)

    def at(J):
        x = scale * seq.values(J)
        part = float(np.sum(np.log1p(sign * x)))
        s1 = [scale * b for b in seq.tail_bounds(J, 1)]
        s2 = [scale ** 2 * b for b in seq.tail_bounds(J, 2)]
        s3 = [scale ** 3 * b for b in seq.tail_bounds(J, 3)]
        if sign > 0:
            # x - x^2/2 <= log(1+x) <= x - x^2/2 + x^3/3
            lo = s1[0] - s2[1] / 2
            hi = s1[1] - s2[0] / 2 + s3[1] / 3
        else:
            # -x - x^2/2 - x^3/(3(1-x)) <= log(1-x) <= -x - x^2/2
            xmax = scale * seq.value(J + 1)
            lo = -s1[1] - s2[1] / 2 - s3[1] / (3 * (1 - xmax))
            hi = -s1[0] - s2[0] / 2
        return math.exp(part + lo), math.exp(part + hi)

    return _certify(at, seq.support)


# ---------------------------------------------------------------------------
# order sequences Gamma_0, Gamma_1, ...


class OrderSeq:
    def value(self, k: int) -> float:
        raise NotImplementedError

    def powered(self, s: float) -> "OrderSeq":
        raise NotImplementedError

    max_index: float = INF


class OrderExplicit(OrderSeq):
    def __init__(self, values: Iterable[float]):
        self.listed = tuple(float(v) for v in values)
        if not self.listed or any(v < 0 for v in self.listed):
            raise ValueError("order sequence needs non-negative values, Gamma_0 first")
        self.max_index = len(self.listed) - 1

    def value(self, k):
        if k >= len(self.listed):
            raise DimensionError(f"Gamma_{k} not given")
        return self.listed[k]

    def powered(self, s):
        return OrderExplicit([v ** s for v in self.listed])

    def __repr__(self):
        return f"OrderExplicit({list(self.listed)})"


@dataclass(frozen=True)
class OrderFactorial(OrderSeq):
    """Gamma_k = c (k!)^b."""

    c: float
    b: float

    def value(self, k):
        return self.c * math.exp(self.b * math.lgamma(k + 1))

    def powered(self, s):
        return OrderFactorial(self.c ** s, self.b * s)


@dataclass(frozen=True)
class OrderConstant(OrderSeq):
    c: float

    def value(self, k):
        return self.c

    def powered(self, s):
        return OrderConstant(self.c ** s)


# ---------------------------------------------------------------------------
# weight specs


class WeightSpec:
    d = INF

    @property
    def is_finite_dim(self) -> bool:
        return self.d != INF

    def entry(self, u) -> float:
        raise NotImplementedError

    def _check_u(self, u) -> frozenset:
        u = _as_set(u)
        if u and self.is_finite_dim and max(u) > self.d:
            raise DimensionError(f"subset {sorted(u)} not contained in [{self.d}]")
        return u


class Product(WeightSpec):
    """gamma_u = prod_{j in u} gamma_j, gamma_empty = 1."""

    def __init__(self, seq: SequenceSpec, d=INF):
        self.seq = seq
        self.d = _check_dim(d)

    def entry(self, u):
        u = self._check_u(u)
        return float(math.prod(self.seq.value(j) for j in u))

    def seq_summable(self) -> bool:
        return self.is_finite_dim or self.seq.power_summable(1)

    def all_at_most_one(self) -> bool:
        return self.seq.value(1) <= 1

    def __repr__(self):
        return f"Product({self.seq!r}, d={self.d})"


class POD(WeightSpec):
    """gamma_u = Gamma_{|u|} prod_{j in u} gamma_j with Gamma_k <= C_a (k!)^a."""

    def __init__(self, seq: SequenceSpec, order: OrderSeq, a: float, C_a: float, d=INF,
                 order_enclosure: Optional[CertifiedValue] = None, check_horizon=POD_CHECK_HORIZON):
        self.seq = seq
        self.order = order
        self.a = float(a)
        self.C_a = float(C_a)
        self.d = _check_dim(d)
        self.order_enclosure = order_enclosure
        if self.a < 0 or self.C_a <= 0:
            raise ValueError("POD weights need a >= 0 and C_a > 0")
        top = order.max_index
        if top < self.d:
            raise DimensionError("order sequence shorter than the dimension")
        horizon = int(min(self.d, check_horizon))
        for k in range(horizon + 1):
            bound = self.C_a * math.exp(self.a * math.lgamma(k + 1))
            if order.value(k) > bound * (1 + 1e-12):
                raise ValueError(f"Gamma_{k} exceeds C_a (k!)^a")

    def entry(self, u):
        u = self._check_u(u)
        return self.order.value(len(u)) * float(math.prod(self.seq.value(j) for j in u))

    def seq_summable(self) -> bool:
        return self.is_finite_dim or self.seq.power_summable(1)

    def __repr__(self):
        return f"POD({self.seq!r}, {self.order!r}, a={self.a}, C_a={self.C_a}, d={self.d})"


class FiniteOrder(WeightSpec):
    """Weights vanishing on sets of more than ``order`` elements.

    Either an explicit finite ``entries`` map or a product-type rule
    gamma_u = gamma_empty * prod_{j in u} seq_j for |u| <= order.
    """

    def __init__(self, order: int, entries: Optional[dict] = None, seq: Optional[SequenceSpec] = None,
                 gamma_empty: float = 1.0, d=INF):
        if (entries is None) == (seq is None):
            raise ValueError("give exactly one of entries and seq")
        self.order = int(order)
        self.d = _check_dim(d)
        self.seq = seq
        self.gamma_empty = float(gamma_empty)
        self.entries = None
        if entries is not None:
            self.entries = {}
            for u, v in entries.items():
                u = self._check_u(u)
                if len(u) > self.order and v != 0:
                    raise ValueError(f"entry {sorted(u)} exceeds order {self.order}")
                if v < 0:
                    raise ValueError("weights must be non-negative")
                self.entries[u] = float(v)

    def entry(self, u):
        u = self._check_u(u)
        if len(u) > self.order:
            return 0.0
        if self.entries is not None:
            return self.entries.get(u, 0.0)
        return self.gamma_empty * float(math.prod(self.seq.value(j) for j in u))

    def seq_summable(self) -> bool:
        return self.seq is None or self.is_finite_dim or self.order == 0 or self.seq.power_summable(1)

    def order_value(self, k):
        return self.gamma_empty if k <= self.order else 0.0


class FinSupport(WeightSpec):
    """Finitely many non-zero weights; ``truncated`` marks a cut-off infinite family."""

    def __init__(self, entries: dict, d=INF, truncated: bool = False):
        self.d = _check_dim(d)
        self.truncated = truncated
        self.entries = {}
        for u, v in entries.items():
            u = self._check_u(u)
            if v < 0:
                raise ValueError("weights must be non-negative")
            if v != 0:
                self.entries[u] = float(v)

    def entry(self, u):
        return self.entries.get(self._check_u(u), 0.0)

    def support_dim(self) -> int:
        return max((max(u) for u in self.entries if u), default=0)

    def __repr__(self):
        body = ", ".join(f"{sorted(u)}: {v}" for u, v in sorted(self.entries.items(), key=lambda t: sorted(t[0])))
        return f"FinSupport({{{body}}}, d={self.d})"


class NestedBlocks(WeightSpec):
    """gamma_u = 2^-j for u = {1, ..., 2^j}, j >= 1, and 0 otherwise (d = infinity)."""

    d = INF

    def entry(self, u):
        u = _as_set(u)
        n = len(u)
        if n >= 2 and n & (n - 1) == 0 and max(u) == n:
            return 2.0 ** (-(n.bit_length() - 1))
        return 0.0

    def truncated(self, j_max: int) -> FinSupport:
        return FinSupport({frozenset(range(1, 2 ** j + 1)): 2.0 ** -j for j in range(1, j_max + 1)},
                          d=INF, truncated=True)


def eval_weight(spec, u) -> float:
    return spec.entry(u)


def truncate_to_table(spec, d: int) -> WeightTable:
    """Dense table of the restriction of ``spec`` to the subsets of [d]."""
    d = lattice.check_d(d)
    if spec.is_finite_dim and spec.d < d:
        raise DimensionError(f"spec has dimension {spec.d} < {d}")
    n = 1 << d
    if isinstance(spec, (Product, POD)) or (isinstance(spec, FiniteOrder) and spec.seq is not None):
        vals = np.ones(n)
        g = spec.seq.values(d)
        for j in range(d):
            vals[1 << j: 1 << (j + 1)] = vals[: 1 << j] * g[j]
        pc = lattice.popcounts(d)
        if isinstance(spec, POD):
            vals *= np.array([spec.order.value(k) for k in range(d + 1)])[pc]
        elif isinstance(spec, FiniteOrder):
            vals *= np.array([spec.order_value(k) for k in range(d + 1)])[pc]
        return WeightTable(d, vals)
    if isinstance(spec, (FinSupport, FiniteOrder)):
        vals = np.zeros(n)
        for u, v in spec.entries.items():
            if not u or max(u) <= d:
                vals[lattice.mask_of(u)] = v
        return WeightTable(d, vals)
    return WeightTable(d, [spec.entry(lattice.members(u)) for u in range(n)])


def power_spec(spec, s: float):
    """The weights gamma^s (entrywise power)."""
    if isinstance(spec, Product):
        return Product(spec.seq.powered(s), spec.d)
    if isinstance(spec, POD):
        return POD(spec.seq.powered(s), spec.order.powered(s), spec.a * s, spec.C_a ** s, spec.d)
    if isinstance(spec, FiniteOrder):
        if spec.seq is not None:
            return FiniteOrder(spec.order, seq=spec.seq.powered(s), gamma_empty=spec.gamma_empty ** s, d=spec.d)
        return FiniteOrder(spec.order, entries={u: v ** s for u, v in spec.entries.items()}, d=spec.d)
    if isinstance(spec, FinSupport):
        return FinSupport({u: v ** s for u, v in spec.entries.items()}, spec.d, spec.truncated)
    raise TypeError(f"cannot take powers of {type(spec).__name__}")


# ---------------------------------------------------------------------------
# order-wise series  sum_n Gamma_{k+n} e_n(x_j : j not in u)


def _esp(xs: np.ndarray, L: int) -> np.ndarray:
    """Elementary symmetric polynomials e_0..e_L of xs."""
    E = np.zeros(L + 1)
    E[0] = 1.0
    for x in xs:
        E[1:] += x * E[:-1]
    return E


def _choose_t(seq: SequenceSpec, a: float) -> Optional[float]:
    """An exponent t >= max(1, a), t > a, with sum x_j^{1/t} finite."""
    t = max(1.0, a)
    if t <= a:
        p = seq.decay()
        t = a + 1 if p == INF else 0.5 * (a + p)
        if t <= a:
            return None
    return t if seq.power_summable(1 / t) else None


def order_series(x: SequenceSpec, gamma_of: Callable[[int], float], k: int, exclude: frozenset,
                 d, bound: tuple, max_n: float = INF) -> CertifiedValue:
    """Enclosure of sum_{n >= 0} Gamma_{k+n} e_n(x_j : j in [d] minus exclude).

    ``bound = (C_a, a)`` must satisfy Gamma_m <= C_a (m!)^a for all m; it is
    only used to certify the part dropped by truncation when d is infinite.
    """
    def exact(J):
        xs = np.array([x.value(j) for j in range(1, J + 1) if j not in exclude])
        L = int(min(len(xs), max_n))
        E = _esp(xs, L)
        g = np.array([gamma_of(k + n) for n in range(L + 1)])
        v = float(np.dot(g, E))
        return CertifiedValue(v, v)

    if d != INF:
        return exact(int(d))
    if x.support is not None:
        return exact(max(x.support, max(exclude, default=0)))
    C_a, a = bound
    t = _choose_t(x, a)
    if t is None:
        raise UndecidableError("cannot certify the order-wise series for these parameters")
    J = max(SERIES_J_START, max(exclude, default=0))
    while True:
        xs_full = x.values(J)
        T_J = float(np.sum(xs_full ** (1 / t)))
        mask = np.ones(J, dtype=bool)
        for j in exclude:
            mask[j - 1] = False
        xs = xs_full[mask]
        L = int(min(max_n, SERIES_ORDER_CUT))
        E = _esp(xs, L)
        g = np.array([gamma_of(k + n) for n in range(L + 1)])
        partial = float(np.dot(g, E))
        known, missing = _truncation_bound(x, gamma_of, E, C_a, a, t, k, J, T_J, L, max_n, partial)
        cv = CertifiedValue(partial + known, partial + missing)
        if cv.rel_width <= TARGET_REL_WIDTH or J >= SERIES_J_MAX:
            return cv
        J *= 4


def _jensen_sum(C_a, a, t, shift, T, start, stop) -> float:
    """sum_{i=start}^{stop} C_a ((shift+i)!)^a (T^i / i!)^t.

    Uses e_i(y) <= (e_i(y^{1/t}))^t <= (T^i / i!)^t for t >= 1.  For t >= a the
    ratio of consecutive terms is non-increasing, so once it drops below 1/2 the
    rest is bounded by a geometric series.
    """
    if T == 0 or C_a == 0 or start > stop:
        return 0.0
    logT = math.log(T)
    total, prev, i = 0.0, None, start
    while i <= stop:
        term = math.exp(math.log(C_a) + a * math.lgamma(shift + i + 1) + t * (i * logT - math.lgamma(i + 1)))
        if prev is not None and prev > 0:
            r = term / prev
            if r < 0.5 and term <= 1e-20 * max(total, 1e-300):
                return total + term / (1 - r)
        total += term
        prev = term
        i += 1
        if i - start > 100000:
            return INF
    return total


def _truncation_bound(x, gamma_of, E, C_a, a, t, k, J, T_J, L, max_n, partial) -> float:
    """What sum_n Gamma_{k+n} e_n misses when only coordinates <= J and orders <= L are kept.

    Orders above L over the first J coordinates are bounded by a Jensen series.
    Subsets using m >= 1 coordinates beyond J factor as e_m(tail) e_i(head), with
    e_m(tail) <= min(S_1^m / m!, (S_t^m / m!)^t).  Returns (known, missing):
    ``known`` is a certified lower bound on the m = 1 part, where e_1(tail) = S_1
    exactly, and ``missing`` an upper bound on everything dropped.
    """
    missing = _jensen_sum(C_a, a, t, k, T_J, L + 1, max_n)
    S1_lo, S1 = x.tail_bounds(J, 1.0)
    St = x.tail_bounds(J, 1 / t)[1]
    known = 0.0
    if S1 == 0:
        return known, missing
    prev = None
    m = 1
    while m <= max_n:
        top = int(min(L, max_n - m))
        G = float(np.dot([gamma_of(k + i + m) for i in range(top + 1)], E[: top + 1]))
        if m == 1:
            known = S1_lo * G
        G += _jensen_sum(C_a, a, t, k + m, T_J, L + 1, max_n - m)
        lg = math.lgamma(m + 1)
        em = min(math.exp(m * math.log(S1) - lg), math.exp(t * (m * math.log(St) - lg)))
        term = em * G
        missing += term
        if prev is not None and prev > 0 and m >= 3:
            r = term / prev
            if r < 0.5 and term <= 1e-30 * max(partial, 1e-300):
                return known, missing + term / (1 - r)
        prev = term
        m += 1
        if m > 400:
            return known, INF
    return known, missing


def product_one_plus(spec: Product, c2: float) -> CertifiedValue:
    """prod_j (1 + c2 gamma_j)."""
    return _log_product(spec.seq, c2, +1, spec.d)


def product_one_minus(spec: Product, scale: float = 1.0, skip: frozenset = frozenset()) -> CertifiedValue:
    """prod_{j not in skip} (1 - scale gamma_j)."""
    if not skip:
        return _log_product(spec.seq, scale, -1, spec.d)
    if spec.d != INF:
        v = math.prod(1 - scale * spec.seq.value(j) for j in range(1, int(spec.d) + 1) if j not in skip)
        return CertifiedValue(v, v)
    first = max(skip)
    head = math.prod(1 - scale * spec.seq.value(j) for j in range(1, first + 1) if j not in skip)
    tail = _log_product(_Shifted(spec.seq, first), scale, -1, INF)
    return CertifiedValue(head * tail.lo, head * tail.hi)


@dataclass(frozen=True)
class _Shifted(SequenceSpec):
    base: SequenceSpec
    shift: int

    @property
    def support(self):
        s = self.base.support
        return None if s is None else max(s - self.shift, 0)

    def value(self, j):
        return self.base.value(j + self.shift)

    def values(self, J):
        return self.base.values(J + self.shift)[self.shift:]

    def power_summable(self, s):
        return self.base.power_summable(s)

    def tail_bounds(self, J, s=1.0):
        return self.base.tail_bounds(J + self.shift, s)


def pod_total(spec: POD, c2: float) -> CertifiedValue:
    """sum_u c2^{|u|} gamma_u for POD weights."""
    return order_series(spec.seq.scaled(c2), spec.order.value, 0, frozenset(), spec.d, (spec.C_a, spec.a),
                        spec.order.max_index)


def pod_finite_total(spec: POD, c2: float) -> float:
    return pod_total(spec, c2).value


def finite_order_total(spec: FiniteOrder, c2: float) -> CertifiedValue:
    if spec.entries is not None:
        v = sum(c2 ** len(u) * g for u, g in spec.entries.items())
        return CertifiedValue(v, v)
    return order_series(spec.seq.scaled(c2), spec.order_value, 0, frozenset(), spec.d,
                        (spec.gamma_empty, 0.0), spec.order)


# ---------------------------------------------------------------------------
# entry evaluators for transformed weights


class UpEvaluator(WeightSpec):
    """Entries of T-up for POD or finite-order weights, evaluated order by order."""

    def __init__(self, spec, C: float):
        self.spec = spec
        self.C = float(C)
        self.d = spec.d

    def enclosure(self, u) -> CertifiedValue:
        u = self._check_u(u)
        spec = self.spec
        c2 = self.C ** 2
        if isinstance(spec, FiniteOrder) and spec.entries is not None:
            v = sum(c2 ** len(w) * g for w, g in spec.entries.items() if u <= w)
            return CertifiedValue(v, v)
        x = spec.seq.scaled(c2)
        pref = float(math.prod(x.value(j) for j in u))
        if pref == 0:
            return CertifiedValue(0.0, 0.0)
        if isinstance(spec, POD):
            cv = order_series(x, spec.order.value, len(u), u, spec.d, (spec.C_a, spec.a), spec.order.max_index - len(u))
        else:
            if len(u) > spec.order:
                return CertifiedValue(0.0, 0.0)
            cv = order_series(x, spec.order_value, len(u), u, spec.d, (spec.gamma_empty, 0.0), spec.order - len(u))
        return CertifiedValue(pref * cv.lo, pref * cv.hi)

    def entry(self, u):
        return self.enclosure(u).value


class ProductDownEvaluator(WeightSpec):
    """C^{-2|u|} gamma_u prod_{j not in u} (1 - gamma_j) for product weights in M_d."""

    def __init__(self, spec: Product, C: float):
        self.spec = spec
        self.C = float(C)
        self.d = spec.d

    def enclosure(self, u) -> CertifiedValue:
        u = self._check_u(u)
        head = self.spec.entry(u) * self.C ** (-2 * len(u))
        if head == 0:
            return CertifiedValue(0.0, 0.0)
        rest = product_one_minus(self.spec, 1.0, u)
        return CertifiedValue(head * rest.lo, head * rest.hi)

    def entry(self, u):
        return self.enclosure(u).value


class MonotoneLimitDown(WeightSpec):
    """T-down entries as the limit of finite-section Moebius sums.

    C^{-2|u|} sum_{v subset [p] minus u} (-1)^{|v|} gamma_{u+v} is non-increasing
    in p for completely monotone weights; p doubles until it settles.
    """

    def __init__(self, spec, C: float, rel_tol: float = 1e-10, p_max: int = 1 << 14):
        if not isinstance(spec, (POD, FiniteOrder)):
            raise TypeError("monotone-limit evaluator supports POD and finite-order weights")
        self.spec = spec
        self.C = float(C)
        self.d = spec.d
        self.rel_tol = rel_tol
        self.p_max = p_max

    def _section(self, u, p):
        spec = self.spec
        if isinstance(spec, FiniteOrder) and spec.entries is not None:
            return sum(g * (-1) ** (len(w) - len(u)) for w, g in spec.entries.items()
                       if u <= w and (not w or max(w) <= p))
        g = np.array([-spec.seq.value(j) for j in range(1, p + 1) if j not in u])
        order_of = spec.order.value if isinstance(spec, POD) else spec.order_value
        max_n = (spec.order.max_index if isinstance(spec, POD) else spec.order) - len(u)
        L = int(min(len(g), max_n, 64 if spec.d == INF else len(g)))
        E = _esp(g, L)
        gam = np.array([order_of(len(u) + n) for n in range(L + 1)])
        return float(math.prod(spec.seq.value(j) for j in u)) * float(np.dot(gam, E))

    def entry(self, u):
        u = self._check_u(u)
        scale = self.C ** (-2 * len(u))
        if self.d != INF:
            return scale * self._section(u, int(self.d))
        p = max(64, max(u, default=0))
        prev = self._section(u, p)
        while p < self.p_max:
            p *= 2
            cur = self._section(u, p)
            if abs(cur - prev) <= self.rel_tol * max(abs(cur), 1e-300):
                return scale * max(cur, 0.0)
            prev = cur
        return scale * max(prev, 0.0)


# ---------------------------------------------------------------------------
# closed forms and bounds


def product_delta_closed_form(spec: Product, v, u) -> float:
    """(Delta_v gamma)_u = gamma_u prod_{j in v} (1 - gamma_j) for disjoint u, v."""
    u, v = _as_set(u), _as_set(v)
    if u & v:
        raise ValueError("u and v overlap; the difference vanishes there")
    return spec.entry(u) * float(math.prod(1 - spec.seq.value(j) for j in v))


def pod_onecoordinate_sum_bounds(spec: POD, params, j: int) -> tuple:
    """Bounds c_lo gamma_j <= sum_{u subset [j], j in u} C^{2|u|} gamma_u <= c gamma_j."""
    params = _as_params(params)
    c2 = params.c2()
    gj = spec.seq.value(j)
    lower = c2 * spec.order.value(1) * gj
    p, a = spec.seq.decay(), spec.a
    if p == a and a >= 1:
        T = power_sum(spec.seq.scaled(c2), 1 / p).hi
        if not T < 1:
            raise UndecidableError("need sum (C^2 gamma_j)^{1/p} < 1 when p = a")
        c = spec.C_a * (1 - T) ** (-2 * p) * c2
        return lower, c * gj
    if p > a and spec.seq.power_summable(1):
        if spec.seq.is_zero():
            return 0.0, 0.0
        tau = 1.0 if a < 1 else (a + 1 if p == INF else 0.5 * (a + p))
        S = power_sum(spec.seq.scaled(c2), 1 / tau).hi
        R = (2 * S) ** tau
        c_tilde2 = c2 / R
        T_tau = 0.5  # sum (C~^2 gamma_i)^{1/tau} by construction of R
        c = spec.C_a * math.exp(tau * R ** (1 / (tau - a))) * (1 - T_tau) ** (-2 * tau) * c_tilde2
        return lower, c * gj
    raise UndecidableError("hypotheses for the one-coordinate bound not met")


@dataclass
class SandwichBounds:
    """lower_factor * lower <= transformed weights <= upper_factor * upper."""

    lower: WeightSpec
    upper: WeightSpec
    lower_factor: CertifiedValue
    upper_factor: CertifiedValue

    @property
    def constant(self) -> float:
        return self.upper_factor.value if self.upper_factor.value != 1 else self.lower_factor.value


def _one():
    return CertifiedValue(1.0, 1.0)


def sandwich_up(spec, params) -> SandwichBounds:
    params = _as_params(params)
    rep = summability(spec, params)
    if rep.is_summable is not True:
        raise NotSummableError(rep.reason)
    c2 = params.c2()
    if isinstance(spec, Product):
        eta = Product(spec.seq.scaled(c2), spec.d)
        return SandwichBounds(eta, eta, _one(), product_one_plus(spec, c2))
    if isinstance(spec, POD):
        eta = POD(spec.seq.scaled(c2), spec.order, spec.a, spec.C_a, spec.d)
        y = spec.seq.scaled(2 ** spec.a * c2)
        fact = OrderFactorial(1.0, spec.a)
        xi = POD(y, OrderFactorial(spec.C_a, spec.a), spec.a, spec.C_a, spec.d)
        try:
            c = order_series(y, fact.value, 0, frozenset(), spec.d, (1.0, spec.a))
        except UndecidableError:
            c = CertifiedValue(1.0, INF)
        return SandwichBounds(eta, xi, _one(), c)
    raise TypeError("sandwich bounds need product or POD weights")


def sandwich_down(spec, params) -> SandwichBounds:
    params = _as_params(params)
    c2 = params.c2()
    if isinstance(spec, Product):
        if not spec.all_at_most_one():
            raise NotMonotoneError("product weights need gamma_j <= 1")
        zeta = Product(spec.seq.scaled(1 / c2), spec.d)
        return SandwichBounds(zeta, zeta, product_one_minus(spec), _one())
    if isinstance(spec, POD):
        zeta = POD(spec.seq.scaled(1 / c2), spec.order, spec.a, spec.C_a, spec.d)
        return SandwichBounds(FinSupport({}, spec.d), zeta, _one(), _one())
    raise TypeError("sandwich bounds need product or POD weights")


# ---------------------------------------------------------------------------
# decay


@dataclass(frozen=True)
class DecayResult:
    """kind is one of value, interval, infinity, zero, unknown."""

    kind: str
    lo: float
    hi: float
    reason: str = ""

    @property
    def value(self) -> Optional[float]:
        if self.kind in ("value", "infinity", "zero"):
            return self.lo
        return None

    @classmethod
    def of(cls, p: float, reason: str) -> "DecayResult":
        if p == INF:
            return cls("infinity", INF, INF, reason)
        if p == 0:
            return cls("zero", 0.0, 0.0, reason)
        return cls("value", p, p, reason)

    @classmethod
    def unknown(cls, reason: str, lo: float = 0.0, hi: float = INF) -> "DecayResult":
        return cls("unknown" if (lo, hi) == (0.0, INF) else "interval", lo, hi, reason)


def _pod_hypotheses(spec: POD) -> bool:
    return spec.order.value(1) > 0 and spec.seq.decay() > spec.a and spec.seq.power_summable(1)


def decay(spec) -> DecayResult:
    if isinstance(spec, (FinSupport, NestedBlocks)) or spec.is_finite_dim:
        return DecayResult.of(INF, "finitely many non-zero weights" if not isinstance(spec, NestedBlocks)
                              else "sum of gamma_u^{1/tau} is a geometric series for every tau")
    if isinstance(spec, Product):
        return DecayResult.of(spec.seq.decay(), "product weights: decay of the factor sequence")
    if isinstance(spec, POD):
        if spec.seq.is_zero():
            return DecayResult.of(INF, "only gamma_empty is non-zero")
        if _pod_hypotheses(spec):
            return DecayResult.of(spec.seq.decay(), "POD weights with Gamma_1 > 0 and p > a")
        if spec.order.value(1) > 0:
            return DecayResult.unknown("POD hypotheses not met; decay <= p", 0.0, spec.seq.decay())
        return DecayResult.unknown("POD hypotheses not met")
    if isinstance(spec, FiniteOrder):
        if spec.entries is not None or spec.order == 0 or spec.gamma_empty == 0:
            return DecayResult.of(INF, "finitely many non-zero weights")
        return DecayResult.of(spec.seq.decay(), "product-type finite-order weights: decay of the factor sequence")
    return DecayResult.unknown(f"no decay rule for {type(spec).__name__}")


def decay_after_up(spec, params) -> DecayResult:
    """Decay of T-up gamma where the invariance results apply."""
    params = _as_params(params)
    if isinstance(spec, FinSupport):
        if spec.truncated:
            return DecayResult.unknown("truncation of an infinite family; invariance results do not apply")
        return DecayResult.of(INF, "T-up of finitely supported weights is finitely supported")
    if isinstance(spec, NestedBlocks):
        return DecayResult.unknown("outside the hypotheses of the invariance results")
    rep = summability(spec, params)
    if rep.is_summable is not True:
        return DecayResult.unknown("weights not certified summable: " + rep.reason)
    if isinstance(spec, Product):
        return decay(spec)
    if isinstance(spec, POD):
        if spec.is_finite_dim or _pod_hypotheses(spec):
            return decay(spec)
        return DecayResult.unknown("POD hypotheses (Gamma_1 > 0, p > a) not certified")
    if isinstance(spec, FiniteOrder):
        r = decay(spec)
        if r.kind == "value" and r.lo < 1:
            return DecayResult.unknown("inconsistent: summable finite-order weights have decay >= 1", 1.0, INF)
        return r
    return DecayResult.unknown(f"no rule for {type(spec).__name__}")


def up_power_summable(spec, params, tau: float) -> Optional[bool]:
    """Whether sum_u (T-up gamma)_u^{1/tau} is finite; None if undecided."""
    params = _as_params(params)
    if isinstance(spec, FinSupport) or spec.is_finite_dim:
        return True
    rep = summability(spec, params)
    if rep.is_summable is False:
        return False
    if rep.is_summable is None:
        return None
    if isinstance(spec, Product) or (isinstance(spec, FiniteOrder) and spec.seq is not None):
        if spec.seq.is_zero():
            return True
        return spec.seq.power_summable(1 / tau)
    if isinstance(spec, FiniteOrder):
        return True
    if isinstance(spec, POD) and _pod_hypotheses(spec):
        if not spec.seq.power_summable(1 / tau):
            return False
        return True if tau != spec.seq.decay() else None
    return None


def extremal_example(j_max: int) -> FinSupport:
    """Weights 2^-j on {1, ..., 2^j}, 1 <= j <= j_max, as a truncated family."""
    if not 1 <= j_max <= 4:
        raise DimensionError("levels above 4 need tables beyond d = 16")
    return NestedBlocks().truncated(j_max)


def extremal_lower_bound(j_max: int, tau: float) -> float:
    """sum_{j=1}^{j_max} 2^{2^j} 2^{-(j+1)/tau}, a lower bound on sum (T-up gamma)_u^{1/tau}."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return float(sum(2.0 ** (2 ** j - (j + 1) / tau) for j in range(1, j_max + 1)))


def extremal_up_power_sum(j_max: int, tau: float) -> float:
    """sum_u (T-up gamma)_u^{1/tau} for the dense truncation of the extremal example, C = 1."""
    spec = extremal_example(j_max)
    up = t_up(truncate_to_table(spec, 2 ** j_max), TransformParams(1))
    return float(np.sum(up.values ** (1 / tau)))


# ---------------------------------------------------------------------------
# recognizer


def is_pod(table: WeightTable, rtol: float = 1e-9) -> bool:
    """Necessary test for POD structure on a dense table.

    Checks ratio consistency gamma_{w+i} gamma_{j} = gamma_{w+j} gamma_{i} for all
    coordinate pairs i < j and w avoiding both, and that gamma_u / prod_{j in u}
    gamma_{j} depends on |u| only.
    """
    vals = np.asarray(table.values, dtype=float)
    d = table.d

    def close(x, y):
        return abs(x - y) <= rtol * max(abs(x), abs(y))

    single = [vals[1 << i] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            bi, bj = 1 << i, 1 << j
            for w in range(1 << d):
                if w & (bi | bj):
                    continue
                if not close(vals[w | bi] * single[j], vals[w | bj] * single[i]):
                    return False
    pc = lattice.popcounts(d)
    ref = {}
    for u in range(1 << d):
        members_ = lattice.members(u)
        prod = math.prod(single[m - 1] for m in members_)
        k = int(pc[u])
        if k in ref:
            ru, rprod = ref[k]
            if not close(vals[u] * rprod, ru * prod):
                return False
        elif prod != 0:
            ref[k] = (vals[u], prod)
    return True
