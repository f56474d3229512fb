"""The sum operator T-up, its inverse T-down, and range/summability checks.

Dense routines work on tables over the subsets of a finite [d].  The ``*_spec``
routines accept structured weights (see :mod:`cmweights.families`) and also
cover d = infinity.
"""
from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import lattice
from .errors import DimensionError, NotMonotoneError, NotSummableError, NumericalError
from .weight_core import MonotonicityCertificate, SetFunction, WeightTable, table_from

NAIVE_MAX_D = 8


@dataclass(frozen=True)
class TransformParams:
    C: float
    d: Optional[float] = None  # informational; tables carry their own d

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")

    def c2(self, exact: bool = False):
        if exact:
            c = Fraction(self.C)
            return c * c
        return float(self.C) ** 2


def _as_params(params) -> TransformParams:
    return params if isinstance(params, TransformParams) else TransformParams(params)


def _work_array(gamma: SetFunction) -> np.ndarray:
    return gamma.copy_values()


def t_up(gamma: SetFunction, params) -> WeightTable:
    """(T-up gamma)_u = sum over v containing u of C^{2|v|} gamma_v."""
    params = _as_params(params)
    if not isinstance(gamma, SetFunction):
        raise DimensionError("t_up needs a dense table; use t_up_spec for structured weights")
    vals = _work_array(gamma)
    lattice.scale_by_cardinality(vals, params.c2(gamma.exact))
    with np.errstate(over="ignore", invalid="ignore"):
        lattice.superset_zeta(vals)
    if not gamma.exact and not np.all(np.isfinite(vals)):
        raise NumericalError("overflow in T-up")
    return table_from(gamma.d, vals, gamma.exact)


def t_down(gamma: SetFunction, params) -> SetFunction:
    """(T-down gamma)_u = C^{-2|u|} sum over v containing u of (-1)^{|v|-|u|} gamma_v."""
    params = _as_params(params)
    vals = _work_array(gamma)
    lattice.superset_mobius(vals)
    lattice.scale_by_cardinality(vals, 1 / params.c2(gamma.exact))
    return SetFunction(gamma.d, vals, gamma.exact)


def _naive_guard(gamma):
    if gamma.d > NAIVE_MAX_D:
        raise DimensionError(f"naive transforms limited to d <= {NAIVE_MAX_D}")


def t_up_naive(gamma: SetFunction, params) -> WeightTable:
    _naive_guard(gamma)
    c2 = _as_params(params).c2(gamma.exact)
    n = 1 << gamma.d
    zero = Fraction(0) if gamma.exact else 0.0
    out = []
    for u in range(n):
        total = zero
        for v in range(n):
            if v & u == u:
                total += c2 ** lattice.popcount(v) * gamma.values[v]
        out.append(total)
    return table_from(gamma.d, out, gamma.exact)


def t_down_naive(gamma: SetFunction, params) -> SetFunction:
    _naive_guard(gamma)
    c2 = _as_params(params).c2(gamma.exact)
    n = 1 << gamma.d
    zero = Fraction(0) if gamma.exact else 0.0
    out = []
    for u in range(n):
        total = zero
        for v in range(n):
            if v & u == u:
                sign = -1 if lattice.popcount(v ^ u) & 1 else 1
                total += sign * gamma.values[v]
        out.append(total / c2 ** lattice.popcount(u))
    return SetFunction(gamma.d, out, gamma.exact)


def roundtrip_down_up(gamma: SetFunction, params) -> tuple:
    """Return (max|T-down T-up gamma - gamma|, max|T-up T-down gamma - gamma|).

    The second number only speaks to the bijection when gamma is completely
    monotone; T-down may produce a signed table, which T-up accepts here.
    """
    params = _as_params(params)

    def dev(a, b):
        return max(abs(x - y) for x, y in zip(a.values, b.values))

    first = dev(t_down(t_up(gamma, params), params), gamma)
    back = t_down(gamma, params)
    vals = back.copy_values()
    lattice.scale_by_cardinality(vals, params.c2(gamma.exact))
    lattice.superset_zeta(vals)
    second = dev(SetFunction(gamma.d, vals, gamma.exact), gamma)
    return first, second


# ---------------------------------------------------------------------------
# structured weights


@dataclass(frozen=True)
class CertifiedValue:
    """Enclosure lo <= true value <= hi of a limit; ``value`` is the midpoint."""

    lo: float
    hi: float

    @property
    def value(self) -> float:
        if math.isinf(self.hi):
            return math.inf
        return 0.5 * (self.lo + self.hi)

    @property
    def rel_width(self) -> float:
        if self.hi == self.lo:
            return 0.0
        return (self.hi - self.lo) / max(abs(self.hi), abs(self.lo))

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    @classmethod
    def exact(cls, x: float) -> "CertifiedValue":
        return cls(float(x), float(x))


@dataclass
class SummabilityReport:
    is_summable: Optional[bool]  # None: undecided
    value: Optional[CertifiedValue]
    reason: str


def summability(spec, params) -> SummabilityReport:
    """Decide whether sum_v C^{2|v|} gamma_v is finite for structured weights."""
    from . import families as fam

    params = _as_params(params)
    c2 = params.c2()
    if isinstance(spec, fam.FinSupport):
        total = sum(c2 ** len(u) * v for u, v in spec.entries.items())
        return SummabilityReport(True, CertifiedValue.exact(total), "finitely supported")
    if isinstance(spec, fam.Product):
        if not spec.seq_summable():
            return SummabilityReport(False, None, "product weights: sum of gamma_j diverges")
        return SummabilityReport(True, fam.product_one_plus(spec, c2),
                                 "product weights: sum of gamma_j finite, value prod(1 + C^2 gamma_j)")
    if isinstance(spec, fam.FiniteOrder):
        if spec.seq is None:
            total = sum(c2 ** len(u) * v for u, v in spec.entries.items())
            return SummabilityReport(True, CertifiedValue.exact(total), "finite-order with finite entry map")
        if not spec.seq_summable():
            return SummabilityReport(False, None, "finite-order weights: sum of gamma_u diverges")
        return SummabilityReport(True, fam.finite_order_total(spec, c2),
                                 "finite-order weights: sum of gamma_u finite")
    if isinstance(spec, fam.POD):
        if spec.is_finite_dim:
            return SummabilityReport(True, CertifiedValue.exact(fam.pod_finite_total(spec, c2)),
                                     "finite dimension")
        p = spec.seq.decay()
        gamma1 = spec.order.value(1)
        if p > spec.a and gamma1 > 0:
            if not spec.seq_summable():
                return SummabilityReport(False, None, "POD, p > a, Gamma_1 > 0: sum of gamma_j diverges")
            return SummabilityReport(True, fam.pod_total(spec, c2),
                                     "POD, p > a, Gamma_1 > 0: sum of gamma_j finite")
        if p == spec.a >= 1:
            t = fam.power_sum(spec.seq.scaled(c2), 1 / p)
            if t.hi < 1:
                return SummabilityReport(True, fam.pod_total(spec, c2),
                                         "POD, p = a >= 1 with sum (C^2 gamma_j)^{1/p} < 1")
            return SummabilityReport(None, None, "POD, p = a: threshold sum not below 1, undecided")
        if gamma1 > 0 and not spec.seq_summable():
            return SummabilityReport(False, None, "POD, Gamma_1 > 0: sum of gamma_j diverges")
        return SummabilityReport(None, None, "POD outside the decidable cases")
    raise TypeError(f"unsupported weight family {type(spec).__name__}")


def _require_summable(spec, params):
    rep = summability(spec, params)
    if rep.is_summable is not True:
        raise NotSummableError(rep.reason)
    return rep


def t_up_spec(spec, params):
    """T-up of structured weights.

    Product weights map to POD weights with constant order sequence; finitely
    supported weights map to finitely supported weights; other families get an
    entry evaluator.
    """
    from . import families as fam

    params = _as_params(params)
    c2 = params.c2()
    if isinstance(spec, fam.FinSupport):
        out = {}
        supports = list(spec.entries.items())
        closure = set()
        for u, _ in supports:
            closure.update(fam.subsets_of(u))
        for u in closure:
            out[u] = sum(c2 ** len(v) * g for v, g in supports if u <= v)
        return fam.FinSupport(out, spec.d)
    _require_summable(spec, params)
    if isinstance(spec, fam.Product):
        total = fam.product_one_plus(spec, c2)
        factor = fam.UpFactor(spec.seq, c2)
        return fam.POD(factor, fam.OrderConstant(total.value), a=0.0, C_a=total.value,
                       d=spec.d, order_enclosure=total)
    if isinstance(spec, (fam.POD, fam.FiniteOrder)):
        return fam.UpEvaluator(spec, params.C)
    raise TypeError(f"unsupported weight family {type(spec).__name__}")


def t_down_spec(spec, params, assume_monotone: bool = False):
    """T-down of structured weights in M_d."""
    from . import families as fam

    params = _as_params(params)
    if isinstance(spec, fam.Product):
        if not spec.all_at_most_one():
            raise NotMonotoneError("product weights need 0 <= gamma_j <= 1")
        return fam.ProductDownEvaluator(spec, params.C)
    if isinstance(spec, fam.FinSupport):
        d = spec.support_dim()
        table = fam.truncate_to_table(spec, max(d, 1))
        from .weight_core import check_completely_monotone
        if not check_completely_monotone(table).is_member:
            raise NotMonotoneError("finitely supported weights are not completely monotone")
        down = t_down(table, params)
        entries = {frozenset(lattice.members(u)): float(x) for u, x in down.items() if x != 0}
        return fam.FinSupport(entries, spec.d)
    if isinstance(spec, fam.POD) and spec.is_finite_dim:
        table = fam.truncate_to_table(spec, int(spec.d))
        from .weight_core import check_completely_monotone
        if not check_completely_monotone(table).is_member:
            raise NotMonotoneError("POD weights are not completely monotone")
        down = t_down(table, params)
        entries = {frozenset(lattice.members(u)): float(x) for u, x in down.items() if x != 0}
        return fam.FinSupport(entries, spec.d)
    if assume_monotone:
        return fam.MonotoneLimitDown(spec, params.C)
    raise NotMonotoneError("cannot certify complete monotonicity of this family; "
                           "pass assume_monotone=True to use the monotone-limit evaluator")


def membership_A_d(spec) -> MonotonicityCertificate:
    """A_d verdict for structured weights (None when undecided)."""
    from . import families as fam

    if isinstance(spec, fam.FinSupport):
        table = fam.truncate_to_table(spec, max(spec.support_dim(), 1))
        from .weight_core import check_completely_monotone
        cert = check_completely_monotone(table)
        cert.cls = "A_d"
        cert.reason = "finitely supported: A_d iff M_d; " + cert.reason
        return cert
    if isinstance(spec, fam.Product):
        if not spec.all_at_most_one():
            return MonotonicityCertificate(False, "A_d", None, reason="some gamma_j > 1, not in M_d")
        if spec.is_finite_dim:
            return MonotonicityCertificate(True, "A_d", None, reason="finite d: A_d = M_d")
        if spec.seq_summable():
            return MonotonicityCertificate(True, "A_d", None,
                                           reason="product weights in M_d with summable gamma_j")
        return MonotonicityCertificate(False, "A_d", None,
                                       reason="product weights with divergent sum of gamma_j")
    return MonotonicityCertificate(None, "A_d", None, reason="A_d undecidable for this family")


@dataclass
class DecayTransfer:
    """Verdicts of the two implications relating decay of gamma and T-up gamma.

    ``forward_hypothesis``: sum (gamma-up_u)^{1/tau} < infinity.
    ``forward_conclusion``: gamma^{1/tau} in S_{d, C^{1/tau}}.
    ``backward_hypothesis``: gamma^{1/tau} in S_{d, sqrt(2) C^{1/tau}}.
    ``backward_conclusion``: same as forward_hypothesis.
    Entries are None when undecided; the backward pair is None when tau < 1.
    """

    tau: float
    forward_hypothesis: Optional[bool]
    forward_conclusion: Optional[bool]
    backward_hypothesis: Optional[bool]
    backward_conclusion: Optional[bool]

    @property
    def implies_forward(self) -> Optional[bool]:
        if self.forward_hypothesis is False:
            return True  # vacuous
        if self.forward_hypothesis is None or self.forward_conclusion is None:
            return None
        return self.forward_conclusion

    @property
    def implies_backward(self) -> Optional[bool]:
        if self.backward_hypothesis is None:
            return None
        if self.backward_hypothesis is False:
            return True
        return self.backward_conclusion


def decay_transfer_bounds(spec, params, tau: float) -> DecayTransfer:
    from . import families as fam

    params = _as_params(params)
    if not tau > 0:
        raise ValueError("tau must be positive")
    powered = fam.power_spec(spec, 1 / tau)
    fwd_concl = summability(powered, TransformParams(params.C ** (1 / tau))).is_summable
    up_sum = fam.up_power_summable(spec, params, tau)
    back_hyp = back_concl = None
    if tau >= 1:
        back_hyp = summability(powered, TransformParams(math.sqrt(2) * params.C ** (1 / tau))).is_summable
        back_concl = up_sum
    return DecayTransfer(tau, up_sum, fwd_concl, back_hyp, back_concl)


def auxiliary_identity_sides(rho: SetFunction, p: int, q: int, u: int) -> tuple:
    """Both sides of the identity

        sum_{v in U_q, u <= v} sum_{w in U_p, v <= w} (-1)^{|v|} rho_w
            = (-1)^{|u|} sum_{v subset [p] minus [q]} rho_{u + v}

    for u a subset of [q], q <= p <= rho.d; evaluated by brute force.
    """
    if not 0 <= q <= p <= rho.d:
        raise DimensionError("need q <= p <= d")
    u = operator.index(u)
    if u >> q:
        raise DimensionError("u must be a subset of [q]")
    zero = Fraction(0) if rho.exact else 0.0
    lhs = zero
    for v in range(1 << q):
        if v & u != u:
            continue
        sign = -1 if lattice.popcount(v) & 1 else 1
        for w in range(1 << p):
            if w & v == v:
                lhs += sign * rho.values[w]
    outside = ((1 << p) - 1) ^ ((1 << q) - 1)
    rhs = zero
    for v in lattice.submasks(outside):
        rhs += rho.values[u | v]
    if lattice.popcount(u) & 1:
        rhs = -rhs
    return lhs, rhs
