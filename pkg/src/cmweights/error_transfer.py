"""Worst-case integration error and the transfer of error bounds between spaces.

Upper route: H(M^{gamma,k}) sits contractively in H(M^{gamma-up,l}), so any
algorithm's error in the original space is at most its error in the larger one.
Lower route: a monotone minorant gamma* <= gamma gives gamma*-down = T-down gamma*
and H(M^{gamma*-down,l}) is contained in H(M^{gamma,k}), so errors there are
lower bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import families as fam
from .errors import DimensionError, NotSummableError, NumericalError
from .kernels import KernelSpec, SuperpositionKernel
from .monotone_geometry import maximal_monotone_minorant
from .points import PointSet, make_points
from .transforms import TransformParams, summability, t_down, t_up
from .weight_core import SetFunction, WeightTable, check_completely_monotone

NEG_WCE_TOL = 1e-10
ORDER_SLACK = 1e-10

__all__ = ["PointSet", "make_points", "wce_integration", "wce_squared", "transfer_upper",
           "transfer_lower", "full_transfer", "TransferReport"]


def wce_squared(Q: PointSet, K: SuperpositionKernel) -> float:
    """Squared worst-case error of the equal-weight rule on Q, before clamping."""
    X = Q.nodes
    n = len(X)
    double = K.double_integral()
    single = K.single_integrals(X).sum()
    gram = K.gram(X).sum()
    return double - 2.0 * single / n + gram / (n * n)


def wce_integration(Q: PointSet, K: SuperpositionKernel) -> float:
    e2 = wce_squared(Q, K)
    if e2 < -NEG_WCE_TOL:
        raise NumericalError(f"negative squared worst-case error {e2:.3e}")
    return math.sqrt(max(e2, 0.0))


def _table(gamma, d: int) -> SetFunction:
    if isinstance(gamma, SetFunction):
        if gamma.d != d:
            raise DimensionError(f"weight table has d={gamma.d}, points have d={d}")
        return gamma.to_float()
    if gamma.is_finite_dim and gamma.d != d:
        raise DimensionError(f"weights have d={gamma.d}, points have d={d}")
    return fam.truncate_to_table(gamma, d)


@dataclass
class TransferReport:
    n: int
    d: int
    wce_K: float
    wce_up: Optional[float] = None
    wce_down: Optional[float] = None
    C_up: Optional[float] = None
    C_down: Optional[float] = None
    gamma: Optional[SetFunction] = None
    gamma_up: Optional[SetFunction] = None
    gamma_star: Optional[SetFunction] = None
    gamma_star_down: Optional[SetFunction] = None
    minorant: str = ""
    notes: list = field(default_factory=list)

    @property
    def upper_ok(self) -> Optional[bool]:
        if self.wce_up is None:
            return None
        return self.wce_K <= self.wce_up + ORDER_SLACK

    @property
    def lower_ok(self) -> Optional[bool]:
        if self.wce_down is None:
            return None
        return self.wce_down <= self.wce_K + ORDER_SLACK

    @property
    def ordering_ok(self) -> bool:
        return self.upper_ok is not False and self.lower_ok is not False

    def merge(self, other: "TransferReport") -> "TransferReport":
        out = TransferReport(self.n, self.d, self.wce_K)
        for name in ("wce_up", "C_up", "gamma_up", "wce_down", "C_down", "gamma_star", "gamma_star_down"):
            setattr(out, name, getattr(self, name) if getattr(self, name) is not None else getattr(other, name))
        out.gamma = self.gamma
        out.minorant = self.minorant or other.minorant
        out.notes = self.notes + other.notes
        return out


def transfer_upper(Q: PointSet, gamma, k: KernelSpec, l: KernelSpec, C_up: float) -> TransferReport:
    if not isinstance(gamma, SetFunction):
        rep = summability(gamma, TransformParams(C_up))
        if rep.is_summable is not True:
            raise NotSummableError(rep.reason)
    table = _table(gamma, Q.d)
    up = t_up(table, TransformParams(C_up))
    return TransferReport(
        Q.n, Q.d,
        wce_K=wce_integration(Q, SuperpositionKernel(table, k)),
        wce_up=wce_integration(Q, SuperpositionKernel(up, l)),
        C_up=C_up, gamma=table, gamma_up=up,
    )


def monotone_minorant(gamma, d: int) -> tuple:
    """(gamma*, description) with gamma* in M_d and gamma* <= gamma."""
    if isinstance(gamma, fam.Product):
        g = gamma.seq.values(d)
        clipped = fam.Product(fam.Explicit(np.minimum(g, 1.0)), d)
        how = "identity" if np.all(g <= 1.0) else "product clipped at 1"
        return fam.truncate_to_table(clipped, d), how
    table = _table(gamma, d)
    if check_completely_monotone(table).is_member:
        return table, "identity"
    res = maximal_monotone_minorant(table)
    return res.minorant.to_float(), f"maximal minorant ({res.method}, objective {float(res.objective):g})"


def transfer_lower(Q: PointSet, gamma, k: KernelSpec, l: KernelSpec, C_down: float) -> TransferReport:
    table = _table(gamma, Q.d)
    star, how = monotone_minorant(gamma, Q.d)
    down = t_down(star, TransformParams(C_down))
    # T-down of a monotone table is non-negative up to rounding
    down = WeightTable(down.d, np.maximum(np.asarray(down.values, dtype=float), 0.0))
    report = TransferReport(
        Q.n, Q.d,
        wce_K=wce_integration(Q, SuperpositionKernel(table, k)),
        wce_down=wce_integration(Q, SuperpositionKernel(down, l)),
        C_down=C_down, gamma=table, gamma_star=star, gamma_star_down=down, minorant=how,
    )
    if star.max_abs() == 0:
        report.notes.append("monotone minorant is zero; the lower bound is trivially 0")
    return report


def full_transfer(Q: PointSet, gamma, k: KernelSpec, l: KernelSpec, C_up: float, C_down: float) -> TransferReport:
    return transfer_upper(Q, gamma, k, l, C_up).merge(transfer_lower(Q, gamma, k, l, C_down))
