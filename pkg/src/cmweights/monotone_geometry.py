"""Geometry of the cone of completely monotone weights.

Maximal completely monotone minorants via linear programming, the hypercube
view of weights, the alternative difference operator Delta', and the
measure / distribution-function reading of T-up and T-down.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.optimize
import scipy.sparse

from . import lattice, simplex
from .errors import DimensionError, NumericalError
from .transforms import TransformParams, t_down, t_up
from .weight_core import SetFunction, WeightTable, check_completely_monotone, delta_at

MINORANT_MAX_D = 12
EXACT_MAX_D = 5
HEADROOM_TOL = 1e-9
HYPERCUBE_MAX_D = 4
DELTA_PRIME_MAX_D = 8
PER_COORDINATE_MAX_D = 6
_HIGHS_TIGHT = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}

_ONE = TransformParams(1)


@dataclass
class MinorantResult:
    minorant: WeightTable
    objective: float
    maximal: bool
    headroom: SetFunction
    method: str


def _containment_matrix(d: int):
    """Sparse 0/1 matrix with entry (u, v) = 1 iff u is a subset of v."""
    n = 1 << d
    rows, cols = [], []
    for v in range(n):
        for u in lattice.submasks(v):
            rows.append(u)
            cols.append(v)
    return scipy.sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


def _moebius_matrix(d: int):
    """Sparse matrix of T-down with C = 1: entry (u, v) = (-1)^{|v|-|u|} for u subset v."""
    n = 1 << d
    rows, cols, vals = [], [], []
    for v in range(n):
        for u in lattice.submasks(v):
            rows.append(u)
            cols.append(v)
            vals.append(-1.0 if lattice.popcount(v ^ u) & 1 else 1.0)
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _dense_rows(matrix) -> list:
    return [[int(v) for v in row] for row in matrix.toarray()]


def _use_exact(gamma: SetFunction, exact) -> bool:
    if exact is None:
        return gamma.exact or gamma.d <= EXACT_MAX_D
    return bool(exact)


def maximal_monotone_minorant(gamma: WeightTable, exact=None) -> MinorantResult:
    """A maximal element of {g in M_d : g <= gamma}.

    Solved in Moebius coordinates x = T-down g >= 0: maximize the total mass
    sum_v 2^{|v|} x_v of g = T-up x subject to T-up x <= gamma.  A maximizer of
    the total is maximal for the entrywise order.
    """
    d = gamma.d
    if d > MINORANT_MAX_D:
        raise DimensionError(f"minorant LP limited to d <= {MINORANT_MAX_D}")
    if not gamma.is_nonnegative():
        raise ValueError("gamma must be non-negative")
    cert = check_completely_monotone(gamma)
    if cert.is_member:
        table = WeightTable(d, gamma.values, gamma.exact)
        zero = SetFunction.zeros(d, gamma.exact)
        return MinorantResult(table, sum(gamma.values), True, zero, "input already monotone")

    n = 1 << d
    pc = lattice.popcounts(d)
    A = _containment_matrix(d)
    if _use_exact(gamma, exact):
        vals = [Fraction(v) for v in gamma.values]
        sol = simplex.maximize([2 ** int(k) for k in pc], _dense_rows(A), vals)
        x = np.array(sol.x, dtype=object)
        g = lattice.superset_zeta(x.copy())
        minorant = WeightTable(d, g, exact=True)
        method = "exact simplex"
        if not gamma.exact:
            minorant = WeightTable(d, [float(v) for v in g])
    else:
        vals = np.asarray(gamma.values, dtype=float)
        res = scipy.optimize.linprog(-(2.0 ** pc), A_ub=A, b_ub=vals, bounds=(0, None), method="highs",
                                     options=_HIGHS_TIGHT)
        if res.status != 0:
            raise NumericalError(f"LP solver failed: {res.message}")
        minorant = _repair(res.x, vals, d)
        method = "HiGHS"
    ok, headroom = verify_maximal(minorant, gamma)
    return MinorantResult(minorant, sum(minorant.values), ok, headroom, method)


def _repair(x: np.ndarray, gamma: np.ndarray, d: int) -> WeightTable:
    """Project an approximate LP solution back into {g in M_d : g <= gamma}."""
    x = np.maximum(x, 0.0)
    for u in np.flatnonzero(gamma == 0):
        # every v containing u must carry no mass
        sup = np.flatnonzero((np.arange(1 << d) & u) == u)
        x[sup] = 0.0
    g = lattice.superset_zeta(x.copy())
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(g > 0, gamma / g, np.inf)
    s = min(1.0, float(ratio.min())) * (1 - 4e-16 * d)
    if s < 1:
        g = lattice.superset_zeta(x * s)
    return WeightTable(d, np.minimum(g, gamma) if np.all(g <= gamma * (1 + 1e-15)) else g)


def verify_maximal(candidate: SetFunction, gamma: SetFunction, exact=None, tol: float = HEADROOM_TOL):
    """Whether no coordinate of ``candidate`` can grow while staying in the feasible set.

    Returns (maximal, headroom) with headroom_u = max z_u subject to
    candidate + z in M_d and 0 <= z <= gamma - candidate.  One program
    maximizing sum_u z_u is solved first; when its optimum is 0 every headroom
    is 0 and the per-coordinate programs are skipped.
    """
    d = gamma.d
    if candidate.d != d:
        raise DimensionError("dimension mismatch")
    use_exact = _use_exact(gamma, exact) and d <= EXACT_MAX_D
    ctol = 0 if use_exact else gamma.tolerance()
    if not all(c <= g + ctol for c, g in zip(candidate.values, gamma.values)):
        raise ValueError("candidate exceeds gamma")
    if not check_completely_monotone(candidate).is_member:
        raise ValueError("candidate is not completely monotone")
    n = 1 << d
    M = _moebius_matrix(d)
    if use_exact:
        c = [Fraction(v) for v in candidate.values]
        slack = [Fraction(g) - v for g, v in zip(gamma.values, c)]
        down = t_down(SetFunction(d, c, exact=True), _ONE).values
        A = [[-v for v in row] for row in _dense_rows(M)] + [[int(i == j) for j in range(n)] for i in range(n)]
        b = list(down) + slack
        limit = 0 if (gamma.exact and candidate.exact) else tol * max(float(gamma.max_abs()), 1e-300)
        head = [Fraction(0)] * n
        if simplex.maximize([1] * n, A, b).objective > limit:
            for u in range(n):
                if slack[u] != 0:
                    obj = [int(j == u) for j in range(n)]
                    head[u] = simplex.maximize(obj, A, b).objective
        headroom = SetFunction(d, head, exact=True)
        return all(h <= limit for h in head), headroom
    c = np.asarray(candidate.values, dtype=float)
    slack = np.maximum(np.asarray(gamma.values, dtype=float) - c, 0.0)
    down = np.maximum(np.asarray(t_down(SetFunction(d, c), _ONE).values, dtype=float), 0.0)
    scale = max(float(np.max(np.abs(gamma.values))), 1e-300)
    bounds = list(zip(np.zeros(n), slack))

    def solve(obj):
        res = scipy.optimize.linprog(-obj, A_ub=-M, b_ub=down, bounds=bounds, method="highs",
                                     options=_HIGHS_TIGHT)
        if res.status != 0:
            raise NumericalError(f"LP solver failed: {res.message}")
        return max(-res.fun, 0.0), res.x

    total, z = solve(np.ones(n))
    head = np.zeros(n)
    if total > tol * scale:
        if d <= PER_COORDINATE_MAX_D:
            for u in range(n):
                if slack[u] > tol * scale:
                    head[u] = solve(np.eye(n)[u])[0]
        else:
            head = np.maximum(z, 0.0)  # one feasible joint increase
    headroom = SetFunction(d, head)
    return bool(np.all(head <= tol * scale)), headroom


# ---------------------------------------------------------------------------
# hypercube view


@dataclass
class HypercubeFunction:
    """A function on {0,1}^d; the point x is encoded by the bitmask of its ones."""

    d: int
    values: np.ndarray

    @classmethod
    def from_weights(cls, gamma: SetFunction) -> "HypercubeFunction":
        return cls(gamma.d, np.array(gamma.values))

    def __call__(self, x: Sequence[int]):
        return self.values[sum(1 << j for j, xj in enumerate(x) if xj)]

    def to_weights(self) -> SetFunction:
        return SetFunction(self.d, self.values, exact=self.values.dtype == object)


def hypercube_extension_check(gamma: SetFunction) -> bool:
    """Complete monotone decrease of the hypercube function attached to gamma.

    Tests f >= 0 and sum_{w subset v} (-1)^{|w|} f(x_{-w} : y_w) >= 0 for all
    non-empty v and all x, y in {0,1}^d with x_j <= y_j for j in v.
    """
    d = gamma.d
    if d > HYPERCUBE_MAX_D:
        raise DimensionError(f"hypercube check limited to d <= {HYPERCUBE_MAX_D}")
    f = HypercubeFunction.from_weights(gamma).values
    tol = gamma.tolerance()
    if not all(v >= -tol for v in f):
        return False
    n = 1 << d
    xs, ys = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    xs, ys = xs.ravel(), ys.ravel()
    for v in range(1, n):
        ok = (xs & ~ys & v) == 0
        x, y = xs[ok], ys[ok]
        total = None
        for w in lattice.submasks(v):
            term = f[(x & ~w) | (y & w)]
            if lattice.popcount(w) & 1:
                term = -term
            total = term if total is None else total + term
        if any(t < -tol for t in total):
            return False
    return True


def delta_prime_equivalence(gamma: SetFunction, coords: Sequence[int], u) -> tuple:
    """Both sides of (Delta_v gamma)_u = (-1)^n (Delta'_{s_n} ... Delta'_{s_1} gamma)_u.

    ``coords`` lists the distinct 1-based elements s_1, ..., s_n of v in the
    order of application; (Delta'_s gamma)_u = gamma_{u+s} - gamma_u.
    """
    d = gamma.d
    if d > DELTA_PRIME_MAX_D:
        raise DimensionError(f"limited to d <= {DELTA_PRIME_MAX_D}")
    coords = list(coords)
    if len(set(coords)) != len(coords):
        raise ValueError("coordinates in the composition must be distinct")
    v = lattice.mask_of(coords)
    if v >> d:
        raise DimensionError("coordinate outside [d]")
    u = int(u)
    lhs = delta_at(gamma, v, u)
    idx = np.arange(1 << d)
    tab = gamma.copy_values()
    for s in coords:
        bit = 1 << (s - 1)
        tab = tab[idx | bit] - tab
    rhs = tab[u] if len(coords) % 2 == 0 else -tab[u]
    return lhs, rhs


def singleton_chain_check(gamma: SetFunction) -> bool:
    """Sign condition (-1)^n Delta'_{s_n} ... Delta'_{s_1} gamma >= 0 over all chains of distinct singletons.

    The composition does not depend on the order, so one increasing chain per
    set of coordinates covers every permutation.
    """
    d = gamma.d
    tol = gamma.tolerance()
    idx = np.arange(1 << d)
    for v in range(1 << d):
        tab = gamma.copy_values()
        for s in lattice.members(v):
            bit = 1 << (s - 1)
            tab = tab[idx | bit] - tab
        sign = -1 if lattice.popcount(v) & 1 else 1
        if any(sign * t < -tol for t in tab):
            return False
    return True


# ---------------------------------------------------------------------------
# measure view


@dataclass
class MeasureViews:
    density: SetFunction
    cdf: SetFunction

    def density_from_cdf(self) -> SetFunction:
        return t_down(self.cdf, _ONE)


def measure_views(gamma: WeightTable) -> MeasureViews:
    """mu({u}) = gamma_u; cdf_u = mu({w : u subset w}) = (T-up gamma)_u with C = 1."""
    return MeasureViews(gamma, t_up(gamma, _ONE))
