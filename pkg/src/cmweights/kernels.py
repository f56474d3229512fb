"""Univariate kernels, weighted superposition kernels and embedding checks.

A superposition kernel is M(x, y) = sum_u w_u prod_{j in u} k(x_j, y_j).
With gamma-up = T-up gamma, the kernel M-up = sum_v gamma-up_v prod_{j in v} l
rearranges to sum_u gamma_u prod_{j in u} C^2 (1 + l), so H(M) sits
contractively in H(M-up) as soon as H(k) embeds in H(1 + l) with norm <= C.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.integrate
import scipy.linalg

from . import families as fam
from . import lattice
from .errors import DimensionError, NotSummableError, NumericalError, UndecidableError
from .transforms import TransformParams, summability, t_up
from .weight_core import SetFunction

EIG_TOL_REL = 1e-8
JITTER_REL = 1e-12
PAIR_CHUNK = 4096


@dataclass(frozen=True)
class KernelSpec:
    """Reproducing kernel on an interval with optional closed-form integrals.

    ``I1(x) = int_0^1 k(x, y) dy``, ``I2 = int int k``; ``inf_diag = inf_x k(x, x)``.
    """

    name: str
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    I1: Optional[Callable[[np.ndarray], np.ndarray]] = None
    I2: Optional[float] = None
    inf_diag: float = 0.0
    domain: tuple = (0.0, 1.0)

    def __call__(self, x, y):
        return self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def gram(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return self(p[:, None], p[None, :])

    @property
    def has_integrals(self) -> bool:
        return self.I1 is not None and self.I2 is not None


def _min(x, y):
    return np.minimum(x, y)


def _anova(x, y):
    return np.minimum(x, y) - x - y + 0.5 * (x * x + y * y) + 1.0 / 3.0


def _indicator(x, y):
    return ((x == y) & (x > 0)).astype(float)


MIN_KERNEL = KernelSpec("min", _min, I1=lambda x: x - 0.5 * np.asarray(x) ** 2, I2=1.0 / 3.0, inf_diag=0.0)
ANOVA_KERNEL = KernelSpec("anova", _anova, I1=lambda x: np.zeros_like(np.asarray(x, dtype=float)), I2=0.0,
                          inf_diag=1.0 / 12.0)
INDICATOR_KERNEL = KernelSpec("indicator", _indicator, I1=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                              I2=0.0, inf_diag=0.0)


def builtin_kernels() -> dict:
    return {k.name: k for k in (MIN_KERNEL, ANOVA_KERNEL, INDICATOR_KERNEL)}


def get_kernel(name: str) -> KernelSpec:
    try:
        return builtin_kernels()[name]
    except KeyError:
        raise KeyError(f"unknown kernel {name!r}; choose from {sorted(builtin_kernels())}") from None


def one_plus(k: KernelSpec, scale: float = 1.0) -> KernelSpec:
    """The kernel scale * (1 + k)."""
    I1 = None if k.I1 is None else (lambda x: scale * (1.0 + k.I1(x)))
    I2 = None if k.I2 is None else scale * (1.0 + k.I2)
    return KernelSpec(f"{scale:g}*(1+{k.name})", lambda x, y: scale * (1.0 + k.func(x, y)), I1, I2,
                      scale * (1.0 + k.inf_diag), k.domain)


def verify_anova_kernel(n_samples: int = 7, tol: float = 1e-10) -> bool:
    """Quadrature check of the ANOVA kernel.

    Confirms int_0^1 k(x, y) dx = 0 and, for zero-mean polynomials f, the
    reproducing property <k(., y), f> = int d/dx k(x, y) f'(x) dx = f(y) in
    the norm ||f||^2 = (int f)^2 + int f'^2.
    """
    tests = [
        (lambda x: x * x - 1.0 / 3.0, lambda x: 2.0 * x),
        (lambda x: x ** 3 - 0.25, lambda x: 3.0 * x * x),
        (lambda x: x - 0.5, lambda x: 1.0 + 0.0 * x),
    ]
    for y in np.linspace(0.05, 0.95, n_samples):
        mean, _ = scipy.integrate.quad(lambda x: float(_anova(x, y)), 0, 1, points=[y], epsabs=1e-13)
        if abs(mean) > tol:
            return False
        for f, df in tests:
            def integrand(x):
                dk = (1.0 if x < y else 0.0) - 1.0 + x
                return dk * df(x)
            val, _ = scipy.integrate.quad(integrand, 0, 1, points=[y], epsabs=1e-13)
            if abs(val - f(y)) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# points of infinitely many coordinates


@dataclass(frozen=True)
class InfinitePoint:
    """x = (prefix_1, ..., prefix_n, tail, tail, ...)."""

    prefix: tuple
    tail: float

    def coord(self, j: int) -> float:
        return self.prefix[j - 1] if j <= len(self.prefix) else self.tail


# ---------------------------------------------------------------------------
# superposition kernels


class SuperpositionKernel:
    """M(x, y) = sum_u w_u prod_{j in u} k(x_j, y_j).

    ``weights`` is a dense table or a structured spec.  For d = infinity points
    are finite sections: coordinates past the given ones equal ``anchor``.
    """

    def __init__(self, weights, univariate: KernelSpec, d=None, anchor: float = 0.0):
        self.weights = weights
        self.k = univariate
        self.anchor = float(anchor)
        if isinstance(weights, SetFunction):
            self.d = weights.d if d is None else int(d)
            if self.d != weights.d:
                raise DimensionError("dimension mismatch between kernel and weight table")
        else:
            self.d = weights.d if d is None else d

    # weighted factor sums: sum_u w_u prod_{j in u} z_j for each row of Z
    def factor_sum(self, Z: np.ndarray) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        n = Z.shape[1]
        w = self.weights
        if isinstance(w, SetFunction):
            return _dense_factor_sum(np.asarray(w.values, dtype=float), Z)
        if isinstance(w, fam.Product):
            return np.prod(1.0 + w.seq.values(n) * Z, axis=1) * self._product_tail(w, n)
        if isinstance(w, fam.POD):
            self._finite_only()
            gam = np.array([w.order.value(m) for m in range(n + 1)])
            return _esp_rows(w.seq.values(n) * Z, n) @ gam
        if isinstance(w, fam.FiniteOrder) and w.seq is not None:
            self._finite_only()
            gam = np.array([w.order_value(m) for m in range(min(w.order, n) + 1)])
            return _esp_rows(w.seq.values(n) * Z, len(gam) - 1) @ gam
        if isinstance(w, (fam.FinSupport, fam.FiniteOrder)):
            entries = w.entries.items()
        elif isinstance(w, fam.NestedBlocks):
            if self.anchor_diag != 0:
                raise UndecidableError("nested-block weights need an anchor with k(a, a) = 0")
            entries = [(frozenset(range(1, 2 ** j + 1)), 2.0 ** -j) for j in range(1, max(n, 1).bit_length())]
        else:
            raise TypeError(f"unsupported weights {type(w).__name__}")
        out = np.zeros(len(Z))
        for u, v in entries:
            inside = [j - 1 for j in u if j <= n]
            out += v * np.prod(Z[:, inside], axis=1) * self.anchor_diag ** (len(u) - len(inside))
        return out

    @property
    def anchor_diag(self) -> float:
        return float(self.k(self.anchor, self.anchor))

    def _finite_only(self):
        if self.d == fam.INF:
            raise UndecidableError("d = infinity superposition needs product or finitely supported weights")

    def _product_tail(self, w, n: int) -> float:
        """prod_{j > n} (1 + gamma_j k(a, a)) for the anchored coordinates."""
        if self.d != fam.INF:
            if n != self.d:
                raise DimensionError(f"points need {self.d} coordinates, got {n}")
            return 1.0
        kd = self.anchor_diag
        if kd == 0:
            return 1.0
        cv = fam._log_product(fam._Shifted(w.seq, n), kd, +1, fam.INF)
        if math.isinf(cv.hi) or cv.rel_width > fam.TARGET_REL_WIDTH:
            raise UndecidableError("tail product could not be certified")
        return cv.value

    def _coords(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.d != fam.INF and X.shape[1] != self.d:
            raise DimensionError(f"points need {self.d} coordinates, got {X.shape[1]}")
        return X

    def __call__(self, x, y) -> float:
        return float(self.pairs(np.atleast_2d(x), np.atleast_2d(y))[0])

    def pairs(self, X, Y) -> np.ndarray:
        X, Y = self._coords(X), self._coords(Y)
        return self.factor_sum(self.k(X, Y))

    def gram(self, X, Y=None) -> np.ndarray:
        X = self._coords(X)
        Y = X if Y is None else self._coords(Y)
        n, m = len(X), len(Y)
        out = np.empty(n * m)
        ii, jj = np.meshgrid(np.arange(n), np.arange(m), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        for s in range(0, n * m, PAIR_CHUNK):
            a, b = ii[s:s + PAIR_CHUNK], jj[s:s + PAIR_CHUNK]
            out[s:s + PAIR_CHUNK] = self.factor_sum(self.k(X[a], Y[b]))
        return out.reshape(n, m)

    def diag(self, X) -> np.ndarray:
        X = self._coords(X)
        return self.factor_sum(self.k(X, X))

    def single_integrals(self, X) -> np.ndarray:
        """int M(x, y) dy for each row x."""
        if self.k.I1 is None:
            raise ValueError(f"kernel {self.k.name} has no closed-form integrals")
        return self.factor_sum(self.k.I1(self._coords(X)))

    def double_integral(self) -> float:
        if self.k.I2 is None:
            raise ValueError(f"kernel {self.k.name} has no closed-form integrals")
        if self.d == fam.INF:
            raise DimensionError("double integral needs finite d")
        return float(self.factor_sum(np.full((1, int(self.d)), self.k.I2))[0])


def superposition_eval(K: SuperpositionKernel, x, y) -> float:
    """M(x, y); for d = infinity the points are ``InfinitePoint`` sections or prefixes."""
    if isinstance(x, InfinitePoint) or isinstance(y, InfinitePoint):
        if not isinstance(x, InfinitePoint) or not isinstance(y, InfinitePoint) or x.tail != y.tail:
            raise ValueError("infinite points must share the same tail value")
        n = max(len(x.prefix), len(y.prefix))
        K = SuperpositionKernel(K.weights, K.k, K.d, anchor=x.tail)
        x = [x.coord(j) for j in range(1, n + 1)]
        y = [y.coord(j) for j in range(1, n + 1)]
    for p in (x, y):
        if not domain_membership(p, K):
            raise ValueError("point outside the kernel domain")
    return K(x, y)


def _dense_factor_sum(w: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Fold the coordinates of the weight table from the highest bit down."""
    d = lattice.dim_of_length(len(w)) if len(w) > 1 else 0
    if Z.shape[1] != d:
        raise DimensionError("point dimension does not match weight table")
    out = np.empty(len(Z))
    for s in range(0, len(Z), PAIR_CHUNK):
        z = Z[s:s + PAIR_CHUNK]
        S = np.broadcast_to(w, (len(z), len(w)))
        for j in range(d - 1, -1, -1):
            half = 1 << j
            S = S[:, :half] + z[:, j:j + 1] * S[:, half:]
        out[s:s + PAIR_CHUNK] = S[:, 0]
    return out


def _esp_rows(X: np.ndarray, L: int) -> np.ndarray:
    """Row-wise elementary symmetric polynomials e_0..e_L."""
    E = np.zeros((len(X), L + 1))
    E[:, 0] = 1.0
    for j in range(X.shape[1]):
        E[:, 1:] = E[:, 1:] + X[:, j:j + 1] * E[:, :-1]
    return E


def rearranged_up_kernel(gamma: SetFunction, l: KernelSpec, C: float, X, Y) -> np.ndarray:
    """sum_u gamma_u prod_{j in u} C^2 (1 + l(x_j, y_j)), the second route to M-up."""
    return SuperpositionKernel(gamma, one_plus(l, C * C)).pairs(X, Y)


# ---------------------------------------------------------------------------
# domains


def domain_membership(x, K: SuperpositionKernel) -> bool:
    """Whether sum_u w_u prod_{j in u} k(x_j, x_j) is finite."""
    if K.d != fam.INF:
        return True
    w = K.weights
    if not isinstance(x, InfinitePoint):
        x = InfinitePoint(tuple(np.asarray(x, dtype=float)), K.anchor)
    tail_diag = float(K.k(x.tail, x.tail))
    if isinstance(w, fam.FinSupport):
        return True
    if isinstance(w, fam.Product):
        return tail_diag == 0 or w.seq.power_summable(1)
    if isinstance(w, fam.NestedBlocks):
        # term j is 2^-j prod_{i <= 2^j} k(x_i, x_i)
        if any(float(K.k(v, v)) == 0 for v in x.prefix):
            return True
        return tail_diag <= 1
    raise UndecidableError(f"cannot decide the domain for {type(w).__name__} weights")


# ---------------------------------------------------------------------------
# embedding checks


def _jittered(G: np.ndarray) -> np.ndarray:
    n = len(G)
    jitter = JITTER_REL * max(np.trace(G) / n, 1e-300)
    return G + jitter * np.eye(n)


def embedding_norm_lower_bound(k: KernelSpec, l: KernelSpec, points) -> float:
    """Lower bound on the norm of the embedding H(k) -> H(1 + l).

    For f = sum a_i k(., x_i), ||f||_k^2 = a' G_k a and the minimum-norm
    interpolant of its values in H(1 + l) has squared norm
    (G_k a)' G_{1+l}^{-1} (G_k a) <= ||f||_{1+l}^2.  The largest ratio is the
    top eigenvalue of L' G_{1+l}^{-1} L with G_k = L L'.
    """
    pts = np.asarray(points, dtype=float)
    if len(np.unique(pts)) != len(pts):
        raise ValueError("points must be distinct")
    Gk = k.gram(pts)
    Gl = 1.0 + l.gram(pts)
    try:
        L = np.linalg.cholesky(_jittered(Gk))
        cf = scipy.linalg.cho_factor(_jittered(Gl))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Gram matrix singular beyond jitter repair") from exc
    B = L.T @ scipy.linalg.cho_solve(cf, L)
    lam = float(scipy.linalg.eigvalsh(0.5 * (B + B.T))[-1])
    return math.sqrt(max(lam, 0.0))


def converged_norm_lower_bound(k: KernelSpec, l: KernelSpec, rel_change: float = 1e-3,
                               n_start: int = 4, n_max: int = 1024) -> tuple:
    """Double nested equispaced sets {j/n : 1 <= j <= n} until C_lb settles.

    Returns (C_lb, n_used).
    """
    n = n_start
    prev = embedding_norm_lower_bound(k, l, np.arange(1, n + 1) / n)
    while n < n_max:
        n *= 2
        cur = embedding_norm_lower_bound(k, l, np.arange(1, n + 1) / n)
        if abs(cur - prev) <= rel_change * max(cur, 1e-300):
            return cur, n
        prev = cur
    return prev, n


@dataclass
class EmbeddingReport:
    n_points: int
    C: float
    min_eig: float
    max_eig: float
    passed: bool
    C_lb: Optional[float] = None
    tol_rel: float = EIG_TOL_REL
    notes: list = field(default_factory=list)


def _as_table(weights, d: int) -> SetFunction:
    if isinstance(weights, SetFunction):
        return weights
    return fam.truncate_to_table(weights, d)


def verify_embedding(k: KernelSpec, l: KernelSpec, C: float, weights, points, d: Optional[int] = None,
                     C_lb: Optional[float] = None) -> EmbeddingReport:
    """PSD check of Gram(M-up) - Gram(M) on ``points`` (a necessary condition only)."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    d = X.shape[1] if d is None else d
    if not isinstance(weights, SetFunction):
        rep = summability(weights, TransformParams(C))
        if rep.is_summable is not True:
            raise NotSummableError(rep.reason)
    gamma = _as_table(weights, d)
    up = t_up(gamma, TransformParams(C))
    G = SuperpositionKernel(gamma, k).gram(X)
    G_up = SuperpositionKernel(up, l).gram(X)
    D = G_up - G
    eig = scipy.linalg.eigvalsh(0.5 * (D + D.T))
    lo, hi = float(eig[0]), float(eig[-1])
    report = EmbeddingReport(len(X), C, lo, hi, lo >= -EIG_TOL_REL * max(hi, 0.0), C_lb)
    if C_lb is not None and C < C_lb:
        report.notes.append("C is below the empirical embedding-norm lower bound")
    return report


def find_psd_violation(k: KernelSpec, l: KernelSpec, C: float, weights, d: int, seed: int = 0,
                       tries: int = 50, n_points: int = 20) -> Optional[tuple]:
    """Random search for a point set on which Gram(M-up) - Gram(M) is not PSD."""
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        X = rng.random((n_points, d))
        rep = verify_embedding(k, l, C, weights, X, d)
        if not rep.passed:
            return X, rep
    return None
