import math

import numpy as np
import pytest
import scipy.integrate

from cmweights import families as fam
from cmweights import lattice
from cmweights.errors import DimensionError
from cmweights.transforms import t_up, t_up_spec
from cmweights.weight_core import WeightTable

SINH_PI = math.sinh(math.pi) / math.pi


def factorial_pod_total(c, weight=lambda t: 1.0, skip_first=False):
    """sum_n (n + s)! e_n(c / j^2) via the Laplace integral of prod (1 + t c / j^2)."""
    def integrand(t):
        x = math.pi * math.sqrt(c * t)
        prod = math.sinh(x) / x if x > 0 else 1.0
        if skip_first:
            prod /= 1 + t * c
        return math.exp(-t) * weight(t) * prod
    val, _ = scipy.integrate.quad(integrand, 0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400)
    return val


class TestSequences:
    def test_power_law_values(self):
        np.testing.assert_allclose(fam.PowerLaw(2.0, 2.0).values(3), [2.0, 0.5, 2.0 / 9])

    def test_power_sum_zeta(self):
        assert math.pi ** 2 / 6 in fam.power_sum(fam.PowerLaw(1.0, 2.0))

    def test_geometric_sum(self):
        cv = fam.power_sum(fam.Geometric(1.0, 0.5))
        assert cv.lo <= 1.0 <= cv.hi

    def test_power_summable(self):
        seq = fam.PowerLaw(1.0, 2.0)
        assert seq.power_summable(0.6) and not seq.power_summable(0.5)

    def test_explicit_must_be_non_increasing(self):
        with pytest.raises(ValueError):
            fam.Explicit([1, 2])

    def test_tail_bounds_bracket(self):
        seq = fam.PowerLaw(1.0, 2.0)
        lo, hi = seq.tail_bounds(100, 1.0)
        exact = float(np.sum(1.0 / np.arange(101, 10 ** 6) ** 2)) + 1e-6
        assert lo <= exact <= hi


class TestProducts:
    def test_one_plus_sinh(self):
        cv = fam.product_one_plus(fam.Product(fam.PowerLaw(1.0, 2.0)), 1.0)
        assert SINH_PI in cv
        assert cv.rel_width <= 1e-10

    def test_one_minus_sine(self):
        x = 1 / math.sqrt(2)
        cv = fam.product_one_minus(fam.Product(fam.PowerLaw(0.5, 2.0)))
        assert math.sin(math.pi * x) / (math.pi * x) in cv

    def test_one_minus_skip(self):
        x = 1 / math.sqrt(2)
        cv = fam.product_one_minus(fam.Product(fam.PowerLaw(0.5, 2.0)), skip=frozenset({1}))
        assert math.sin(math.pi * x) / (math.pi * x) / 0.5 in cv

    def test_finite_product(self):
        cv = fam.product_one_plus(fam.Product(fam.Explicit([1, 1]), d=2), 1.0)
        assert cv.lo == cv.hi == 4


class TestPOD:
    def test_constant_order_is_a_product(self):
        spec = fam.POD(fam.PowerLaw(1.0, 2.0), fam.OrderConstant(1.0), 0.0, 1.0)
        cv = fam.pod_total(spec, 1.0)
        assert SINH_PI in cv

    def test_factorial_total_against_laplace_integral(self):
        spec = fam.POD(fam.PowerLaw(0.5, 2.0), fam.OrderFactorial(1.0, 1.0), 1.0, 1.0)
        cv = fam.pod_total(spec, 1.0)
        ref = factorial_pod_total(0.5)
        assert cv.lo - 1e-9 * ref <= ref <= cv.hi + 1e-9 * ref
        assert cv.rel_width < 1e-8

    def test_up_entry_against_laplace_integral(self):
        spec = fam.POD(fam.PowerLaw(0.5, 2.0), fam.OrderFactorial(1.0, 1.0), 1.0, 1.0)
        cv = fam.UpEvaluator(spec, 1.0).enclosure({1})
        ref = 0.5 * factorial_pod_total(0.5, weight=lambda t: t, skip_first=True)
        assert cv.lo - 1e-9 * ref <= ref <= cv.hi + 1e-9 * ref

    def test_order_bound_enforced(self):
        with pytest.raises(ValueError):
            fam.POD(fam.PowerLaw(1.0, 2.0), fam.OrderFactorial(2.0, 1.0), 1.0, 1.0)

    def test_finite_d_up_matches_dense(self):
        spec = fam.POD(fam.PowerLaw(1.0, 3.0), fam.OrderFactorial(1.0, 1.0), 1.0, 1.0, d=6)
        ev = fam.UpEvaluator(spec, 1.3)
        dense = t_up(fam.truncate_to_table(spec, 6), 1.3)
        for u in range(64):
            assert math.isclose(ev.entry(lattice.members(u)), dense.values[u], rel_tol=1e-12)

    def test_truncation_is_restriction(self):
        spec = fam.POD(fam.PowerLaw(1.0, 3.0), fam.OrderFactorial(1.0, 1.0), 1.0, 1.0)
        t = fam.truncate_to_table(spec, 4)
        for u in range(16):
            assert math.isclose(t.values[u], spec.entry(lattice.members(u)), rel_tol=1e-14)

    def test_one_coordinate_bounds(self):
        spec = fam.POD(fam.PowerLaw(1.0, 3.0), fam.OrderFactorial(1.0, 1.0), 1.0, 1.0)
        for j in range(1, 7):
            lo, hi = fam.pod_onecoordinate_sum_bounds(spec, 1.0, j)
            t = fam.truncate_to_table(spec, j)
            actual = sum(t.values[u] for u in range(1 << j) if u >> (j - 1) & 1)
            assert lo <= actual * (1 + 1e-12) and actual <= hi


class TestMoebiusEvaluators:
    def test_monotone_limit_matches_product_formula(self):
        pod = fam.POD(fam.PowerLaw(0.5, 2.0), fam.OrderConstant(1.0), 0.0, 1.0)
        prod = fam.Product(fam.PowerLaw(0.5, 2.0))
        lim = fam.MonotoneLimitDown(pod, 1.0, rel_tol=1e-9)
        ref = fam.ProductDownEvaluator(prod, 1.0)
        for u in ({1}, {2}, {1, 3}):
            assert math.isclose(lim.entry(u), ref.entry(u), rel_tol=1e-3)

    def test_product_delta_closed_form(self):
        spec = fam.Product(fam.PowerLaw(0.5, 1.0), d=5)
        t = fam.truncate_to_table(spec, 5)
        from cmweights.weight_core import delta_at
        for u, v in ((0, 0b11), (0b1, 0b110), (0b10100, 0b01011)):
            got = fam.product_delta_closed_form(spec, lattice.members(v), lattice.members(u))
            assert math.isclose(got, delta_at(t, v, u), rel_tol=1e-12)


class TestSandwich:
    def test_product_up(self):
        spec = fam.Product(fam.PowerLaw(0.7, 2.0), d=8)
        sw = fam.sandwich_up(spec, 1.2)
        up = t_up(fam.truncate_to_table(spec, 8), 1.2)
        lo = fam.truncate_to_table(sw.lower, 8).values
        hi = fam.truncate_to_table(sw.upper, 8).values
        assert np.all(sw.lower_factor.lo * lo <= up.values * (1 + 1e-12))
        assert np.all(up.values <= sw.upper_factor.hi * hi * (1 + 1e-12))

    def test_pod_up(self):
        spec = fam.POD(fam.PowerLaw(1.0, 3.0), fam.OrderFactorial(1.0, 1.0), 1.0, 1.0, d=6)
        sw = fam.sandwich_up(spec, 1.0)
        up = t_up(fam.truncate_to_table(spec, 6), 1.0)
        lo = fam.truncate_to_table(sw.lower, 6).values
        hi = fam.truncate_to_table(sw.upper, 6).values
        assert np.all(lo <= up.values * (1 + 1e-12))
        assert np.all(up.values <= sw.upper_factor.hi * hi * (1 + 1e-12))

    def test_product_down(self):
        from cmweights.transforms import t_down
        spec = fam.Product(fam.PowerLaw(0.7, 2.0), d=8)
        sw = fam.sandwich_down(spec, 0.8)
        down = t_down(fam.truncate_to_table(spec, 8), 0.8).values
        z = fam.truncate_to_table(sw.upper, 8).values
        assert np.all(sw.lower_factor.lo * z <= down * (1 + 1e-12) + 1e-15)
        assert np.all(down <= z * (1 + 1e-12))


class TestDecay:
    def test_product(self):
        spec = fam.Product(fam.PowerLaw(1.0, 2.0))
        assert fam.decay(spec).value == 2
        assert fam.decay_after_up(spec, 1.0).value == 2

    def test_pod(self):
        spec = fam.POD(fam.PowerLaw(1.0, 3.0), fam.OrderFactorial(1.0, 1.0), 1.0, 1.0)
        assert fam.decay(spec).value == 3
        assert fam.decay_after_up(spec, 1.0).value == 3

    def test_finite_support(self):
        assert fam.decay(fam.FinSupport({frozenset({1}): 1.0})).kind == "infinity"

    def test_product_up_is_pod(self):
        up = t_up_spec(fam.Product(fam.PowerLaw(1.0, 2.0)), 1.0)
        assert isinstance(up, fam.POD)
        assert fam.decay(up).value == 2


class TestExtremal:
    def test_bound_formula(self):
        assert fam.extremal_lower_bound(3, 1.0) == 19
        assert fam.extremal_lower_bound(5, 1.0) > 1e6

    def test_dense_sum_dominates_bound(self):
        for j in (1, 2, 3):
            assert fam.extremal_up_power_sum(j, 1.0) >= fam.extremal_lower_bound(j, 1.0)
        assert fam.extremal_up_power_sum(3, 1.0) == 38

    def test_level_limit(self):
        with pytest.raises(DimensionError):
            fam.extremal_example(5)

    def test_truncated_decay_after_up_unknown(self):
        assert fam.decay_after_up(fam.extremal_example(2), 1.0).kind == "unknown"


class TestRecognizer:
    def test_accepts_pod(self):
        assert fam.is_pod(WeightTable(3, [1, 9, 6, 24, 3, 12, 8, 30]))

    def test_rejects_transform(self):
        up = t_up(WeightTable(3, [1, 9, 6, 24, 3, 12, 8, 30]), 1.0)
        assert not fam.is_pod(up)
