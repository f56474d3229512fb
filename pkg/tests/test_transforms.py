import math
from fractions import Fraction

import numpy as np
import pytest

from cmweights import families as fam
from cmweights import lattice
from cmweights.errors import NotMonotoneError, NotSummableError, NumericalError
from cmweights.transforms import (TransformParams, auxiliary_identity_sides, decay_transfer_bounds,
                                  membership_A_d, roundtrip_down_up, summability, t_down, t_down_naive,
                                  t_down_spec, t_up, t_up_naive, t_up_spec)
from cmweights.weight_core import SetFunction, WeightTable

POD_EXAMPLE = [1, 9, 6, 24, 3, 12, 8, 30]


def random_table(rng, d, exact=False):
    vals = rng.integers(0, 10, 1 << d)
    return WeightTable(d, vals.astype(object) if exact else vals.astype(float), exact=exact)


class TestDense:
    def test_pod_example_values(self):
        up = t_up(WeightTable(3, POD_EXAMPLE, exact=True), 1)
        got = {lattice.format_subset(u): up.values[u] for u in range(8)}
        assert (got["{2}"], got["{3}"], got["{1,2}"], got["{1,3}"]) == (68, 53, 54, 42)
        assert Fraction(54, 68) != Fraction(42, 53)

    def test_square_example_down(self):
        down = t_down(WeightTable(2, [5, 5, 3, 1], exact=True), 1)
        assert list(down.values) == [-2, 4, 2, 1]

    def test_eta_down(self):
        down = t_down(WeightTable(2, [5, 5, 1, 1], exact=True), 1)
        assert list(down.values) == [0, 4, 0, 1]

    @pytest.mark.parametrize("C", [0.5, 1.0, 2.0])
    def test_fast_matches_naive(self, C):
        rng = np.random.default_rng(11)
        for d in range(1, 6):
            g = random_table(rng, d)
            np.testing.assert_allclose(t_up(g, C).values, t_up_naive(g, C).values, rtol=1e-12)
            np.testing.assert_allclose(t_down(g, C).values, t_down_naive(g, C).values, rtol=1e-12, atol=1e-9)

    def test_scaling_rule(self):
        g = WeightTable(1, [0.0, 1.0])
        np.testing.assert_allclose(t_up(g, 2.0).values, [4.0, 4.0])
        np.testing.assert_allclose(t_down(WeightTable(1, [4.0, 4.0]), 2.0).values, [0.0, 1.0])

    def test_exact_roundtrip(self):
        rng = np.random.default_rng(5)
        g = random_table(rng, 6, exact=True)
        for C in (Fraction(1, 2), Fraction(1), Fraction(3, 2)):
            assert roundtrip_down_up(g, TransformParams(C)) == (0, 0)

    def test_float_roundtrip(self):
        rng = np.random.default_rng(6)
        g = WeightTable(8, rng.random(256))
        a, b = roundtrip_down_up(g, 2.0)
        assert a <= 1e-9 * g.max_abs() and b <= 1e-9 * g.max_abs()

    def test_overflow(self):
        with pytest.raises(NumericalError):
            t_up(WeightTable(10, np.full(1024, 1e300)), 10.0)

    def test_bad_C(self):
        with pytest.raises(ValueError):
            TransformParams(0)

    def test_zero_dimension_rejected(self):
        with pytest.raises(ValueError):
            WeightTable(0, [3.0])


class TestStructured:
    def test_product_up_closed_form(self):
        spec = fam.Product(fam.PowerLaw(0.8, 2.0), d=6)
        up = t_up_spec(spec, 1.5)
        dense = t_up(fam.truncate_to_table(spec, 6), 1.5)
        for u in range(64):
            assert math.isclose(up.entry(lattice.members(u)), dense.values[u], rel_tol=1e-12)

    def test_product_down_closed_form(self):
        spec = fam.Product(fam.Geometric(0.9, 0.5), d=6)
        down = t_down_spec(spec, 0.7)
        dense = t_down(fam.truncate_to_table(spec, 6), 0.7)
        for u in range(64):
            assert math.isclose(down.entry(lattice.members(u)), dense.values[u], rel_tol=1e-12, abs_tol=1e-15)

    def test_product_down_needs_gamma_at_most_one(self):
        with pytest.raises(NotMonotoneError):
            t_down_spec(fam.Product(fam.PowerLaw(2.0, 2.0)), 1.0)

    def test_finsupport_up(self):
        spec = fam.FinSupport({frozenset({1, 2}): 1.0, frozenset(): 2.0}, d=3)
        up = t_up_spec(spec, 1.0)
        assert up.entry({1}) == 1.0 and up.entry(set()) == 3.0 and up.entry({3}) == 0.0

    def test_pod_up_matches_dense(self):
        spec = fam.POD(fam.Explicit([3, 2, 1]), fam.OrderExplicit([1, 3, 4, 5]), 1.0, 3.0, d=3)
        up = t_up_spec(spec, 1.0)
        dense = t_up(WeightTable(3, POD_EXAMPLE), 1.0)
        for u in range(8):
            assert math.isclose(up.entry(lattice.members(u)), dense.values[u], rel_tol=1e-12)

    def test_not_summable(self):
        with pytest.raises(NotSummableError):
            t_up_spec(fam.Product(fam.PowerLaw(1.0, 1.0)), 1.0)


class TestSummability:
    def test_product(self):
        rep = summability(fam.Product(fam.PowerLaw(1.0, 2.0)), 1.0)
        assert rep.is_summable
        assert math.sinh(math.pi) / math.pi in rep.value

    def test_harmonic_product_diverges(self):
        assert summability(fam.Product(fam.PowerLaw(1.0, 1.0)), 1.0).is_summable is False

    def test_pod_rules(self):
        good = fam.POD(fam.PowerLaw(1.0, 3.0), fam.OrderFactorial(1.0, 1.0), 1.0, 1.0)
        assert summability(good, 1.0).is_summable
        # p = a with a power law: sum gamma_j^{1/p} diverges, so the threshold rule never fires
        edge = fam.POD(fam.PowerLaw(0.1, 2.0), fam.OrderFactorial(1.0, 2.0), 2.0, 1.0)
        assert summability(edge, 1.0).is_summable is None
        finite = fam.POD(fam.PowerLaw(1.0, 2.0), fam.OrderFactorial(1.0, 2.0), 2.0, 1.0, d=5)
        assert summability(finite, 1.0).is_summable


class TestADAndDecayTransfer:
    def test_product_in_A_d(self):
        assert membership_A_d(fam.Product(fam.PowerLaw(1.0, 2.0))).is_member
        assert membership_A_d(fam.Product(fam.PowerLaw(2.0, 2.0))).is_member is False

    def test_undecided_family(self):
        pod = fam.POD(fam.PowerLaw(1.0, 3.0), fam.OrderFactorial(1.0, 1.0), 1.0, 1.0)
        assert membership_A_d(pod).is_member is None

    def test_decay_transfer_product(self):
        spec = fam.Product(fam.PowerLaw(1.0, 2.0))
        below = decay_transfer_bounds(spec, 1.0, 1.5)
        assert below.forward_hypothesis and below.forward_conclusion and below.implies_backward
        above = decay_transfer_bounds(spec, 1.0, 2.5)
        assert above.forward_hypothesis is False and above.implies_forward

    def test_backward_skipped_below_one(self):
        res = decay_transfer_bounds(fam.Product(fam.PowerLaw(1.0, 2.0)), 1.0, 0.5)
        assert res.backward_hypothesis is None

    def test_tau_positive(self):
        with pytest.raises(ValueError):
            decay_transfer_bounds(fam.Product(fam.PowerLaw(1.0, 2.0)), 1.0, 0.0)


class TestAuxiliaryIdentity:
    def test_exhaustive_small(self):
        rng = np.random.default_rng(2)
        rho = SetFunction(4, [Fraction(int(x)) for x in rng.integers(-5, 6, 16)], exact=True)
        for p in range(5):
            for q in range(p + 1):
                for u in range(1 << q):
                    lhs, rhs = auxiliary_identity_sides(rho, p, q, u)
                    assert lhs == rhs
