from fractions import Fraction

import numpy as np
import pytest

from cmweights.errors import DimensionError
from cmweights.monotone_geometry import (delta_prime_equivalence, hypercube_extension_check,
                                         maximal_monotone_minorant, measure_views, singleton_chain_check,
                                         verify_maximal)
from cmweights.transforms import t_up
from cmweights.weight_core import WeightTable, check_completely_monotone, check_monotone_bruteforce

SQUARE_EXAMPLE = WeightTable(2, [5, 5, 3, 1], exact=True)


def leq(a, b):
    return all(x <= y for x, y in zip(a.values, b.values))


class TestMinorant:
    def test_square_example(self):
        res = maximal_monotone_minorant(SQUARE_EXAMPLE)
        assert res.objective == 12
        assert res.maximal
        assert check_completely_monotone(res.minorant).is_member
        assert leq(res.minorant, SQUARE_EXAMPLE)
        assert list(res.minorant.values) == [5, 5, 1, 1]

    def test_two_maximal_elements(self):
        a = WeightTable(2, [5, 5, 1, 1], exact=True)
        b = WeightTable(2, [5, 3, 3, 1], exact=True)
        assert verify_maximal(a, SQUARE_EXAMPLE)[0] and verify_maximal(b, SQUARE_EXAMPLE)[0]
        assert not leq(a, b) and not leq(b, a)

    def test_non_maximal_candidate(self):
        ok, headroom = verify_maximal(WeightTable.from_entries(2, {}, exact=True), SQUARE_EXAMPLE)
        assert not ok
        assert max(headroom.values) > 0

    def test_monotone_input_echoed(self):
        g = t_up(WeightTable(3, np.arange(8.0)), 1.0)
        res = maximal_monotone_minorant(g)
        np.testing.assert_array_equal(res.minorant.values, g.values)

    def test_zero_input(self):
        res = maximal_monotone_minorant(WeightTable(3, np.zeros(8)))
        assert res.objective == 0

    @pytest.mark.parametrize("d", [3, 6])
    def test_random_float(self, d):
        rng = np.random.default_rng(d)
        g = WeightTable(d, rng.random(1 << d))
        res = maximal_monotone_minorant(g)
        assert res.maximal
        assert check_completely_monotone(res.minorant).is_member
        assert np.all(res.minorant.values <= g.values + 1e-12)

    def test_exact_and_float_objectives_agree(self):
        rng = np.random.default_rng(4)
        vals = rng.integers(0, 9, 16)
        exact = maximal_monotone_minorant(WeightTable(4, vals.astype(object), exact=True), exact=True)
        flt = maximal_monotone_minorant(WeightTable(4, vals.astype(float)), exact=False)
        assert abs(float(exact.objective) - float(flt.objective)) <= 1e-8 * max(1.0, float(exact.objective))

    def test_dimension_limit(self):
        with pytest.raises(DimensionError):
            maximal_monotone_minorant(WeightTable(13, np.ones(1 << 13)))


class TestHypercube:
    def test_agrees_with_bruteforce(self):
        rng = np.random.default_rng(8)
        for d in (2, 3):
            for _ in range(50):
                g = WeightTable(d, rng.integers(0, 4, 1 << d))
                assert hypercube_extension_check(g) == check_monotone_bruteforce(g).is_member

    def test_monotone_images(self):
        rng = np.random.default_rng(9)
        g = t_up(WeightTable(3, rng.random(8)), 1.0)
        assert hypercube_extension_check(g)

    def test_delta_prime_identity(self):
        rng = np.random.default_rng(10)
        g = WeightTable(4, [Fraction(int(x)) for x in rng.integers(0, 50, 16)], exact=True)
        for coords in ([1], [2, 1], [4, 2, 3], [1, 2, 3, 4]):
            for u in range(16):
                if u & sum(1 << (c - 1) for c in coords):
                    continue
                lhs, rhs = delta_prime_equivalence(g, coords, u)
                assert lhs == rhs

    def test_delta_prime_repeated_coordinates(self):
        with pytest.raises(ValueError):
            delta_prime_equivalence(SQUARE_EXAMPLE, [1, 1], 0)

    def test_singleton_chains(self):
        assert not singleton_chain_check(SQUARE_EXAMPLE)
        assert singleton_chain_check(WeightTable(2, [5, 5, 1, 1], exact=True))


class TestMeasureView:
    def test_cdf_and_density(self):
        mu = WeightTable(2, [0, 4, 0, 1], exact=True)
        views = measure_views(mu)
        assert list(views.cdf.values) == [5, 5, 1, 1]
        assert list(views.density_from_cdf().values) == [0, 4, 0, 1]
