from fractions import Fraction

import numpy as np
import pytest

from cmweights import lattice
from cmweights.errors import DimensionError
from cmweights.transforms import t_up
from cmweights.weight_core import (SetFunction, WeightTable, check_completely_monotone,
                                   check_monotone_bruteforce, delta, delta_at, table_from)


def direct_delta(gamma, v, u):
    """(Delta_v gamma)_u from the inclusion-exclusion sum."""
    if u & v:
        return 0
    return sum((-1) ** lattice.popcount(w) * gamma.values[u | w] for w in lattice.submasks(v))


class TestSetFunction:
    def test_length_checked(self):
        with pytest.raises(DimensionError):
            SetFunction(2, [1, 2, 3])

    def test_values_read_only(self):
        g = WeightTable(1, [1.0, 2.0])
        with pytest.raises(ValueError):
            g.values[0] = 5

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            WeightTable(1, [1.0, -1.0])

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            WeightTable(1, [1.0, float("nan")])

    def test_from_entries(self):
        g = WeightTable.from_entries(2, {frozenset(): 5, frozenset({1, 2}): 1})
        np.testing.assert_array_equal(g.values, [5, 0, 0, 1])

    def test_table_from_picks_class(self):
        assert isinstance(table_from(1, [1, 2], False), WeightTable)
        assert not isinstance(table_from(1, [1, -2], False), WeightTable)

    def test_exact_mode(self):
        g = WeightTable(1, [Fraction(1, 3), 1], exact=True)
        assert g.values[0] == Fraction(1, 3)
        assert g.tolerance() == 0


class TestDelta:
    def test_recursion_matches_inclusion_exclusion(self):
        rng = np.random.default_rng(0)
        g = WeightTable(4, rng.integers(0, 20, 16).astype(object), exact=True)
        for v in range(16):
            dv = delta(g, v)
            for u in range(16):
                if not u & v:
                    assert dv.values[u] == direct_delta(g, v, u)
                    assert delta_at(g, v, u) == direct_delta(g, v, u)

    def test_overlap_gives_zero(self):
        g = WeightTable(2, [5, 5, 3, 1])
        assert delta_at(g, 0b01, 0b01) == 0

    def test_square_example_values(self):
        g = WeightTable(2, [5, 5, 3, 1], exact=True)
        assert delta_at(g, 0b11, 0) == -2


class TestMembership:
    def test_square_example_fails_with_witness(self):
        g = WeightTable(2, [5, 5, 3, 1], exact=True)
        cert = check_completely_monotone(g)
        assert cert.is_member is False
        u, v = cert.witness
        assert delta_at(g, v, u) < 0
        assert cert.recheck(g)

    def test_image_of_t_up_is_monotone(self):
        rng = np.random.default_rng(3)
        for d in range(1, 6):
            g = t_up(WeightTable(d, rng.random(1 << d)), 1.0)
            assert check_completely_monotone(g).is_member
            assert check_monotone_bruteforce(g).is_member

    def test_negative_entry(self):
        cert = check_completely_monotone(SetFunction(1, [1.0, -1.0]))
        assert cert.is_member is False
        assert cert.witness == (1, 0)

    def test_routes_agree_on_random_tables(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            d = int(rng.integers(1, 5))
            g = WeightTable(d, rng.integers(0, 4, 1 << d))
            assert check_completely_monotone(g).is_member == check_monotone_bruteforce(g).is_member

    def test_large_d_witness(self):
        g = t_up(WeightTable(8, np.ones(256)), 1.0).copy_values()
        g[0] -= 1000
        g = WeightTable(8, np.maximum(g, 0))
        cert = check_completely_monotone(g)
        assert cert.is_member is False
        assert cert.recheck(g)
