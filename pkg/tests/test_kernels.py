import math

import numpy as np
import pytest
import scipy.integrate

from cmweights import families as fam
from cmweights import kernels as kn
from cmweights.points import lattice_points
from cmweights.transforms import t_up
from cmweights.weight_core import WeightTable

KERNELS = [kn.MIN_KERNEL, kn.ANOVA_KERNEL, kn.INDICATOR_KERNEL]


class TestUnivariate:
    def test_registry(self):
        assert {"min", "anova", "indicator"} <= set(kn.builtin_kernels())
        with pytest.raises(KeyError):
            kn.get_kernel("gauss")

    def test_min_gram(self):
        G = kn.MIN_KERNEL.gram([0.25, 0.75])
        np.testing.assert_array_equal(G, [[0.25, 0.25], [0.25, 0.75]])
        assert np.all(np.linalg.eigvalsh(G) > 0)

    @pytest.mark.parametrize("k", [kn.MIN_KERNEL, kn.ANOVA_KERNEL])
    def test_integrals_by_quadrature(self, k):
        def inner(x):
            return scipy.integrate.quad(lambda y: float(k(x, y)), 0, 1, points=[x], epsabs=1e-14)[0]

        I2, _ = scipy.integrate.quad(inner, 0, 1, epsabs=1e-13)
        assert abs(I2 - k.I2) <= 1e-10
        for x in (0.0, 0.3, 0.9):
            I1, _ = scipy.integrate.quad(lambda y: float(k(x, y)), 0, 1, points=[x], epsabs=1e-13)
            assert abs(I1 - float(k.I1(x))) <= 1e-10

    def test_anova_verified(self):
        assert kn.verify_anova_kernel()

    def test_indicator(self):
        k = kn.INDICATOR_KERNEL
        assert k(0.0, 0.0) == 0 and k(0.5, 0.5) == 1 and k(0.5, 0.6) == 0
        assert k.inf_diag == 0

    @pytest.mark.parametrize("k", KERNELS, ids=lambda k: k.name)
    def test_symmetric_psd(self, k):
        rng = np.random.default_rng(0)
        x = rng.random(40)
        G = k.gram(x)
        np.testing.assert_array_equal(G, G.T)
        lam = np.linalg.eigvalsh(G)
        assert lam[0] >= -1e-10 * lam[-1]

    def test_one_plus(self):
        k = kn.one_plus(kn.MIN_KERNEL, 2.0)
        assert k(0.5, 0.25) == 2.5
        assert k.I2 == 2 * (1 + 1 / 3)


class TestSuperposition:
    def test_constant_weights(self):
        K = kn.SuperpositionKernel(WeightTable(2, [1.0, 0, 0, 0]), kn.MIN_KERNEL)
        assert K([0.3, 0.4], [0.9, 0.1]) == 1.0

    def test_product_closed_form(self):
        K = kn.SuperpositionKernel(fam.Product(fam.Explicit([1.0, 1.0]), d=2), kn.MIN_KERNEL)
        assert K([1.0, 1.0], [1.0, 1.0]) == 4.0

    def test_dense_matches_product(self):
        spec = fam.Product(fam.PowerLaw(1.0, 1.5), d=8)
        rng = np.random.default_rng(1)
        X, Y = rng.random((100, 8)), rng.random((100, 8))
        a = kn.SuperpositionKernel(fam.truncate_to_table(spec, 8), kn.MIN_KERNEL).pairs(X, Y)
        b = kn.SuperpositionKernel(spec, kn.MIN_KERNEL).pairs(X, Y)
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_dense_matches_pod(self):
        spec = fam.POD(fam.PowerLaw(1.0, 2.0), fam.OrderFactorial(1.0, 1.0), 1.0, 1.0, d=6)
        rng = np.random.default_rng(2)
        X, Y = rng.random((50, 6)), rng.random((50, 6))
        a = kn.SuperpositionKernel(fam.truncate_to_table(spec, 6), kn.ANOVA_KERNEL).pairs(X, Y)
        b = kn.SuperpositionKernel(spec, kn.ANOVA_KERNEL).pairs(X, Y)
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_sparse_matches_dense(self):
        spec = fam.FinSupport({frozenset({1, 3}): 2.0, frozenset(): 1.0, frozenset({2}): 0.5}, d=3)
        rng = np.random.default_rng(3)
        X = rng.random((20, 3))
        a = kn.SuperpositionKernel(fam.truncate_to_table(spec, 3), kn.MIN_KERNEL).gram(X)
        b = kn.SuperpositionKernel(spec, kn.MIN_KERNEL).gram(X)
        np.testing.assert_allclose(a, b, rtol=1e-13)

    def test_cauchy_schwarz_and_psd(self):
        rng = np.random.default_rng(4)
        g = WeightTable(4, rng.random(16))
        K = kn.SuperpositionKernel(g, kn.ANOVA_KERNEL)
        X = rng.random((30, 4))
        G = K.gram(X)
        diag = np.diag(G)
        assert np.all(G ** 2 <= np.outer(diag, diag) * (1 + 1e-12))
        lam = np.linalg.eigvalsh(G)
        assert lam[0] >= -1e-10 * lam[-1]

    @pytest.mark.parametrize("C", [0.6, 1.0, 1.7])
    def test_rearrangement_identity(self, C):
        rng = np.random.default_rng(5)
        for d in (1, 3, 6):
            g = WeightTable(d, rng.random(1 << d))
            X, Y = rng.random((25, d)), rng.random((25, d))
            lhs = kn.SuperpositionKernel(t_up(g, C), kn.ANOVA_KERNEL).pairs(X, Y)
            rhs = kn.rearranged_up_kernel(g, kn.ANOVA_KERNEL, C, X, Y)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-10)

    def test_infinite_product_with_tail(self):
        spec = fam.Product(fam.PowerLaw(1.0, 2.0))
        K = kn.SuperpositionKernel(spec, kn.MIN_KERNEL)
        x = kn.InfinitePoint((0.5, 0.2), 0.3)
        y = kn.InfinitePoint((0.1,), 0.3)
        got = kn.superposition_eval(K, x, y)
        n = 200000
        xs = np.full(n, 0.3)
        ys = np.full(n, 0.3)
        xs[:2], ys[:1] = (0.5, 0.2), 0.1
        ref = float(np.prod(1 + np.minimum(xs, ys) / np.arange(1, n + 1) ** 2)) * math.exp(0.3 / (n + 0.5))
        assert math.isclose(got, ref, rel_tol=1e-6)

    def test_infinite_product_anchor_zero(self):
        spec = fam.Product(fam.PowerLaw(1.0, 2.0))
        K = kn.SuperpositionKernel(spec, kn.MIN_KERNEL)
        assert math.isclose(K([0.5, 0.5], [1.0, 0.25]), 1.5 * 1.0625)


class TestDomain:
    def test_finite_d(self):
        K = kn.SuperpositionKernel(WeightTable(2, np.ones(4)), kn.MIN_KERNEL)
        assert kn.domain_membership([0.1, 0.2], K)

    def test_nested_blocks_indicator(self):
        K = kn.SuperpositionKernel(fam.NestedBlocks(), kn.INDICATOR_KERNEL)
        assert kn.domain_membership(kn.InfinitePoint((0.5, 0.7), 0.3), K)
        assert kn.domain_membership(kn.InfinitePoint((), 1.0), K)

    def test_nested_blocks_up_side(self):
        K = kn.SuperpositionKernel(fam.NestedBlocks(), kn.one_plus(kn.INDICATOR_KERNEL))
        assert not kn.domain_membership(kn.InfinitePoint((0.5,), 0.3), K)

    def test_product_harmonic(self):
        K = kn.SuperpositionKernel(fam.Product(fam.PowerLaw(1.0, 1.0)), kn.MIN_KERNEL)
        assert not kn.domain_membership(kn.InfinitePoint((), 0.5), K)
        assert kn.domain_membership(kn.InfinitePoint((0.5,), 0.0), K)


class TestEmbeddingBound:
    def test_same_kernel_at_most_one(self):
        for n in (1, 5, 20):
            x = np.arange(1, n + 1) / n
            assert kn.embedding_norm_lower_bound(kn.MIN_KERNEL, kn.MIN_KERNEL, x) <= 1 + 1e-9

    def test_single_point(self):
        for x in (0.3, 1.0):
            k, l = kn.MIN_KERNEL, kn.ANOVA_KERNEL
            expect = math.sqrt(float(k(x, x)) / (1 + float(l(x, x))))
            assert math.isclose(kn.embedding_norm_lower_bound(k, l, [x]), expect, rel_tol=1e-9)

    def test_monotone_under_refinement(self):
        prev = 0.0
        for n in (2, 4, 8, 16, 32):
            cur = kn.embedding_norm_lower_bound(kn.MIN_KERNEL, kn.ANOVA_KERNEL, np.arange(1, n + 1) / n)
            assert cur >= prev - 1e-9
            prev = cur

    def test_regression_anchor(self):
        val = kn.embedding_norm_lower_bound(kn.MIN_KERNEL, kn.ANOVA_KERNEL, np.arange(1, 33) / 32)
        assert math.isclose(val, 1.1447028320706, rel_tol=1e-8)

    def test_converged_near_sqrt_four_thirds(self):
        clb, _ = kn.converged_norm_lower_bound(kn.MIN_KERNEL, kn.ANOVA_KERNEL)
        assert clb <= math.sqrt(4 / 3) + 1e-9
        assert clb >= 0.99 * math.sqrt(4 / 3)

    def test_distinct_points_required(self):
        with pytest.raises(ValueError):
            kn.embedding_norm_lower_bound(kn.MIN_KERNEL, kn.MIN_KERNEL, [0.5, 0.5])


class TestVerifyEmbedding:
    def test_same_kernel_passes(self):
        rng = np.random.default_rng(6)
        spec = fam.Product(fam.PowerLaw(1.0, 1.0), d=2)
        rep = kn.verify_embedding(kn.MIN_KERNEL, kn.MIN_KERNEL, 1.0, spec, rng.random((50, 2)))
        assert rep.passed

    def test_min_anova_passes(self):
        clb, _ = kn.converged_norm_lower_bound(kn.MIN_KERNEL, kn.ANOVA_KERNEL)
        spec = fam.Product(fam.PowerLaw(1.0, 2.0), d=3)
        rep = kn.verify_embedding(kn.MIN_KERNEL, kn.ANOVA_KERNEL, 1.1 * clb, spec, lattice_points(64, 3).nodes,
                                  C_lb=clb)
        assert rep.passed and not rep.notes

    def test_undersized_constant_fails_somewhere(self):
        clb, _ = kn.converged_norm_lower_bound(kn.MIN_KERNEL, kn.ANOVA_KERNEL)
        spec = fam.Product(fam.PowerLaw(1.0, 2.0), d=3)
        found = kn.find_psd_violation(kn.MIN_KERNEL, kn.ANOVA_KERNEL, clb / 2, spec, 3)
        assert found is not None
        assert not found[1].passed
