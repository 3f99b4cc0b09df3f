import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cvpc.cv import (BatchMismatch, CrossMoments, DegenerateSurrogate, cvpc_mean, cvpc_variance,
                     optimal_alpha_mean, optimal_alpha_variance, pearson, variance_reduction_ratio,
                     weights_from_samples)
from cvpc.montecarlo import EstimatorResult, draw

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vectors = arrays(np.float64, st.integers(3, 40), elements=finite)


def result(mean, fingerprint=(0, 0, 10)):
    return EstimatorResult(mean, 0.0, np.empty(0), 0.0, fingerprint)


class TestMeanWeight:
    def test_proportional_surrogate(self):
        assert optimal_alpha_mean([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]) == pytest.approx(-0.5)

    def test_identical_surrogate(self):
        q = draw(0, 50, 1).samples[:, 0]
        assert optimal_alpha_mean(q, q) == pytest.approx(-1.0)

    def test_constant_surrogate(self):
        with pytest.raises(DegenerateSurrogate):
            optimal_alpha_mean([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])

    def test_length_mismatch(self):
        with pytest.raises(BatchMismatch):
            optimal_alpha_mean([1.0, 2.0, 3.0], [1.0, 2.0])

    @given(vectors, st.floats(-100, 100), st.floats(0.01, 100))
    @settings(max_examples=60, deadline=None)
    def test_affine_equivariance(self, qpc, shift, scale):
        assume(np.ptp(qpc) > 1e-3)
        q = np.sin(qpc) + 0.5 * qpc
        a = optimal_alpha_mean(q, qpc)
        b = optimal_alpha_mean(q, scale * qpc + shift)
        assert b == pytest.approx(a / scale, rel=1e-6, abs=1e-9)

    def test_grid_search_oracle(self):
        """The weight minimizing the spread of replicated estimates is -Cov/Var."""
        z = draw(4, 400 * 50, 1).samples[:, 0].reshape(400, 50)
        q, qpc = np.exp(0.3 * z), 1 + 0.3 * z
        grid = np.linspace(-2.0, 0.0, 2001)
        mc, cme = q.mean(axis=1), qpc.mean(axis=1)
        spread = [np.var(mc + a * (cme - 1.0)) for a in grid]
        best = grid[int(np.argmin(spread))]
        pooled = optimal_alpha_mean(q.ravel(), qpc.ravel())
        assert best == pytest.approx(pooled, abs=0.05)


class TestVarianceWeight:
    def test_identical_surrogate_gives_minus_one(self):
        q = 3.0 + draw(1, 200, 1).samples[:, 0]
        m = CrossMoments.from_samples(q, q, q.mean(), q.mean())
        assert optimal_alpha_variance(m) == pytest.approx(-1.0, rel=1e-12)

    @given(st.integers(0, 2**31 - 1), st.floats(-5, 5), st.floats(-5, 5))
    @settings(max_examples=40, deadline=None)
    def test_matches_direct_regression(self, seed, mu, mu_pc):
        """Raw cross-moment expansion equals -Cov/Var of the squared deviations."""
        z = draw(seed, 300, 2).samples
        q = 1.0 + z[:, 0] + 0.4 * z[:, 0] ** 2 + 0.3 * z[:, 1]
        qpc = 1.0 + z[:, 0]
        a = optimal_alpha_variance(CrossMoments.from_samples(q, qpc, mu, mu_pc))
        hi, lo = (q - mu) ** 2, (qpc - mu_pc) ** 2
        direct = -np.cov(hi, lo, ddof=1)[0, 1] / np.var(lo, ddof=1)
        assert a == pytest.approx(direct, rel=1e-8, abs=1e-10)

    def test_degenerate(self):
        m = CrossMoments.from_samples(np.arange(5.0), np.full(5, 2.0), 2.0, 2.0)
        with pytest.raises(DegenerateSurrogate):
            optimal_alpha_variance(m)


class TestWeights:
    def test_degenerate_falls_back_to_plain_sampling(self):
        w = weights_from_samples([1.0, 2.0, 3.0], [1.0, 1.0, 1.0], 2.0, 1.0)
        assert w.degenerate and w.alpha_mean == 0.0 and w.alpha_variance == 0.0

    def test_rho_bounds(self):
        q = np.arange(10.0)
        assert pearson(q, 2 * q + 1) == pytest.approx(1.0)
        assert pearson(q, -q) == pytest.approx(-1.0)
        assert pearson(q, np.ones(10)) == 0.0

    @given(vectors)
    @settings(max_examples=60, deadline=None)
    def test_rho_clamped(self, q):
        qpc = q + np.linspace(0.0, 1.0, q.size)
        assert -1.0 <= pearson(q, qpc) <= 1.0

    def test_reduction_ratio(self):
        assert variance_reduction_ratio(0.9) == pytest.approx(0.19)
        with pytest.raises(ValueError):
            variance_reduction_ratio(1.5)


class TestCombination:
    def test_mean_example(self):
        assert cvpc_mean(result(2.0), result(1.9), 1.8, -1.0) == pytest.approx(1.9)

    def test_zero_weight_is_plain_mean(self):
        assert cvpc_mean(result(2.0), result(1.9), 1.8, 0.0) == 2.0

    def test_fingerprint_mismatch(self):
        with pytest.raises(BatchMismatch):
            cvpc_mean(result(2.0), result(1.9, (0, 1, 10)), 1.8, -1.0)

    def test_variance_perfect_cancellation(self):
        q = 2.0 + draw(2, 30, 1).samples[:, 0]
        assert cvpc_variance(q, q, 2.0, 2.0, 1.0, -1.0) == pytest.approx(1.0)

    def test_variance_zero_weight(self):
        q = np.array([1.0, 2.0, 3.0])
        assert cvpc_variance(q, q, 2.0, 2.0, 5.0, 0.0) == pytest.approx(2.0 / 3.0)

    @given(st.integers(0, 2**31 - 1), st.floats(-1.0, 1.0))
    @settings(max_examples=30, deadline=None)
    def test_unbiased_for_any_weight(self, seed, alpha):
        """Averaged over replications the correction term has mean zero."""
        z = draw(seed, 200 * 20, 1).samples[:, 0].reshape(200, 20)
        q, qpc = z + 0.2 * z ** 2, z
        est = q.mean(axis=1) + alpha * qpc.mean(axis=1)
        se = est.std(ddof=1) / math.sqrt(est.size)
        assert abs(est.mean() - 0.2) < 5 * se

    def test_variance_reduction_matches_correlation(self):
        z = draw(6, 2000 * 20, 1).samples[:, 0].reshape(2000, 20)
        q, qpc = np.exp(0.5 * z), 1 + 0.5 * z
        rho = pearson(q.ravel(), qpc.ravel())
        alpha = optimal_alpha_mean(q.ravel(), qpc.ravel())
        mc = q.mean(axis=1)
        cv = mc + alpha * (qpc.mean(axis=1) - 1.0)
        assert np.var(cv) / np.var(mc) == pytest.approx(1 - rho ** 2, rel=0.15)

    def test_suboptimal_weight_degrades(self):
        z = draw(8, 2000 * 20, 1).samples[:, 0].reshape(2000, 20)
        q, qpc = np.exp(0.5 * z), 1 + 0.5 * z
        alpha = optimal_alpha_mean(q.ravel(), qpc.ravel())

        def spread(a):
            return np.var(q.mean(axis=1) + a * (qpc.mean(axis=1) - 1.0))

        assert spread(alpha) < spread(0.5 * alpha) < spread(0.0)
        assert spread(2.2 * alpha) > spread(0.0)
