import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from conftest import random_correlation
from osem.data import OrdinalDataset
from osem.errors import NumericError
from osem.graph import Dag
from osem.initialization import (bivariate_cell_probs, bivariate_rectangle_prob,
                                 estimate_thresholds, initialize,
                                 pairwise_correlation, smooth_to_pd)
from osem.latent import params_to_covariance, covariance_to_correlation, NodeParams


def orthant(rho):
    return 0.25 + math.asin(rho) / (2 * math.pi)


class TestEstimateThresholds:
    def test_balanced_binary(self):
        data = OrdinalDataset.from_codes(np.array([[0], [0], [1], [1]]))
        t = estimate_thresholds(data)
        assert t.interior() == [[0.0]]

    def test_quartile_binary(self):
        data = OrdinalDataset.from_codes(np.array([[0], [0], [0], [1]]))
        t = estimate_thresholds(data)
        assert t.interior()[0][0] == pytest.approx(0.6744897501960817, abs=1e-12)

    def test_three_equal_levels(self):
        codes = np.repeat([0, 1, 2], 100)[:, None]
        t = estimate_thresholds(OrdinalDataset.from_codes(codes, (3,)))
        lo, hi = t.interior()[0]
        assert lo == pytest.approx(-0.43072729929545744, abs=1e-10)
        assert hi == pytest.approx(+0.43072729929545744, abs=1e-10)

    def test_count_and_monotone(self, rng):
        codes = rng.integers(0, 4, size=(500, 3))
        data = OrdinalDataset.from_codes(codes, (4, 4, 4))
        t = estimate_thresholds(data)
        for cuts in t.interior():
            assert len(cuts) == 3
            assert np.all(np.diff(cuts) > 0)

    def test_empty_interior_level_raises(self):
        codes = np.array([[0], [0], [2], [2]])
        with pytest.raises(NumericError):
            estimate_thresholds(OrdinalDataset.from_codes(codes, (3,)))


class TestBivariateRectangle:
    def test_full_plane(self):
        for rho in (-0.7, 0.0, 0.7):
            p = bivariate_rectangle_prob(-np.inf, np.inf, -np.inf, np.inf, rho)
            assert p == pytest.approx(1.0, abs=1e-12)

    def test_independent_orthant(self):
        p = bivariate_rectangle_prob(-np.inf, 0, -np.inf, 0, 0.0)
        assert p == pytest.approx(0.25, abs=1e-12)

    def test_orthant_closed_form(self):
        for rho in (-0.95, -0.5, 0.3, 0.5, 0.9, 0.99):
            p = bivariate_rectangle_prob(-np.inf, 0, -np.inf, 0, rho)
            assert p == pytest.approx(orthant(rho), abs=1e-10)

    def test_against_scipy_cdf(self, rng):
        for rho in (-0.99, -0.9, -0.5, 0.2, 0.8, 0.95, 0.999):
            dist = multivariate_normal(mean=[0, 0], cov=[[1, rho], [rho, 1]])
            for _ in range(10):
                h, k = rng.uniform(-3, 3, size=2)
                got = bivariate_rectangle_prob(-np.inf, h, -np.inf, k, rho)
                assert got == pytest.approx(dist.cdf([h, k]), abs=1e-7)

    def test_against_mpmath_quad(self):
        # independent high-precision oracle on finite rectangles
        import mpmath

        cases = [(-0.4, 1.1, -2.0, 0.3, 0.95), (0.5, 2.5, -1.0, -0.2, -0.99),
                 (-1.0, 1.0, -1.0, 1.0, 0.6), (-0.2, 0.2, -3.0, 2.0, -0.85)]
        for lo1, hi1, lo2, hi2, rho in cases:
            def dens(x, y):
                q = (x * x - 2 * rho * x * y + y * y) / (1 - rho * rho)
                return mpmath.exp(-q / 2) / (2 * mpmath.pi * mpmath.sqrt(1 - rho * rho))
            ref = float(mpmath.quad(dens, [lo1, hi1], [lo2, hi2]))
            got = bivariate_rectangle_prob(lo1, hi1, lo2, hi2, rho)
            assert got == pytest.approx(ref, abs=1e-7)

    def test_cell_probs_sum_to_one(self, rng):
        cuts1 = np.array([-np.inf, -0.7, 0.2, np.inf])
        cuts2 = np.array([-np.inf, 0.1, np.inf])
        for rho in (-0.9, 0.0, 0.5, 0.99):
            total = bivariate_cell_probs(cuts1, cuts2, rho).sum()
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_rho_out_of_range(self):
        with pytest.raises(NumericError):
            bivariate_rectangle_prob(-1, 1, -1, 1, 1.0)


def _latent_pair(rng, rho, n):
    z1 = rng.standard_normal(n)
    z2 = rho * z1 + math.sqrt(1 - rho * rho) * rng.standard_normal(n)
    return z1, z2


class TestPairwiseCorrelation:
    def test_independent_columns(self, rng):
        z1, z2 = _latent_pair(rng, 0.0, 10_000)
        c1 = (z1 > 0).astype(int)
        c2 = (z2 > 0).astype(int)
        cuts = np.array([-np.inf, 0.0, np.inf])
        assert abs(pairwise_correlation(c1, c2, cuts, cuts)) < 0.05

    def test_median_split_recovers_rho_against_grid_oracle(self, rng):
        z1, z2 = _latent_pair(rng, 0.5, 10_000)
        c1 = (z1 > 0).astype(int)
        c2 = (z2 > 0).astype(int)
        cuts = np.array([-np.inf, 0.0, np.inf])
        rho_hat = pairwise_correlation(c1, c2, cuts, cuts)
        assert rho_hat == pytest.approx(0.5, abs=0.05)
        # oracle: fine grid over the exact cell-probability likelihood,
        # with cells computed through scipy's MVN CDF (independent route)
        counts = np.bincount(2 * c1 + c2, minlength=4).reshape(2, 2)
        best, best_ll = None, -np.inf
        for rho in np.linspace(-0.995, 0.995, 399):
            dist = multivariate_normal(mean=[0, 0], cov=[[1, rho], [rho, 1]])
            c = dist.cdf([0, 0])
            p = np.array([[c, 0.5 - c], [0.5 - c, c]])
            ll = float((counts * np.log(np.maximum(p, 1e-300))).sum())
            if ll > best_ll:
                best, best_ll = rho, ll
        assert rho_hat == pytest.approx(best, abs=0.01)

    def test_perfect_concordance_hits_bound(self):
        col = np.tile([0, 1], 50)
        cuts = np.array([-np.inf, 0.0, np.inf])
        assert pairwise_correlation(col, col, cuts, cuts) > 0.99

    def test_symmetry_in_arguments(self, rng):
        z1, z2 = _latent_pair(rng, 0.35, 4000)
        cuts_a = np.array([-np.inf, -0.4, 0.6, np.inf])
        cuts_b = np.array([-np.inf, 0.2, np.inf])
        c1 = np.digitize(z1, cuts_a[1:-1])
        c2 = np.digitize(z2, cuts_b[1:-1])
        r_ab = pairwise_correlation(c1, c2, cuts_a, cuts_b)
        r_ba = pairwise_correlation(c2, c1, cuts_b, cuts_a)
        assert r_ab == pytest.approx(r_ba, abs=1e-6)


class TestSmoothToPd:
    def test_pd_input_unchanged(self, rng):
        m = random_correlation(rng, 5)
        np.testing.assert_allclose(smooth_to_pd(m), m, atol=1e-12)

    def test_identity_unchanged(self):
        np.testing.assert_allclose(smooth_to_pd(np.eye(3)), np.eye(3))

    def test_singular_matrix_smoothed(self):
        m = np.ones((2, 2))
        out = smooth_to_pd(m)
        np.linalg.cholesky(out)
        assert out[0, 1] < 1.0
        np.testing.assert_allclose(np.diag(out), 1.0, atol=1e-12)

    def test_indefinite_smoothed_unit_diagonal(self, rng):
        m = random_correlation(rng, 6)
        m[0, 1] = m[1, 0] = -0.999
        m[0, 2] = m[2, 0] = 0.999
        m[1, 2] = m[2, 1] = 0.999          # jointly infeasible, not PD
        out = smooth_to_pd(m)
        np.linalg.cholesky(out)
        np.testing.assert_allclose(np.diag(out), 1.0, atol=1e-12)


class TestInitialize:
    def test_single_variable(self, rng):
        data = OrdinalDataset.from_codes(rng.integers(0, 2, (50, 1)), (2,))
        _, sigma = initialize(data)
        np.testing.assert_allclose(sigma, [[1.0]])

    def test_independent_columns_near_identity(self, rng):
        codes = rng.integers(0, 3, size=(10_000, 3))
        _, sigma = initialize(OrdinalDataset.from_codes(codes, (3, 3, 3)))
        assert np.max(np.abs(sigma - np.eye(3))) < 0.05

    def test_recovers_known_sigma(self, rng):
        # chain 0 -> 1 -> 2 -> 3 -> 4 with strong weights, 3 levels each
        n = 5
        edges = {(i, i + 1): 0.9 for i in range(n - 1)}
        d = Dag(n, frozenset(edges), tuple(edges.items()))
        coefs = tuple({j: w for (j, i2), w in edges.items() if i2 == i}
                      for i in range(n))
        params = NodeParams(coefs, tuple(1.0 for _ in range(n)))
        truth, _ = covariance_to_correlation(params_to_covariance(params, d))
        latent = rng.multivariate_normal(np.zeros(n), truth, size=20_000)
        codes = np.column_stack([
            np.digitize(latent[:, i], [-0.5, 0.6]) for i in range(n)])
        data = OrdinalDataset.from_codes(codes, (3,) * n)
        _, sigma = initialize(data)
        assert np.max(np.abs(sigma - truth)) < 0.05
