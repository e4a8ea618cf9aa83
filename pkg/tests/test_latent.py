import math

import numpy as np
import pytest

from conftest import random_correlation
from osem.em import recover_node_params
from osem.errors import InputError, NumericError
from osem.graph import Dag, full_dag, random_dag
from osem.latent import (LatentModel, NodeParams, Thresholds,
                         complete_log_density, covariance_to_correlation,
                         params_to_covariance)


def make_params(coefs, variances):
    return NodeParams(tuple(coefs), tuple(variances))


class TestParamsToCovariance:
    def test_no_edges_gives_diagonal(self):
        params = make_params([{}, {}], [1.0, 2.0])
        cov = params_to_covariance(params, Dag(2, frozenset()))
        np.testing.assert_allclose(cov, np.diag([1.0, 2.0]))

    def test_two_node_hand_value(self):
        # y2 = 0.8 y1 + eps, var(eps) = 0.36  =>  unit-variance pair, corr 0.8
        params = make_params([{}, {0: 0.8}], [1.0, 0.36])
        cov = params_to_covariance(params, Dag(2, frozenset({(0, 1)})))
        np.testing.assert_allclose(cov, [[1.0, 0.8], [0.8, 1.0]], atol=1e-12)

    def test_chain_hand_value(self):
        params = make_params([{}, {0: 0.5}, {1: 0.5}], [1.0, 1.0, 1.0])
        cov = params_to_covariance(
            params, Dag(3, frozenset({(0, 1), (1, 2)})))
        assert cov[0, 2] == pytest.approx(0.25)

    def test_output_is_pd(self, rng):
        for _ in range(20):
            d = random_dag(6, 3, rng=rng)
            coefs = [{j: rng.normal() for j in d.parents(i)} for i in range(6)]
            params = make_params(coefs, rng.uniform(0.2, 2.0, 6))
            np.linalg.cholesky(params_to_covariance(params, d))

    def test_support_mismatch_rejected(self):
        params = make_params([{}, {}], [1.0, 1.0])
        with pytest.raises(InputError):
            params_to_covariance(params, Dag(2, frozenset({(0, 1)})))


class TestCovarianceToCorrelation:
    def test_diagonal(self):
        corr, d = covariance_to_correlation(np.diag([4.0, 9.0]))
        np.testing.assert_allclose(corr, np.eye(2))
        np.testing.assert_allclose(d, [2.0, 3.0])

    def test_idempotent_on_correlation(self, rng):
        corr = random_correlation(rng, 4)
        out, d = covariance_to_correlation(corr)
        np.testing.assert_allclose(out, corr, atol=1e-12)
        np.testing.assert_allclose(d, np.ones(4))

    def test_hand_value(self):
        corr, _ = covariance_to_correlation(np.array([[4.0, 2.0], [2.0, 4.0]]))
        np.testing.assert_allclose(corr, [[1.0, 0.5], [0.5, 1.0]])

    def test_bad_diagonal_rejected(self):
        with pytest.raises(NumericError):
            covariance_to_correlation(np.array([[0.0, 0.0], [0.0, 1.0]]))


class TestThresholds:
    def test_requires_padding(self):
        with pytest.raises(InputError):
            Thresholds((np.array([0.0, 1.0, 2.0]),))

    def test_monotonicity_enforced(self):
        with pytest.raises(InputError):
            Thresholds.from_interior([[1.0, 1.0]])

    def test_interval_lookup(self):
        t = Thresholds.from_interior([[-0.5, 0.5]])
        assert t.interval(0, 1) == (-0.5, 0.5)
        assert t.levels == (3,)
        with pytest.raises(InputError):
            t.interval(0, 3)

    def test_interior_roundtrip(self):
        t = Thresholds.from_interior([[0.0], [-1.0, 1.0]])
        assert t.interior() == [[0.0], [-1.0, 1.0]]


def _simple_model():
    dag = Dag(2, frozenset({(0, 1)}))
    sigma = np.array([[1.0, 0.8], [0.8, 1.0]])
    params = make_params([{}, {0: 0.8}], [1.0, 0.36])
    thresholds = Thresholds.from_interior([[0.0], [0.0]])
    return LatentModel(dag, thresholds, sigma, params)


class TestCompleteLogDensity:
    def test_univariate_value(self):
        model = LatentModel(Dag(1, frozenset()),
                            Thresholds.from_interior([[0.0]]),
                            np.eye(1), make_params([{}], [1.0]))
        got = complete_log_density([-0.5], [0], model)
        assert got == pytest.approx(-0.5 * math.log(2 * math.pi) - 0.125)
        assert got == pytest.approx(-1.0439, abs=1e-4)

    def test_indicator_violation(self):
        model = LatentModel(Dag(1, frozenset()),
                            Thresholds.from_interior([[0.0]]),
                            np.eye(1), make_params([{}], [1.0]))
        assert complete_log_density([-0.5], [1], model) == -np.inf

    def test_bivariate_independent(self):
        model = LatentModel(Dag(2, frozenset()),
                            Thresholds.from_interior([[0.0], [0.0]]),
                            np.eye(2), make_params([{}, {}], [1.0, 1.0]))
        got = complete_log_density([0.0, 0.0], [1, 1], model)
        assert got == pytest.approx(-math.log(2 * math.pi))
        assert got == pytest.approx(-1.8379, abs=1e-4)

    def test_model_consistency_checked(self):
        with pytest.raises(InputError):
            LatentModel(Dag(2, frozenset({(0, 1)})),
                        Thresholds.from_interior([[0.0], [0.0]]),
                        np.array([[1.0, 0.2], [0.2, 1.0]]),
                        make_params([{}, {0: 0.8}], [1.0, 0.36]))


def _roundtrip(corr, d):
    params = recover_node_params(corr, d)
    back, _ = covariance_to_correlation(params_to_covariance(params, d))
    return back


def test_roundtrip_correlation_params_correlation(rng):
    """recover -> rescale is a projection: a second pass reproduces its input.

    One pass projects an arbitrary correlation matrix onto the DAG model;
    matrices already in the model (in particular any output of the first
    pass) are reproduced exactly.
    """
    for n in (2, 4, 8):
        for _ in range(10):
            corr = random_correlation(rng, n)
            d = random_dag(n, min(3, n - 1), rng=rng)
            projected = _roundtrip(corr, d)
            np.testing.assert_allclose(_roundtrip(projected, d), projected,
                                       atol=1e-9)
    # full DAG: already a single pass is the identity
    for _ in range(10):
        corr = random_correlation(rng, 5)
        np.testing.assert_allclose(_roundtrip(corr, full_dag(5)), corr,
                                   atol=1e-9)
