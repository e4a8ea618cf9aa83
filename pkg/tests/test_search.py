import numpy as np
import pytest

from conftest import random_correlation
from osem.errors import InputError
from osem.graph import Dag, full_dag, is_acyclic, markov_equivalent
from osem.latent import NodeParams, covariance_to_correlation, params_to_covariance
from osem.scoring import ScoreContext, total_score
from osem.search import SearchConfig, exhaustive_search, search_structure


def ctx_for(sigma, n_obs=100, lam=1.0):
    return ScoreContext(np.asarray(sigma, dtype=float), n_obs, lam)


def chain_sigma(n, b):
    edges = {(i, i + 1): b for i in range(n - 1)}
    dag = Dag(n, frozenset(edges), tuple(edges.items()))
    coefs = tuple({i - 1: b} if i else {} for i in range(n))
    params = NodeParams(coefs, (1.0,) * n)
    corr, _ = covariance_to_correlation(params_to_covariance(params, dag))
    return corr, dag


class TestHillClimbing:
    def test_identity_sigma_empties_full_dag(self):
        ctx = ctx_for(np.eye(4), lam=1.0)
        dag, score = search_structure(ctx, full_dag(4))
        assert dag.edges == frozenset()
        assert score == pytest.approx(total_score(ctx, dag))

    def test_recovers_chain_class(self):
        sigma, truth = chain_sigma(3, 0.9)
        ctx = ctx_for(sigma, n_obs=500, lam=1.0)
        dag, score = search_structure(ctx, Dag(3, frozenset()))
        assert markov_equivalent(dag, truth)
        # oracle: all 25 three-node DAGs
        _, best = exhaustive_search(ctx_for(sigma, n_obs=500, lam=1.0), 3)
        assert score == pytest.approx(best, abs=1e-9)

    def test_returned_score_matches_total(self, rng):
        ctx = ctx_for(random_correlation(rng, 5), n_obs=200, lam=2.0)
        dag, score = search_structure(ctx, Dag(5, frozenset()),
                                      SearchConfig(restarts=3, seed=1))
        assert is_acyclic(dag.edges, 5)
        assert score == pytest.approx(total_score(ctx, dag), abs=1e-12)

    def test_max_parents_respected(self, rng):
        ctx = ctx_for(random_correlation(rng, 6), n_obs=400, lam=0.5)
        dag, _ = search_structure(ctx, Dag(6, frozenset()),
                                  SearchConfig(max_parents=1))
        assert all(len(dag.parents(i)) <= 1 for i in range(6))

    def test_deterministic_under_seed(self, rng):
        sigma = random_correlation(rng, 5)
        ctx1 = ctx_for(sigma, n_obs=300)
        ctx2 = ctx_for(sigma, n_obs=300)
        cfg = SearchConfig(restarts=5, seed=11)
        d1, s1 = search_structure(ctx1, Dag(5, frozenset()), cfg)
        d2, s2 = search_structure(ctx2, Dag(5, frozenset()), cfg)
        assert d1.edges == d2.edges and s1 == s2


class TestExhaustive:
    def test_single_node(self):
        dag, _ = exhaustive_search(ctx_for(np.eye(1)), 1)
        assert dag.edges == frozenset()

    def test_identity_two_nodes(self):
        dag, _ = exhaustive_search(ctx_for(np.eye(2)), 2)
        assert dag.edges == frozenset()

    def test_bounds_enforced(self):
        with pytest.raises(InputError):
            exhaustive_search(ctx_for(np.eye(7)), 7)

    def test_beats_hill_climbing(self, rng):
        for _ in range(10):
            sigma = random_correlation(rng, 3)
            ctx = ctx_for(sigma, n_obs=200, lam=1.5)
            _, best = exhaustive_search(ctx, 3)
            _, hc = search_structure(ctx, Dag(3, frozenset()))
            assert best >= hc - 1e-12


def test_restarts_reach_exhaustive_optimum(rng):
    hits = 0
    for _ in range(20):
        sigma = random_correlation(rng, 4)
        ctx = ctx_for(sigma, n_obs=300, lam=1.0)
        _, best = exhaustive_search(ctx, 4)
        _, hc = search_structure(ctx, Dag(4, frozenset()),
                                 SearchConfig(restarts=20, seed=3))
        if hc >= best - 1e-6:
            hits += 1
    assert hits >= 19
