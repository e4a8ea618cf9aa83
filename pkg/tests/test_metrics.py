import itertools

import numpy as np
import pytest

from osem.errors import InputError
from osem.graph import (Dag, Pattern, all_dag_edge_sets, dag_to_cpdag,
                        dag_to_pattern, random_dag)
from osem.metrics import pattern_confusion, shd_pattern, to_pattern, tpr_fprp


def pat(n, *edges):
    return dag_to_pattern(Dag(n, frozenset(edges)))


COLLIDER = pat(4, (1, 3), (2, 3))
SINGLE_UNDIRECTED = Pattern(4, frozenset({(1, 3)}), frozenset())


class TestPatternConfusion:
    def test_identical(self):
        tp, fp, p = pattern_confusion(COLLIDER, COLLIDER)
        assert (tp, fp, p) == (2.0, 0.0, 2)

    def test_half_credit_for_undirected(self):
        tp, fp, p = pattern_confusion(SINGLE_UNDIRECTED, COLLIDER)
        assert (tp, fp, p) == (0.5, 0.5, 2)

    def test_empty_estimate(self):
        tp, fp, p = pattern_confusion(Pattern(4, frozenset(), frozenset()),
                                      COLLIDER)
        assert (tp, fp, p) == (0.0, 0.0, 2)

    def test_opposite_directions_zero_credit(self):
        est = pat(4, (1, 3), (2, 3), (0, 1))     # 1 -> 3 in a v-structure
        truth = pat(4, (3, 1), (2, 1))           # 3 -> 1 in a v-structure
        tp, _, _ = pattern_confusion(est, truth)
        # shared skeleton edge 1-3 directed opposite ways: no credit
        assert tp == 0.0

    def test_skeleton_only_full_credit(self):
        tp, fp, p = pattern_confusion(SINGLE_UNDIRECTED, COLLIDER,
                                      skeleton_only=True)
        assert (tp, fp, p) == (1.0, 0.0, 2)

    def test_tp_plus_fp_is_estimated_count(self, rng):
        for _ in range(30):
            est = dag_to_pattern(random_dag(6, 3, rng=rng))
            truth = dag_to_pattern(random_dag(6, 3, rng=rng))
            tp, fp, _ = pattern_confusion(est, truth)
            assert tp + fp == pytest.approx(len(est.skeleton))

    def test_size_mismatch(self):
        with pytest.raises(InputError):
            pattern_confusion(pat(3), COLLIDER)


class TestRates:
    def test_perfect(self):
        assert tpr_fprp(2, 0, 2) == (1.0, 0.0)

    def test_half_credit_rates(self):
        assert tpr_fprp(0.5, 0.5, 2) == (0.25, 0.25)

    def test_fprp_can_exceed_one(self):
        assert tpr_fprp(0, 3, 2) == (0.0, 1.5)

    def test_zero_truth_rejected(self):
        with pytest.raises(InputError):
            tpr_fprp(0, 0, 0)


class TestShd:
    def test_identical_zero(self):
        assert shd_pattern(COLLIDER, COLLIDER) == 0

    def test_collider_vs_single_edge(self):
        # one skeleton difference plus one v-structure difference
        assert shd_pattern(SINGLE_UNDIRECTED, COLLIDER) == 2

    def test_single_extra_edge(self):
        assert shd_pattern(Pattern(4, frozenset({(0, 1)}), frozenset()),
                           Pattern(4, frozenset(), frozenset())) == 1

    def test_symmetry_and_identity(self, rng):
        pats = [dag_to_pattern(random_dag(5, 2.5, rng=rng)) for _ in range(8)]
        for a, b in itertools.combinations(pats, 2):
            assert shd_pattern(a, b) == shd_pattern(b, a)
            if shd_pattern(a, b) == 0:
                assert a.skeleton == b.skeleton and a.directed == b.directed
        for a in pats:
            assert shd_pattern(a, a) == 0

    def test_triangle_inequality_spot_check(self, rng):
        for _ in range(50):
            a, b, c = (dag_to_pattern(random_dag(5, 2.5, rng=rng))
                       for _ in range(3))
            assert shd_pattern(a, c) <= shd_pattern(a, b) + shd_pattern(b, c)


def test_relabeling_invariance(rng):
    perm = np.array([3, 0, 2, 4, 1])
    for _ in range(20):
        d1 = random_dag(5, 2.5, rng=rng)
        d2 = random_dag(5, 2.5, rng=rng)
        r1 = Dag(5, frozenset((int(perm[u]), int(perm[v])) for u, v in d1.edges))
        r2 = Dag(5, frozenset((int(perm[u]), int(perm[v])) for u, v in d2.edges))
        before = pattern_confusion(dag_to_pattern(d1), dag_to_pattern(d2))
        after = pattern_confusion(dag_to_pattern(r1), dag_to_pattern(r2))
        assert before == after
        assert shd_pattern(dag_to_pattern(d1), dag_to_pattern(d2)) == \
            shd_pattern(dag_to_pattern(r1), dag_to_pattern(r2))


def test_cpdag_converted_to_pattern_before_comparison():
    # a chain CPDAG carries orientations only through Meek closure when a
    # v-structure forces them; to_pattern must strip non-collider arrows
    d = Dag(4, frozenset({(0, 1), (1, 2), (3, 1)}))     # collider 0 -> 1 <- 3
    c = dag_to_cpdag(d)
    assert (1, 2) in c.directed                          # Meek rule orients it
    p = to_pattern(c)
    assert (1, 2) not in p.directed                      # not a collider edge
    assert p.directed == {(0, 1), (3, 1)}
    assert pattern_confusion(p, dag_to_pattern(d)) == (3.0, 0.0, 3)
