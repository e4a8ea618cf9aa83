"""Structure search: restart hill climbing plus an exhaustive oracle.

Hill climbing walks single-edge moves (add, delete, reverse), taking the
best strictly improving move each step and refusing moves that would
create a cycle.  Neighbor enumeration order is fixed, so runs are
reproducible under a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .graph import Dag, all_dag_edge_sets, topological_order
from .scoring import ScoreContext, node_score, total_score

_IMPROVEMENT_EPS = 1e-9


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 0
    max_parents: int | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.restarts < 0:
            raise InputError("restarts must be >= 0")
        if self.max_parents is not None and self.max_parents < 0:
            raise InputError("max_parents must be >= 0")


def _has_path(children: list[set[int]], src: int, dst: int) -> bool:
    if src == dst:
        return True
    stack = [src]
    seen = {src}
    while stack:
        u = stack.pop()
        for v in children[u]:
            if v == dst:
                return True
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def _hill_climb(ctx: ScoreContext, parents: list[set[int]],
                max_parents: int | None) -> tuple[list[set[int]], float]:
    n = ctx.n
    children: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        for j in parents[i]:
            children[j].add(i)
    scores = [node_score(ctx, i, parents[i]) for i in range(n)]

    while True:
        best_delta = _IMPROVEMENT_EPS
        best_move = None
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if j in parents[i]:
                    # delete j -> i
                    new_i = node_score(ctx, i, parents[i] - {j})
                    delta = new_i - scores[i]
                    if delta > best_delta:
                        best_delta, best_move = delta, ("del", j, i, new_i, None)
                    # reverse j -> i into i -> j
                    if max_parents is not None and len(parents[j]) >= max_parents:
                        continue
                    children[j].discard(i)
                    cycle = _has_path(children, j, i)
                    children[j].add(i)
                    if cycle:
                        continue
                    new_j = node_score(ctx, j, parents[j] | {i})
                    delta = (new_i - scores[i]) + (new_j - scores[j])
                    if delta > best_delta:
                        best_delta, best_move = delta, ("rev", j, i, new_i, new_j)
                else:
                    # add j -> i
                    if max_parents is not None and len(parents[i]) >= max_parents:
                        continue
                    if _has_path(children, i, j):
                        continue
                    new_i = node_score(ctx, i, parents[i] | {j})
                    delta = new_i - scores[i]
                    if delta > best_delta:
                        best_delta, best_move = delta, ("add", j, i, new_i, None)
        if best_move is None:
            return parents, math.fsum(scores)
        kind, j, i, new_i, new_j = best_move
        if kind == "add":
            parents[i].add(j)
            children[j].add(i)
        elif kind == "del":
            parents[i].discard(j)
            children[j].discard(i)
        else:
            parents[i].discard(j)
            children[j].discard(i)
            parents[j].add(i)
            children[i].add(j)
            scores[j] = new_j
        scores[i] = new_i


def _order_greedy_start(ctx: ScoreContext, order: np.ndarray,
                        max_parents: int | None) -> list[set[int]]:
    """Forward selection of parents among order-predecessors, per node."""
    n = ctx.n
    position = {int(v): r for r, v in enumerate(order)}
    parents: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        preds = [j for j in range(n) if position[j] < position[i]]
        current = node_score(ctx, i, parents[i])
        while preds:
            if max_parents is not None and len(parents[i]) >= max_parents:
                break
            best_gain, best_j = _IMPROVEMENT_EPS, None
            for j in preds:
                if j in parents[i]:
                    continue
                gain = node_score(ctx, i, parents[i] | {j}) - current
                if gain > best_gain:
                    best_gain, best_j = gain, j
            if best_j is None:
                break
            parents[i].add(best_j)
            current = node_score(ctx, i, parents[i])
    return parents


def _shuffled_order(order: list[int], rng: np.random.Generator,
                    swaps: int) -> np.ndarray:
    out = list(order)
    for _ in range(swaps):
        a = int(rng.integers(0, len(out) - 1))
        out[a], out[a + 1] = out[a + 1], out[a]
    return np.array(out)


def _perturbed_start(parents: list[set[int]], rng: np.random.Generator,
                     kicks: int) -> list[set[int]]:
    """Random legal single-edge edits of an incumbent DAG."""
    n = len(parents)
    ps = [set(s) for s in parents]
    children: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        for j in ps[i]:
            children[j].add(i)
    for _ in range(kicks):
        op = int(rng.integers(0, 3))
        edges = [(j, i) for i in range(n) for j in sorted(ps[i])]
        if op == 0 and edges:
            j, i = edges[int(rng.integers(len(edges)))]
            ps[i].discard(j)
            children[j].discard(i)
        elif op == 1 and n > 1:
            for _ in range(4 * n):
                i, j = (int(x) for x in rng.integers(0, n, 2))
                if i == j or j in ps[i] or _has_path(children, i, j):
                    continue
                ps[i].add(j)
                children[j].add(i)
                break
        elif op == 2 and edges:
            j, i = edges[int(rng.integers(len(edges)))]
            ps[i].discard(j)
            children[j].discard(i)
            if not _has_path(children, j, i):
                ps[j].add(i)
                children[i].add(j)
            else:
                ps[i].add(j)
                children[j].add(i)
    return ps


def search_structure(ctx: ScoreContext, init: Dag,
                     config: SearchConfig = SearchConfig()) -> tuple[Dag, float]:
    """Best local optimum of restart hill climbing, warm-started at ``init``.

    Each restart climbs from a randomized DAG built one of three ways:
    greedy parent selection along an adjacent-swap shuffle of the
    incumbent optimum's topological order (most weight; order moves reach
    basins single-edge moves cannot), greedy selection along a fresh
    random order, or random single-edge perturbations of the incumbent.
    A climb from the empty graph always runs first.  The best local
    optimum over all climbs is returned.
    """
    if init.n != ctx.n:
        raise InputError("initial graph size does not match the score context")
    best_parents, best_score = _hill_climb(
        ctx, [set(ps) for ps in init.parent_sets()], config.max_parents)
    cand_parents, cand_score = _hill_climb(
        ctx, [set() for _ in range(ctx.n)], config.max_parents)
    if cand_score > best_score:
        best_parents, best_score = cand_parents, cand_score
    if config.restarts > 0 and ctx.n > 1:
        rng = np.random.default_rng(config.seed)
        for _ in range(config.restarts):
            u = rng.random()
            if u < 0.6:
                base = topological_order(Dag.from_parent_sets(best_parents))
                order = _shuffled_order(base, rng, int(rng.integers(1, 5)))
                start = _order_greedy_start(ctx, order, config.max_parents)
            elif u < 0.8:
                start = _order_greedy_start(ctx, rng.permutation(ctx.n),
                                            config.max_parents)
            else:
                start = _perturbed_start(best_parents, rng,
                                         int(rng.integers(2, 9)))
            cand_parents, cand_score = _hill_climb(ctx, start,
                                                   config.max_parents)
            if cand_score > best_score:
                best_parents, best_score = cand_parents, cand_score
    return Dag.from_parent_sets(best_parents), best_score


def exhaustive_search(ctx: ScoreContext, n: int) -> tuple[Dag, float]:
    """Global optimum by scoring every DAG; ties break on lexicographic edges."""
    if n != ctx.n:
        raise InputError("n does not match the score context")
    if n > 6:
        raise InputError("exhaustive search limited to n <= 6")
    best_edges = None
    best_key: tuple[float, list] | None = None
    for edges in all_dag_edge_sets(n):
        tmp: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            tmp[v].add(u)
        parents = [frozenset(s) for s in tmp]
        score = math.fsum(node_score(ctx, i, parents[i]) for i in range(n))
        key = sorted(edges)
        if best_key is None or score > best_key[0] or \
                (score == best_key[0] and key < best_key[1]):
            best_key = (score, key)
            best_edges = edges
    assert best_edges is not None and best_key is not None
    return Dag(n, best_edges), best_key[0]
