"""Scratch benchmark of search variants (not part of the package)."""
import math
import time

import numpy as np

from osem.simulate import make_benchmark
from osem.scoring import ScoreContext, total_score, node_score
from osem.search import search_structure, SearchConfig, _hill_climb
from osem.graph import full_dag, Dag, dag_to_pattern
from osem.metrics import pattern_confusion, shd_pattern


def children_of(parents, n):
    ch = [set() for _ in range(n)]
    for i in range(n):
        for j in parents[i]:
            ch[j].add(i)
    return ch


def has_path(children, src, dst):
    stack, seen = [src], {src}
    while stack:
        u = stack.pop()
        for v in children[u]:
            if v == dst:
                return True
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def perturb(parents, rng, n, m):
    ps = [set(s) for s in parents]
    for _ in range(m):
        op = rng.integers(0, 3)
        edges = [(j, i) for i in range(n) for j in ps[i]]
        if op == 0 and edges:
            j, i = edges[rng.integers(len(edges))]
            ps[i].discard(j)
        elif op == 1:
            for _ in range(30):
                i, j = rng.integers(0, n, 2)
                if i != j and j not in ps[i]:
                    if not has_path(children_of(ps, n), i, j):
                        ps[i].add(j)
                        break
        elif edges:
            j, i = edges[rng.integers(len(edges))]
            ps[i].discard(j)
            if not has_path(children_of(ps, n), j, i):
                ps[j].add(i)
            else:
                ps[i].add(j)
    return ps


def ils(ctx, restarts, seed, kick_hi=10):
    rng = np.random.default_rng(seed)
    best, best_score = _hill_climb(ctx, [set() for _ in range(ctx.n)], None)
    for r in range(restarts):
        m = int(rng.integers(2, kick_hi + 1))
        cand, cand_score = _hill_climb(ctx, perturb(best, rng, ctx.n, m), None)
        if cand_score > best_score:
            best, best_score = cand, cand_score
    return best, best_score


def order_greedy(ctx, order):
    n = ctx.n
    parents = [set() for _ in range(n)]
    pos = {v: r for r, v in enumerate(order)}
    for i in range(n):
        preds = [j for j in range(n) if pos[j] < pos[i]]
        cur = node_score(ctx, i, parents[i])
        while True:
            best_gain, best_j = 1e-9, None
            for j in preds:
                if j in parents[i]:
                    continue
                s = node_score(ctx, i, parents[i] | {j})
                if s - cur > best_gain:
                    best_gain, best_j = s - cur, j
            if best_j is None:
                break
            parents[i].add(best_j)
            cur = node_score(ctx, i, parents[i] | set())
    return parents


def order_restarts(ctx, restarts, seed):
    rng = np.random.default_rng(seed)
    best, best_score = _hill_climb(ctx, [set() for _ in range(ctx.n)], None)
    for _ in range(restarts):
        order = rng.permutation(ctx.n)
        cand, cand_score = _hill_climb(ctx, order_greedy(ctx, order), None)
        if cand_score > best_score:
            best, best_score = cand, cand_score
    return best, best_score


def tabu(ctx, seed, max_sideways=60, tabu_len=12):
    n = ctx.n
    parents, _ = _hill_climb(ctx, [set() for _ in range(n)], None)
    scores = [node_score(ctx, i, parents[i]) for i in range(n)]
    best = [set(s) for s in parents]
    best_score = math.fsum(scores)
    tabu_list: list[tuple] = []
    sideways = 0
    while sideways < max_sideways:
        children = children_of(parents, n)
        best_delta, best_move = -1e18, None
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if j in parents[i]:
                    if ("add", j, i) not in tabu_list:
                        new_i = node_score(ctx, i, parents[i] - {j})
                        delta = new_i - scores[i]
                        if delta > best_delta:
                            best_delta, best_move = delta, ("del", j, i, new_i, None)
                    children[j].discard(i)
                    ok = not has_path(children, j, i)
                    children[j].add(i)
                    if ok and ("rev", i, j) not in tabu_list:
                        new_i = node_score(ctx, i, parents[i] - {j})
                        new_j = node_score(ctx, j, parents[j] | {i})
                        delta = (new_i - scores[i]) + (new_j - scores[j])
                        if delta > best_delta:
                            best_delta, best_move = delta, ("rev", j, i, new_i, new_j)
                else:
                    if ("del", j, i) in tabu_list:
                        continue
                    if not has_path(children, i, j):
                        new_i = node_score(ctx, i, parents[i] | {j})
                        delta = new_i - scores[i]
                        if delta > best_delta:
                            best_delta, best_move = delta, ("add", j, i, new_i, None)
        if best_move is None:
            break
        kind, j, i, new_i, new_j = best_move
        if kind == "add":
            parents[i].add(j)
            tabu_list.append(("add", j, i))
        elif kind == "del":
            parents[i].discard(j)
            tabu_list.append(("del", j, i))
        else:
            parents[i].discard(j)
            parents[j].add(i)
            tabu_list.append(("rev", j, i))
        scores[i] = new_i
        if new_j is not None:
            scores[j] = new_j
        tabu_list = tabu_list[-tabu_len:]
        total = math.fsum(scores)
        if total > best_score + 1e-9:
            best, best_score = [set(s) for s in parents], total
            sideways = 0
        else:
            sideways += 1
    return best, best_score


def quality(parents_or_dag, truth, p):
    d = parents_or_dag if isinstance(parents_or_dag, Dag) else \
        Dag.from_parent_sets(parents_or_dag)
    tp, fp, _ = pattern_confusion(dag_to_pattern(d), truth)
    return tp / p, fp / p, shd_pattern(dag_to_pattern(d), truth) / p


def main():
    for seed in range(4):
        bench = make_benchmark(12, 4, 500, 3, 2.0, seed=seed)
        truth = dag_to_pattern(bench.dag)
        p = len(truth.skeleton)
        ctx = ScoreContext(bench.sigma, 500, 6.0)
        truth_score = total_score(ctx, bench.dag)
        rows = []
        t0 = time.perf_counter()
        d0, s0 = search_structure(ctx, full_dag(12), SearchConfig(restarts=1, seed=0))
        rows.append(("current", s0, quality(d0, truth, p), time.perf_counter() - t0))
        t0 = time.perf_counter()
        bp, bs = ils(ctx, 60, seed)
        rows.append(("ils60", bs, quality(bp, truth, p), time.perf_counter() - t0))
        t0 = time.perf_counter()
        bp, bs = order_restarts(ctx, 30, seed)
        rows.append(("order30", bs, quality(bp, truth, p), time.perf_counter() - t0))
        t0 = time.perf_counter()
        bp, bs = tabu(ctx, seed)
        rows.append(("tabu", bs, quality(bp, truth, p), time.perf_counter() - t0))
        print(f"--- seed {seed}: truth score {truth_score:.2f}, P={p}")
        for name, s, (tpr, fprp, shd), dt in rows:
            print(f"  {name:8s} score={s:9.2f} tpr={tpr:.2f} fprp={fprp:.2f} "
                  f"shd/p={shd:.2f}  [{dt:.2f}s]")


if __name__ == "__main__":
    main()
