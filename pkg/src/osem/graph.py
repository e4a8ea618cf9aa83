"""Directed acyclic graphs, patterns, CPDAGs, and conversions between them.

A *pattern* keeps the skeleton and orients only the edges that take part
in a v-structure (a collider i -> k <- j with i, j non-adjacent).  A
*CPDAG* additionally orients every edge whose direction is shared by all
members of the Markov equivalence class (closure of the pattern under
the Meek orientation rules).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import InputError, StructuralError

Edge = tuple[int, int]


def _check_endpoints(edges: Iterable[Edge], n: int) -> None:
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise InputError(f"edge ({u}, {v}) out of range for n={n}")
        if u == v:
            raise InputError(f"self-loop at node {u}")


def is_acyclic(edges: Iterable[Edge], n: int) -> bool:
    """True iff the directed edge set has no cycle (Kahn's algorithm)."""
    edges = list(edges)
    _check_endpoints(edges, n)
    children: list[list[int]] = [[] for _ in range(n)]
    indeg = [0] * n
    for u, v in edges:
        children[u].append(v)
        indeg[v] += 1
    stack = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for v in children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    return seen == n


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph on nodes 0..n-1 with optional edge weights."""

    n: int
    edges: frozenset[Edge]
    weights: tuple[tuple[Edge, float], ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        if len({frozenset(e) for e in self.edges}) != len(self.edges):
            raise StructuralError("two-cycle: both orientations of a pair present")
        if not is_acyclic(self.edges, self.n):
            raise StructuralError("edge set contains a directed cycle")
        if self.weights is not None:
            w = tuple(sorted(((tuple(e), float(x)) for e, x in dict(self.weights).items())))
            for e, _ in w:
                if e not in self.edges:
                    raise InputError(f"weight given for missing edge {e}")
            object.__setattr__(self, "weights", w)

    @property
    def weight_map(self) -> dict[Edge, float]:
        return {} if self.weights is None else dict(self.weights)

    def parents(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(u for u, v in self.edges if v == i))

    def parent_sets(self) -> list[frozenset[int]]:
        out: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            out[v].add(u)
        return [frozenset(s) for s in out]

    @classmethod
    def from_parent_sets(cls, parent_sets: Iterable[Iterable[int]],
                         weights: Mapping[Edge, float] | None = None) -> "Dag":
        ps = [set(s) for s in parent_sets]
        edges = frozenset((u, i) for i, s in enumerate(ps) for u in s)
        return cls(len(ps), edges, tuple(weights.items()) if weights else None)


@dataclass(frozen=True)
class Pattern:
    """Skeleton plus the v-structure orientations only."""

    n: int
    skeleton: frozenset[Edge]          # pairs stored as (min, max)
    directed: frozenset[Edge]          # (parent, child), each in a v-structure

    def __post_init__(self) -> None:
        skel = frozenset((min(u, v), max(u, v)) for u, v in self.skeleton)
        object.__setattr__(self, "skeleton", skel)
        object.__setattr__(self, "directed", frozenset(tuple(e) for e in self.directed))
        _check_endpoints(skel, self.n)
        for u, v in self.directed:
            if (min(u, v), max(u, v)) not in skel:
                raise StructuralError(f"directed edge {(u, v)} missing from skeleton")
        for u, v in self.directed:
            if not any(w != u and (w, v) in self.directed
                       and (min(u, w), max(u, w)) not in skel
                       for w in range(self.n)):
                raise StructuralError(f"directed edge {(u, v)} is in no v-structure")

    def v_structures(self) -> frozenset[tuple[int, int, int]]:
        """Collider triples (i, k, j) with i < j, both directed into k."""
        out = set()
        for k in range(self.n):
            into = sorted(u for u, v in self.directed if v == k)
            for i, j in itertools.combinations(into, 2):
                if (min(i, j), max(i, j)) not in self.skeleton:
                    out.add((i, k, j))
        return frozenset(out)


@dataclass(frozen=True)
class Cpdag:
    """Completed partially directed acyclic graph."""

    n: int
    directed: frozenset[Edge]
    undirected: frozenset[Edge]        # pairs stored as (min, max)

    def __post_init__(self) -> None:
        und = frozenset((min(u, v), max(u, v)) for u, v in self.undirected)
        object.__setattr__(self, "undirected", und)
        object.__setattr__(self, "directed", frozenset(tuple(e) for e in self.directed))
        _check_endpoints(self.directed, self.n)
        _check_endpoints(und, self.n)
        dir_pairs = {(min(u, v), max(u, v)) for u, v in self.directed}
        if dir_pairs & und:
            raise StructuralError("edge both directed and undirected")
        if len(dir_pairs) != len(self.directed):
            raise StructuralError("two-cycle among directed edges")

    def skeleton(self) -> frozenset[Edge]:
        return self.undirected | frozenset(
            (min(u, v), max(u, v)) for u, v in self.directed)


def topological_order(dag: Dag) -> list[int]:
    """Parents before children; ties broken by ascending node index."""
    children: list[list[int]] = [[] for _ in range(dag.n)]
    indeg = [0] * dag.n
    for u, v in dag.edges:
        children[u].append(v)
        indeg[v] += 1
    import heapq

    heap = [i for i in range(dag.n) if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    if len(order) != dag.n:
        raise StructuralError("cycle detected during topological sort")
    return order


def dag_to_pattern(dag: Dag) -> Pattern:
    skeleton = frozenset((min(u, v), max(u, v)) for u, v in dag.edges)
    adjacent = set(skeleton)
    directed: set[Edge] = set()
    for k in range(dag.n):
        pa = dag.parents(k)
        for i, j in itertools.combinations(pa, 2):
            if (min(i, j), max(i, j)) not in adjacent:
                directed.add((i, k))
                directed.add((j, k))
    return Pattern(dag.n, skeleton, frozenset(directed))


def markov_equivalent(d1: Dag, d2: Dag) -> bool:
    """Same skeleton and same v-structures."""
    if d1.n != d2.n:
        raise InputError("node counts differ")
    p1, p2 = dag_to_pattern(d1), dag_to_pattern(d2)
    return p1.skeleton == p2.skeleton and p1.v_structures() == p2.v_structures()


def _meek_closure(n: int, directed: set[Edge], undirected: set[Edge]) -> None:
    """Orient ``undirected`` pairs in place using Meek rules R1-R3.

    R4 is omitted: it can only fire in the presence of external background
    knowledge, never when starting from the pattern of a DAG.
    """
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v in directed | undirected:
        adj[u].add(v)
        adj[v].add(u)

    def orient(u: int, v: int) -> None:
        undirected.discard((min(u, v), max(u, v)))
        directed.add((u, v))

    changed = True
    while changed:
        changed = False
        for a, b in list(directed):
            # R1: a -> b - c with a, c non-adjacent  =>  b -> c
            for c in list(adj[b]):
                if c != a and (min(b, c), max(b, c)) in undirected and c not in adj[a]:
                    orient(b, c)
                    changed = True
        for u, v in list(undirected):
            if (u, v) not in undirected:
                continue
            for a, b in ((u, v), (v, u)):
                # R2: a -> w -> b for some w, with a - b  =>  a -> b
                if any((a, w) in directed and (w, b) in directed for w in adj[a]):
                    orient(a, b)
                    changed = True
                    break
                # R3: a - c, a - d, c -> b, d -> b, c, d non-adjacent  =>  a -> b
                spouses = [c for c in adj[a]
                           if (min(a, c), max(a, c)) in undirected and (c, b) in directed]
                if any(d not in adj[c] for c, d in itertools.combinations(spouses, 2)):
                    orient(a, b)
                    changed = True
                    break


def dag_to_cpdag(dag: Dag) -> Cpdag:
    """Canonical representative of the Markov equivalence class of ``dag``."""
    pattern = dag_to_pattern(dag)
    directed = set(pattern.directed)
    dir_pairs = {(min(u, v), max(u, v)) for u, v in directed}
    undirected = {e for e in pattern.skeleton if e not in dir_pairs}
    _meek_closure(dag.n, directed, undirected)
    return Cpdag(dag.n, frozenset(directed), frozenset(undirected))


def cpdag_to_pattern(cpdag: Cpdag) -> Pattern:
    """Drop every orientation that is not part of a v-structure."""
    skeleton = cpdag.skeleton()
    adjacent = set(skeleton)
    keep: set[Edge] = set()
    for u, v in cpdag.directed:
        for w, x in cpdag.directed:
            if x == v and w != u and (min(u, w), max(u, w)) not in adjacent:
                keep.add((u, v))
                break
    return Pattern(cpdag.n, skeleton, frozenset(keep))


def full_dag(n: int, order: Iterable[int] | None = None) -> Dag:
    """Complete DAG with edges following ``order`` (default: 0..n-1)."""
    seq = list(order) if order is not None else list(range(n))
    edges = frozenset((seq[a], seq[b]) for a in range(n) for b in range(a + 1, n))
    return Dag(n, edges)


def random_dag(n: int, expected_neighbors: float,
               weight_range: tuple[float, float] = (0.4, 1.0),
               rng: np.random.Generator | None = None) -> Dag:
    """Random weighted DAG with ``expected_neighbors`` expected degree per node.

    A uniformly random node order is fixed, each forward pair is included
    independently with probability d/(n-1), and each included edge gets a
    weight with magnitude uniform in ``weight_range`` and a fair random sign.
    """
    if rng is None:
        rng = np.random.default_rng()
    if not 0 < expected_neighbors <= n - 1:
        raise InputError(f"expected_neighbors must lie in (0, {n - 1}]")
    lo, hi = weight_range
    if not 0 <= lo < hi:
        raise InputError("invalid weight range")
    order = rng.permutation(n)
    p = expected_neighbors / (n - 1)
    edges: dict[Edge, float] = {}
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p:
                mag = rng.uniform(lo, hi)
                sign = 1.0 if rng.random() < 0.5 else -1.0
                edges[(int(order[a]), int(order[b]))] = sign * mag
    return Dag(n, frozenset(edges), tuple(edges.items()))


def all_dag_edge_sets(n: int) -> list[frozenset[Edge]]:
    """Every DAG on n nodes, as edge sets.  Exponential; refuses n > 6."""
    if n > 6:
        raise InputError("exhaustive DAG enumeration limited to n <= 6")
    pairs = list(itertools.combinations(range(n), 2))
    npairs = len(pairs)
    seen: set[frozenset[Edge]] = set()
    for perm in itertools.permutations(range(n)):
        for mask in range(1 << npairs):
            edges = frozenset((perm[a], perm[b])
                              for idx, (a, b) in enumerate(pairs) if mask >> idx & 1)
            seen.add(edges)
    return sorted(seen, key=lambda e: sorted(e))


# --- JSON wire format -------------------------------------------------------
#
# DAG:            {"n": n, "edges": [[parent, child, weight?], ...]}
# CPDAG/pattern:  {"n": n, "edges": [{"from": u, "to": v, "undirected": bool}, ...]}
#                 with each undirected pair appearing once per direction.


def dag_to_json(dag: Dag) -> dict:
    wm = dag.weight_map
    entries = []
    for u, v in sorted(dag.edges):
        entries.append([u, v, wm[(u, v)]] if (u, v) in wm else [u, v])
    return {"n": dag.n, "edges": entries}


def cpdag_to_json(g: Cpdag | Pattern) -> dict:
    if isinstance(g, Pattern):
        directed = g.directed
        dir_pairs = {(min(u, v), max(u, v)) for u, v in directed}
        undirected = {e for e in g.skeleton if e not in dir_pairs}
    else:
        directed, undirected = g.directed, g.undirected
    entries = [{"from": u, "to": v, "undirected": False} for u, v in sorted(directed)]
    for u, v in sorted(undirected):
        entries.append({"from": u, "to": v, "undirected": True})
        entries.append({"from": v, "to": u, "undirected": True})
    return {"n": g.n, "edges": entries}


def graph_from_json(obj: dict) -> Dag | Cpdag:
    """Parse either wire format; partially directed graphs load as Cpdag."""
    try:
        n = int(obj["n"])
        entries = obj["edges"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed graph JSON: {exc}") from exc
    if all(isinstance(e, (list, tuple)) for e in entries):
        weights: dict[Edge, float] = {}
        edges = set()
        for e in entries:
            u, v = int(e[0]), int(e[1])
            edges.add((u, v))
            if len(e) > 2:
                weights[(u, v)] = float(e[2])
        return Dag(n, frozenset(edges), tuple(weights.items()) if weights else None)
    directed: set[Edge] = set()
    undirected: set[Edge] = set()
    for e in entries:
        u, v = int(e["from"]), int(e["to"])
        if e.get("undirected", False):
            undirected.add((min(u, v), max(u, v)))
        else:
            directed.add((u, v))
    return Cpdag(n, frozenset(directed), frozenset(undirected))
