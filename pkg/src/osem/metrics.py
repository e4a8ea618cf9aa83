"""Pattern-level structure recovery metrics: TP with half credit, FP,
TPR, FPRp, and structural Hamming distance."""

from __future__ import annotations

from .errors import InputError
from .graph import Cpdag, Dag, Pattern, cpdag_to_pattern, dag_to_pattern


def to_pattern(g: Dag | Cpdag | Pattern) -> Pattern:
    """Coerce any graph representation to its pattern."""
    if isinstance(g, Pattern):
        return g
    if isinstance(g, Dag):
        return dag_to_pattern(g)
    if isinstance(g, Cpdag):
        return cpdag_to_pattern(g)
    raise InputError(f"cannot convert {type(g).__name__} to a pattern")


def _orientation(pattern: Pattern, u: int, v: int) -> tuple[int, int] | None:
    if (u, v) in pattern.directed:
        return (u, v)
    if (v, u) in pattern.directed:
        return (v, u)
    return None


def pattern_confusion(estimated: Pattern, truth: Pattern,
                      skeleton_only: bool = False) -> tuple[float, float, int]:
    """(TP, FP, P) between two patterns.

    A skeleton edge present in both counts 1 TP when the orientation
    status matches exactly, 0.5 when exactly one side is undirected, and
    0 when both are directed in opposite ways.  With ``skeleton_only``
    every shared edge counts 1.  FP is the estimated edge count minus TP;
    P is the number of edges in the true pattern.
    """
    if estimated.n != truth.n:
        raise InputError("node counts differ")
    tp = 0.0
    for u, v in estimated.skeleton & truth.skeleton:
        if skeleton_only:
            tp += 1.0
            continue
        est_dir = _orientation(estimated, u, v)
        true_dir = _orientation(truth, u, v)
        if est_dir == true_dir:
            tp += 1.0
        elif est_dir is None or true_dir is None:
            tp += 0.5
    fp = len(estimated.skeleton) - tp
    return tp, fp, len(truth.skeleton)


def tpr_fprp(tp: float, fp: float, p: int) -> tuple[float, float]:
    """True and false positive counts scaled by the true edge count."""
    if p < 1:
        raise InputError("true pattern has no edges; rates undefined")
    return tp / p, fp / p


def shd_pattern(estimated: Pattern, truth: Pattern,
                include_v_structures: bool = True) -> int:
    """Skeleton symmetric difference plus v-structure symmetric difference."""
    if estimated.n != truth.n:
        raise InputError("node counts differ")
    shd = len(estimated.skeleton ^ truth.skeleton)
    if include_v_structures:
        shd += len(estimated.v_structures() ^ truth.v_structures())
    return shd
