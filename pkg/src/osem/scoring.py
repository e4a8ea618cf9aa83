"""Decomposable expected-BIC score over (node, parent set) pairs.

The score of a DAG is a sum of per-node terms depending only on that
node's parent set, so single-edge moves re-score at most two nodes.
Terms are cached; CPython dict operations make concurrent lookups and
insertions safe without extra locking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InputError, NumericError
from .graph import Dag

_MIN_CONDITIONAL_VARIANCE = 1e-12


@dataclass
class ScoreContext:
    sigma_hat: np.ndarray      # expected covariance, correlation-scaled
    n_obs: int                 # N
    lam: float = 6.0           # multiplier on the BIC penalty
    cache: dict[tuple[int, frozenset[int]], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        sig = np.asarray(self.sigma_hat, dtype=float)
        if sig.ndim != 2 or sig.shape[0] != sig.shape[1]:
            raise InputError("sigma_hat must be square")
        if not np.allclose(sig, sig.T, atol=1e-8):
            raise InputError("sigma_hat must be symmetric")
        if self.n_obs < 1:
            raise InputError("n_obs must be positive")
        if self.lam < 0:
            raise InputError("penalty multiplier must be >= 0")
        self.sigma_hat = 0.5 * (sig + sig.T)

    @property
    def n(self) -> int:
        return self.sigma_hat.shape[0]


def conditional_variance(sigma: np.ndarray, i: int, pa: tuple[int, ...]) -> float:
    """Residual variance of node i regressed on ``pa`` under ``sigma``."""
    if not pa:
        return float(sigma[i, i])
    idx = list(pa)
    block = sigma[np.ix_(idx, idx)]
    cross = sigma[idx, i]
    try:
        chol = scipy.linalg.cho_factor(block, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(f"parent block of node {i} not positive definite") from exc
    return float(sigma[i, i] - cross @ scipy.linalg.cho_solve(chol, cross))


def node_score(ctx: ScoreContext, i: int, pa) -> float:
    """Expected-BIC term of node i with parent set ``pa``."""
    pa = frozenset(int(p) for p in pa)
    if i in pa:
        raise InputError(f"node {i} cannot be its own parent")
    key = (i, pa)
    hit = ctx.cache.get(key)
    if hit is not None:
        return hit
    cv = conditional_variance(ctx.sigma_hat, i, tuple(sorted(pa)))
    if cv <= _MIN_CONDITIONAL_VARIANCE:
        raise NumericError(
            f"conditional variance of node {i} given {sorted(pa)} is not positive")
    value = (-0.5 * ctx.n_obs * math.log(cv)
             - ctx.lam * 0.5 * math.log(ctx.n_obs) * (len(pa) + 1))
    ctx.cache[key] = value
    return value


def total_score(ctx: ScoreContext, dag: Dag) -> float:
    """Sum of node terms under the DAG's parent sets."""
    if dag.n != ctx.n:
        raise InputError("graph and score context sizes differ")
    return math.fsum(node_score(ctx, i, ps)
                     for i, ps in enumerate(dag.parent_sets()))
