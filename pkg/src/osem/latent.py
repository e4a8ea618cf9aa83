"""Latent Gaussian DAG model: parameterizations and transforms.

The hidden vector Y follows a zero-mean multivariate normal whose
distribution factorizes over a DAG; each observed ordinal variable is Y_i
cut at per-variable thresholds.  Identifiability pins all latent means to
zero and the covariance to correlation form, so a model is (dag,
thresholds, correlation matrix) with the per-node regression parameters
(b_i, v_i) derivable from the correlation matrix and back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import InputError, NumericError, StructuralError
from .graph import Dag, topological_order


@dataclass(frozen=True)
class Thresholds:
    """Per-variable cut points, padded with -inf / +inf sentinels.

    cuts[i] has length L_i + 1: cuts[i][0] = -inf, cuts[i][-1] = +inf and
    the interior strictly increasing.  Level code l corresponds to the
    interval [cuts[i][l], cuts[i][l+1]).
    """

    cuts: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        frozen = []
        for i, c in enumerate(self.cuts):
            c = np.asarray(c, dtype=float)
            if c.ndim != 1 or len(c) < 3:
                raise InputError(f"variable {i}: need at least one interior cut")
            if not (np.isneginf(c[0]) and np.isposinf(c[-1])):
                raise InputError(f"variable {i}: cuts must be padded with +-inf")
            if not np.all(np.diff(c) > 0):
                raise InputError(f"variable {i}: cuts not strictly increasing")
            if not np.all(np.isfinite(c[1:-1])):
                raise InputError(f"variable {i}: interior cuts must be finite")
            c.flags.writeable = False
            frozen.append(c)
        object.__setattr__(self, "cuts", tuple(frozen))

    @property
    def n(self) -> int:
        return len(self.cuts)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(len(c) - 1 for c in self.cuts)

    def interval(self, i: int, code: int) -> tuple[float, float]:
        """[lo, hi) interval of variable i at level ``code``."""
        c = self.cuts[i]
        if not 0 <= code < len(c) - 1:
            raise InputError(f"level code {code} out of range for variable {i}")
        return float(c[code]), float(c[code + 1])

    def rectangle(self, x: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """Componentwise bounds of the hyperrectangle coded by row ``x``."""
        lo = np.empty(self.n)
        hi = np.empty(self.n)
        for i, code in enumerate(x):
            lo[i], hi[i] = self.interval(i, int(code))
        return lo, hi

    @classmethod
    def from_interior(cls, interior: Sequence[Sequence[float]]) -> "Thresholds":
        return cls(tuple(np.concatenate(([-np.inf], np.asarray(c, float), [np.inf]))
                         for c in interior))

    def interior(self) -> list[list[float]]:
        return [list(map(float, c[1:-1])) for c in self.cuts]


@dataclass(frozen=True)
class NodeParams:
    """Per-node regression coefficients onto the parents and residual variance."""

    coefficients: tuple[dict[int, float], ...]   # node -> {parent: b}
    variances: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.coefficients) != len(self.variances):
            raise InputError("coefficient/variance length mismatch")
        for i, v in enumerate(self.variances):
            if not v > 0:
                raise InputError(f"node {i}: conditional variance must be positive")
        object.__setattr__(self, "coefficients",
                           tuple(dict(c) for c in self.coefficients))
        object.__setattr__(self, "variances", tuple(float(v) for v in self.variances))

    @property
    def n(self) -> int:
        return len(self.variances)


def check_correlation(sigma: np.ndarray, *, atol: float = 1e-8) -> np.ndarray:
    """Validate symmetry, unit diagonal, and positive definiteness."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InputError("correlation matrix must be square")
    if not np.allclose(sigma, sigma.T, atol=atol):
        raise InputError("correlation matrix not symmetric")
    if not np.allclose(np.diag(sigma), 1.0, atol=atol):
        raise InputError("correlation matrix diagonal must be 1")
    sym = 0.5 * (sigma + sigma.T)
    try:
        np.linalg.cholesky(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericError("correlation matrix not positive definite") from exc
    return sym


@dataclass(frozen=True)
class LatentModel:
    dag: Dag
    thresholds: Thresholds
    sigma: np.ndarray            # correlation matrix of the latents
    node_params: NodeParams

    def __post_init__(self) -> None:
        sigma = check_correlation(self.sigma)
        sigma.flags.writeable = False
        object.__setattr__(self, "sigma", sigma)
        if self.thresholds.n != self.dag.n or self.node_params.n != self.dag.n:
            raise InputError("model component dimensions disagree")
        implied, _ = covariance_to_correlation(
            params_to_covariance(self.node_params, self.dag))
        if not np.allclose(implied, sigma, atol=1e-6):
            raise InputError("node parameters inconsistent with correlation matrix")


def params_to_covariance(params: NodeParams, dag: Dag) -> np.ndarray:
    """Covariance (I - B)^-1 V (I - B)^-T implied by nodewise regressions."""
    n = dag.n
    if params.n != n:
        raise InputError("parameter/node count mismatch")
    b_mat = np.zeros((n, n))
    parent_sets = dag.parent_sets()
    for i in range(n):
        coef = params.coefficients[i]
        if set(coef) != set(parent_sets[i]):
            raise InputError(f"node {i}: coefficient support differs from parent set")
        for j, b in coef.items():
            b_mat[i, j] = b
    ident = np.eye(n)
    try:
        inv = np.linalg.solve(ident - b_mat, ident)
    except np.linalg.LinAlgError as exc:   # unreachable for acyclic B
        raise StructuralError("I - B singular") from exc
    cov = inv @ np.diag(params.variances) @ inv.T
    return 0.5 * (cov + cov.T)


def covariance_to_correlation(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rescale a covariance to unit diagonal; returns (correlation, scales)."""
    cov = np.asarray(cov, dtype=float)
    d = np.diag(cov).copy()
    if np.any(d <= 0):
        raise NumericError("non-positive diagonal entry in covariance")
    scale = np.sqrt(d)
    corr = cov / np.outer(scale, scale)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr, scale


def mvn_log_density(y: np.ndarray, sigma: np.ndarray) -> float:
    """Log density of N(0, sigma) at y."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    try:
        chol = scipy.linalg.cho_factor(sigma, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError("covariance not positive definite") from exc
    z = scipy.linalg.cho_solve(chol, y)
    logdet = 2.0 * np.sum(np.log(np.diag(chol[0])))
    return float(-0.5 * (n * np.log(2 * np.pi) + logdet + y @ z))


def complete_log_density(y: Sequence[float], x: Sequence[int],
                         model: LatentModel) -> float:
    """Joint log density of a latent row and its ordinal coding.

    The ordinal part is an indicator: the result is the Gaussian log
    density when every y_i lies in the interval coded by x_i, else -inf.
    """
    y = np.asarray(y, dtype=float)
    if len(y) != model.dag.n or len(x) != model.dag.n:
        raise InputError("dimension mismatch")
    lo, hi = model.thresholds.rectangle(x)
    if np.all((y >= lo) & (y < hi)):
        return mvn_log_density(y, model.sigma)
    return -np.inf
