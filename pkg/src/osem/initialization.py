"""One-time threshold estimation and pairwise-likelihood initialization.

Thresholds are standard-normal quantiles of the empirical cumulative
level frequencies.  The initial correlation matrix is assembled from
polychoric correlations estimated pair by pair, then eigenvalue-smoothed
into positive definiteness.
"""

from __future__ import annotations

import functools
import warnings

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtr, ndtri

from .data import OrdinalDataset
from .errors import InputError, NumericError
from .latent import Thresholds, covariance_to_correlation

_RHO_BOUND = 1.0 - 1e-6
_PROB_FLOOR = 1e-300


def estimate_thresholds(data: OrdinalDataset) -> Thresholds:
    """Standard-normal quantiles of empirical cumulative level frequencies.

    Cumulative fractions are clamped to [1/(2N), 1 - 1/(2N)] before
    inversion so degenerate samples still yield finite cut points.
    """
    n_rows = data.n_rows
    if n_rows < 1:
        raise InputError("empty dataset")
    cuts = []
    for i in range(data.n_vars):
        counts = np.bincount(data.codes[:, i], minlength=data.levels[i])
        cum = np.cumsum(counts)[:-1] / n_rows
        cum = np.clip(cum, 1.0 / (2 * n_rows), 1.0 - 1.0 / (2 * n_rows))
        alpha = ndtri(cum)
        if np.any(np.diff(alpha) <= 0):
            raise NumericError(
                f"variable {data.names[i]!r}: non-monotone thresholds "
                "(empty interior level? compress the dataset first)")
        cuts.append(np.concatenate(([-np.inf], alpha, [np.inf])))
    return Thresholds(tuple(cuts))


@functools.lru_cache(maxsize=8)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _quadrature_order(rho: float) -> int:
    a = abs(rho)
    if a <= 0.8:
        return 32
    if a <= 0.925:
        return 64
    return 128


def _corner_terms(b1: np.ndarray, b2: np.ndarray, rho: float) -> np.ndarray:
    """Accumulated quadrature kernel exp(-(h^2 - 2hk sin t + k^2) / (2 cos^2 t))
    over the corner grid b1 x b2, premultiplied by the quadrature weights.

    The bivariate CDF at corner (h, k) equals Phi(h)Phi(k) plus the sum of
    these terms; infinite corners contribute zero to the correction.
    """
    u, w = _leggauss(_quadrature_order(rho))
    s = float(np.arcsin(rho))
    theta = 0.5 * s * (u + 1.0)
    sin_t = np.sin(theta)
    cos2_t = np.cos(theta) ** 2
    h = np.where(np.isfinite(b1), b1, 0.0)[:, None, None]
    k = np.where(np.isfinite(b2), b2, 0.0)[None, :, None]
    expo = -(h * h - 2.0 * h * k * sin_t + k * k) / (2.0 * cos2_t)
    grid = np.einsum("m,ijm->ij", w, np.exp(expo)) * (s / (4.0 * np.pi))
    finite = np.isfinite(b1)[:, None] & np.isfinite(b2)[None, :]
    return np.where(finite, grid, 0.0)


def bivariate_cell_probs(cuts1: np.ndarray, cuts2: np.ndarray,
                         rho: float) -> np.ndarray:
    """Probabilities of every cell of the two-variable contingency table.

    ``cuts1`` and ``cuts2`` are threshold vectors padded with +-inf; the
    result has shape (len(cuts1) - 1, len(cuts2) - 1).
    """
    if not abs(rho) < 1:
        raise NumericError("correlation magnitude must be below 1")
    p1 = ndtr(cuts1)
    p2 = ndtr(cuts2)
    base = np.diff(p1)[:, None] * np.diff(p2)[None, :]
    if rho == 0.0:
        return base
    corner = _corner_terms(np.asarray(cuts1, float), np.asarray(cuts2, float), rho)
    correction = corner[1:, 1:] - corner[:-1, 1:] - corner[1:, :-1] + corner[:-1, :-1]
    return np.clip(base + correction, 0.0, 1.0)


def bivariate_rectangle_prob(lo1: float, hi1: float, lo2: float, hi2: float,
                             rho: float) -> float:
    """P(lo1 <= Z1 < hi1, lo2 <= Z2 < hi2) for standard bivariate normal."""
    if not (lo1 < hi1 and lo2 < hi2):
        raise InputError("rectangle bounds must satisfy lo < hi")
    cell = bivariate_cell_probs(np.array([lo1, hi1]), np.array([lo2, hi2]), rho)
    return float(cell[0, 0])


def _contingency_table(col_i: np.ndarray, col_j: np.ndarray,
                       li: int, lj: int) -> np.ndarray:
    flat = np.asarray(col_i, dtype=np.int64) * lj + np.asarray(col_j, dtype=np.int64)
    return np.bincount(flat, minlength=li * lj).reshape(li, lj)


def pairwise_correlation(col_i: np.ndarray, col_j: np.ndarray,
                         cuts_i: np.ndarray, cuts_j: np.ndarray) -> float:
    """Polychoric correlation: maximizes the two-variable table likelihood.

    Bounded derivative-free scalar maximization over (-1+1e-6, 1-1e-6).
    """
    col_i = np.asarray(col_i)
    col_j = np.asarray(col_j)
    if col_i.shape != col_j.shape:
        raise InputError("columns must have equal length")
    li, lj = len(cuts_i) - 1, len(cuts_j) - 1
    table = _contingency_table(col_i, col_j, li, lj)
    mask = table > 0
    counts = table[mask]

    def neg_loglik(rho: float) -> float:
        probs = bivariate_cell_probs(cuts_i, cuts_j, rho)[mask]
        return -float(np.dot(counts, np.log(np.maximum(probs, _PROB_FLOOR))))

    res = minimize_scalar(neg_loglik, bounds=(-_RHO_BOUND, _RHO_BOUND),
                          method="bounded", options={"xatol": 1e-6})
    if not np.isfinite(res.fun):
        raise NumericError("pairwise likelihood non-finite over the whole range")
    return float(res.x)


def smooth_to_pd(mat: np.ndarray, floor: float = 1e-4) -> np.ndarray:
    """Coerce eigenvalues below ``floor`` up to it and rescale to unit diagonal.

    Already-PD input is returned unchanged (up to symmetrization).
    """
    mat = np.asarray(mat, dtype=float)
    sym = 0.5 * (mat + mat.T)
    eigval, eigvec = np.linalg.eigh(sym)
    if eigval.min() >= floor:
        return sym
    rebuilt = (eigvec * np.maximum(eigval, floor)) @ eigvec.T
    corr, _ = covariance_to_correlation(rebuilt)
    return corr


def initialize(data: OrdinalDataset) -> tuple[Thresholds, np.ndarray]:
    """Thresholds plus the smoothed pairwise-likelihood correlation matrix.

    The implicit initial DAG is the complete DAG over the node order; it
    carries no information beyond the correlation matrix returned here.
    """
    data = data.compressed()
    thresholds = estimate_thresholds(data)
    n = data.n_vars
    sigma = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            rho = pairwise_correlation(data.codes[:, i], data.codes[:, j],
                                       thresholds.cuts[i], thresholds.cuts[j])
            sigma[i, j] = sigma[j, i] = rho
    return thresholds, smooth_to_pd(sigma)
