"""Truncated multivariate normal sampling for the Monte Carlo E-step.

Each observed ordinal row constrains its latent Gaussian row to a
hyperrectangle; a systematic-scan Gibbs sampler draws K completions per
row under the current correlation matrix, and the pooled second moments
give the expected covariance.

All inverse-CDF work runs in log-probability space (log_ndtr/ndtri_exp)
so intervals deep in a tail keep full relative accuracy.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import log_ndtr, ndtri_exp

from .data import OrdinalDataset
from .errors import InputError, NumericError
from .latent import Thresholds


def _log1mexp(x: np.ndarray) -> np.ndarray:
    """log(1 - exp(x)) for x <= 0, accurate near both ends."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x > -np.log(2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[small] = np.log(-np.expm1(x[small]))
        out[~small] = np.log1p(-np.exp(x[~small]))
    return out


def log_interval_mass(lo, hi) -> np.ndarray:
    """log(Phi(hi) - Phi(lo)) for standard normal bounds, elementwise."""
    la = log_ndtr(np.asarray(lo, dtype=float))
    lb = log_ndtr(np.asarray(hi, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        return lb + _log1mexp(np.minimum(la - lb, 0.0))


def truncated_normal_ppf(u, lo, hi) -> np.ndarray:
    """Quantile of N(0,1) truncated to [lo, hi) at probability u, elementwise.

    Intervals sitting in the right half-line are reflected so both tails
    go through the numerically stable left-tail path.  An interval whose
    probability mass vanishes at working precision falls back to the
    interval midpoint with a warning.
    """
    u, lo, hi = np.broadcast_arrays(np.asarray(u, dtype=float),
                                    np.asarray(lo, dtype=float),
                                    np.asarray(hi, dtype=float))
    with np.errstate(invalid="ignore"):
        reflect = (lo + hi) > 0          # NaN midpoint (full line) stays direct
    llo = np.where(reflect, -hi, lo)
    lhi = np.where(reflect, -lo, hi)
    uu = np.where(reflect, 1.0 - u, u)
    la = log_ndtr(llo)
    lb = log_ndtr(lhi)
    delta = la - lb                      # log mass ratio, <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_q = lb + np.logaddexp(np.log(uu), delta + np.log1p(-uu))
    x = ndtri_exp(np.minimum(log_q, 0.0))
    x = np.where(reflect, -x, x)
    degenerate = (delta == 0.0) & np.isfinite(lo) & np.isfinite(hi)
    if np.any(degenerate):
        warnings.warn("interval with vanishing probability mass; "
                      "falling back to the interval midpoint", stacklevel=2)
        with np.errstate(invalid="ignore"):
            x = np.where(degenerate, 0.5 * (lo + hi), x)
    x = np.maximum(x, lo)
    x = np.where(np.isfinite(hi) & (x >= hi), np.nextafter(hi, lo), x)
    return x


def sample_truncated_univariate(mu: float, sigma: float, lo: float, hi: float,
                                rng: np.random.Generator) -> float:
    """One draw from N(mu, sigma^2) conditioned on [lo, hi)."""
    if not sigma > 0:
        raise InputError("sigma must be positive")
    if not lo < hi:
        raise InputError("need lo < hi")
    u = rng.random()
    z = truncated_normal_ppf(np.array([u]), (lo - mu) / sigma, (hi - mu) / sigma)
    return float(mu + sigma * z[0])


def _precision(sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    try:
        chol = scipy.linalg.cho_factor(sigma, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError("covariance matrix not positive definite") from exc
    return scipy.linalg.cho_solve(chol, np.eye(sigma.shape[0]))


def _gibbs_chains(sigma: np.ndarray, lo: np.ndarray, hi: np.ndarray, k: int,
                  burn_in: int, thin: int, rng: np.random.Generator) -> np.ndarray:
    """K thinned Gibbs samples for each of N independent rectangles.

    lo, hi: (N, n).  Returns (N, K, n).  One systematic scan updates every
    coordinate from its exact conditional given the rest.
    """
    omega = _precision(sigma)
    n = sigma.shape[0]
    n_rows = lo.shape[0]
    cond_sd = 1.0 / np.sqrt(np.diag(omega))
    # truncated-marginal median start (marginal scale is 1 in correlation form)
    state = truncated_normal_ppf(np.full((n_rows, n), 0.5), lo, hi)

    def sweep() -> None:
        for i in range(n):
            m = state @ omega[:, i]
            m -= state[:, i] * omega[i, i]
            m *= -cond_sd[i] ** 2
            u = rng.random(n_rows)
            z = truncated_normal_ppf(u, (lo[:, i] - m) / cond_sd[i],
                                     (hi[:, i] - m) / cond_sd[i])
            state[:, i] = m + cond_sd[i] * z

    for _ in range(burn_in):
        sweep()
    out = np.empty((n_rows, k, n))
    for s in range(k):
        for _ in range(thin):
            sweep()
        out[:, s, :] = state
    return out


def gibbs_sample_row(sigma: np.ndarray, rect: tuple[np.ndarray, np.ndarray],
                     k: int, burn_in: int, rng: np.random.Generator,
                     thin: int = 5) -> np.ndarray:
    """K samples of one latent row truncated to ``rect`` = (lo, hi)."""
    lo = np.asarray(rect[0], dtype=float)[None, :]
    hi = np.asarray(rect[1], dtype=float)[None, :]
    if np.any(lo >= hi):
        raise InputError("rectangle bounds must satisfy lo < hi")
    return _gibbs_chains(sigma, lo, hi, k, burn_in, thin, rng)[0]


def expected_covariance(samples: np.ndarray) -> np.ndarray:
    """Pooled second-moment matrix (1/(NK)) sum_jk y y^T (means fixed at 0)."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2:
        samples = samples[:, None, :]
    if samples.size == 0:
        raise InputError("empty sample block")
    n_rows, k, n = samples.shape
    flat = samples.reshape(n_rows * k, n)
    sig = flat.T @ flat / (n_rows * k)
    return 0.5 * (sig + sig.T)


@dataclass(frozen=True)
class LatentSampleBlock:
    """Monte Carlo completions of the hidden rows plus pooled moments."""

    samples: np.ndarray        # (N, K, n)
    sigma_hat: np.ndarray      # (n, n) pooled second moments
    seed: int | None

    def __post_init__(self) -> None:
        for name in ("samples", "sigma_hat"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def rectangles_for(data: OrdinalDataset,
                   thresholds: Thresholds) -> tuple[np.ndarray, np.ndarray]:
    """Per-row latent bounds implied by the codes and thresholds."""
    lo = np.empty((data.n_rows, data.n_vars))
    hi = np.empty_like(lo)
    for i in range(data.n_vars):
        cuts = thresholds.cuts[i]
        codes = data.codes[:, i]
        lo[:, i] = cuts[codes]
        hi[:, i] = cuts[codes + 1]
    return lo, hi


def sample_block(sigma: np.ndarray, thresholds: Thresholds, data: OrdinalDataset,
                 k: int, burn_in: int, thin: int, rng: np.random.Generator,
                 seed: int | None = None) -> LatentSampleBlock:
    """Monte Carlo E-step: K completions per observation and pooled moments."""
    lo, hi = rectangles_for(data, thresholds)
    samples = _gibbs_chains(sigma, lo, hi, k, burn_in, thin, rng)
    return LatentSampleBlock(samples, expected_covariance(samples), seed)
