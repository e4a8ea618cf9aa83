"""Held-out predictive log loss via GHK rectangle probabilities, and
bootstrapped CPDAG edge frequencies.

The GHK estimator integrates the zero-mean multivariate normal over the
threshold hyperrectangle of an observation by sequential conditioning on
the Cholesky factor, with scrambled Sobol draws for variance reduction.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from scipy.special import logsumexp
from scipy.stats import qmc

from .data import OrdinalDataset
from .errors import InputError, NumericError, OsemError
from .graph import dag_to_cpdag
from .latent import LatentModel, Thresholds
from .rng import derive_seed_sequence
from .tmvn import log_interval_mass, truncated_normal_ppf

_LOG_FLOOR = math.log(1e-300)


@dataclass(frozen=True)
class GhkEstimate:
    log_prob: float
    se_log: float          # delta-method standard error of log_prob
    floored: bool          # every draw had vanishing mass


def _sobol_uniforms(dim: int, draws: int, seed) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")     # draws need not be a power of two
        u = qmc.Sobol(d=dim, scramble=True, seed=seed).random(draws)
    return np.clip(u, 1e-12, 1.0 - 1e-12)


def ghk_rectangle(sigma: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                  draws: int = 2000, seed=0) -> GhkEstimate:
    """GHK estimate of P(lo <= Y < hi) for Y ~ N(0, sigma)."""
    sigma = np.asarray(sigma, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = sigma.shape[0]
    if np.any(lo >= hi):
        raise InputError("rectangle bounds must satisfy lo < hi")
    if draws < 2:
        raise InputError("need at least two draws")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericError("covariance matrix not positive definite") from exc
    u = _sobol_uniforms(n, draws, seed)
    eta = np.empty((draws, n))
    log_w = np.zeros(draws)
    for i in range(n):
        shift = eta[:, :i] @ chol[i, :i]
        a = (lo[i] - shift) / chol[i, i]
        b = (hi[i] - shift) / chol[i, i]
        log_w += log_interval_mass(a, b)
        eta[:, i] = truncated_normal_ppf(u[:, i], a, b)
    log_mean = float(logsumexp(log_w) - math.log(draws))
    if not np.isfinite(log_mean) or log_mean < _LOG_FLOOR:
        warnings.warn("rectangle probability vanished at working precision",
                      stacklevel=2)
        return GhkEstimate(_LOG_FLOOR, float("inf"), True)
    w = np.exp(log_w - log_w.max())
    mean_w = w.mean()
    se_rel = float(w.std(ddof=1) / math.sqrt(draws) / mean_w)
    return GhkEstimate(log_mean, se_rel, False)


def rectangle_log_prob(sigma: np.ndarray, thresholds: Thresholds, x,
                       draws: int = 2000, seed=0) -> float:
    """Log probability of observing level vector ``x`` under the model."""
    lo, hi = thresholds.rectangle(x)
    return ghk_rectangle(sigma, lo, hi, draws, seed).log_prob


@dataclass(frozen=True)
class LogLossReport:
    total: float
    per_instance: float
    se_total: float
    n_rows: int


def test_log_loss(model: LatentModel, test: OrdinalDataset,
                  draws: int = 2000, seed: int = 0) -> LogLossReport:
    """Total and per-instance held-out log loss of a fitted model.

    Each test row gets its own scrambled Sobol stream derived from
    (seed, row index), so results are reproducible and row-order stable.
    """
    if test.n_vars != model.dag.n:
        raise InputError("test set width does not match the model")
    if test.n_rows == 0:
        return LogLossReport(0.0, 0.0, 0.0, 0)
    total = 0.0
    var_sum = 0.0
    for j in range(test.n_rows):
        row_seed = derive_seed_sequence(seed, f"ghk-row-{j}")
        lo, hi = model.thresholds.rectangle(test.codes[j])
        est = ghk_rectangle(model.sigma, lo, hi, draws,
                            np.random.default_rng(row_seed))
        total += est.log_prob
        if np.isfinite(est.se_log):
            var_sum += est.se_log ** 2
    return LogLossReport(total, total / test.n_rows,
                         math.sqrt(var_sum), test.n_rows)


@dataclass(frozen=True)
class BootstrapResult:
    frequencies: np.ndarray        # (n, n) directed edge frequencies in [0, 1]
    replicates: int                # requested B
    failures: int


def bootstrap_edges(data: OrdinalDataset, config, n_replicates: int,
                    threads: int = 1) -> BootstrapResult:
    """Directed-edge frequencies over CPDAGs fitted to row resamples.

    An undirected CPDAG edge contributes 0.5 to each direction.  Failed
    replicates are excluded from the denominator with a warning.
    """
    from .em import osem_fit                 # deferred: em imports nothing here

    if n_replicates < 1:
        raise InputError("need at least one bootstrap replicate")
    n = data.n_vars

    def one(b: int):
        rng = np.random.default_rng(
            derive_seed_sequence(config.seed, f"bootstrap-rows-{b}"))
        idx = rng.integers(0, data.n_rows, size=data.n_rows)
        fit_seed = int(derive_seed_sequence(
            config.seed, f"bootstrap-fit-{b}").generate_state(1)[0])
        try:
            result = osem_fit(data.take_rows(idx), replace(config, seed=fit_seed))
            return dag_to_cpdag(result.dag)
        except (OsemError, np.linalg.LinAlgError) as exc:
            warnings.warn(f"bootstrap replicate {b} failed: {exc}", stacklevel=2)
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cpdags = list(pool.map(one, range(n_replicates)))
    else:
        cpdags = [one(b) for b in range(n_replicates)]

    counts = np.zeros((n, n))
    failures = 0
    for cpdag in cpdags:
        if cpdag is None:
            failures += 1
            continue
        for u, v in cpdag.directed:
            counts[u, v] += 1.0
        for u, v in cpdag.undirected:
            counts[u, v] += 0.5
            counts[v, u] += 0.5
    effective = n_replicates - failures
    if effective == 0:
        raise NumericError("every bootstrap replicate failed")
    return BootstrapResult(counts / effective, n_replicates, failures)
