"""Ground-truth generation: random weighted DAGs, latent Gaussian data,
and Dirichlet-controlled discretization into ordinal levels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .data import OrdinalDataset
from .errors import InputError
from .graph import Dag, random_dag, topological_order
from .latent import (NodeParams, Thresholds, covariance_to_correlation,
                     params_to_covariance)
from .rng import derive_rng


def generate_gaussian(dag: Dag, n_rows: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Sample latent rows along the topological order, unit noise variances."""
    weights = dag.weight_map
    for e in dag.edges:
        if e not in weights:
            raise InputError(f"edge {e} has no weight")
    out = rng.standard_normal((n_rows, dag.n))
    for i in topological_order(dag):
        for j in dag.parents(i):
            out[:, i] += weights[(j, i)] * out[:, j]
    return out


def dirichlet_cell_probs(levels: int, concentration: float,
                         rng: np.random.Generator) -> np.ndarray:
    """Symmetric Dirichlet draw via normalized Gamma variates."""
    if levels < 2:
        raise InputError("need at least two levels")
    if not concentration > 0:
        raise InputError("concentration must be positive")
    g = rng.gamma(concentration, 1.0, size=levels)
    while g.sum() == 0.0:                    # astronomically unlikely underflow
        g = rng.gamma(concentration, 1.0, size=levels)
    return g / g.sum()


def discretize(gauss: np.ndarray,
               cell_probs: list[np.ndarray]) -> tuple[OrdinalDataset, Thresholds]:
    """Cut each empirically standardized column at normal quantiles of the
    cumulative cell probabilities; returns the codes and the cut points."""
    gauss = np.asarray(gauss, dtype=float)
    if gauss.ndim != 2 or gauss.shape[1] != len(cell_probs):
        raise InputError("one probability vector per column required")
    cols = []
    cuts = []
    for i, probs in enumerate(cell_probs):
        probs = np.asarray(probs, dtype=float)
        if abs(probs.sum() - 1.0) > 1e-9 or np.any(probs < 0):
            raise InputError(f"column {i}: cell probabilities must sum to 1")
        col = gauss[:, i]
        sd = col.std()
        if sd == 0:
            raise InputError(f"column {i} has zero variance")
        z = (col - col.mean()) / sd
        interior = ndtri(np.cumsum(probs)[:-1])
        cols.append(np.searchsorted(interior, z, side="right").astype(np.int64))
        cuts.append(np.concatenate(([-np.inf], interior, [np.inf])))
    codes = np.column_stack(cols)
    levels = tuple(len(p) for p in cell_probs)
    return OrdinalDataset.from_codes(codes, levels), Thresholds(tuple(cuts))


@dataclass(frozen=True)
class Benchmark:
    dag: Dag                       # weighted ground truth
    sigma: np.ndarray              # true latent correlation matrix
    data: OrdinalDataset
    thresholds: Thresholds         # cut points actually used
    seed: int


def true_correlation(dag: Dag) -> np.ndarray:
    """Latent correlation implied by the DAG weights with unit noise."""
    weights = dag.weight_map
    coefs = tuple({j: weights[(j, i)] for j in dag.parents(i)}
                  for i in range(dag.n))
    params = NodeParams(coefs, tuple(1.0 for _ in range(dag.n)))
    corr, _ = covariance_to_correlation(params_to_covariance(params, dag))
    return corr


def make_benchmark(n: int, expected_neighbors: float, n_rows: int,
                   expected_levels: int, concentration: float,
                   seed: int) -> Benchmark:
    """Random DAG -> Gaussian data -> random level counts -> discretization.

    Level counts are discrete-uniform on [2, 2 * expected_levels - 2].
    """
    if expected_levels < 2:
        raise InputError("expected_levels must be >= 2")
    if n_rows < 1:
        raise InputError("n_rows must be positive")
    rng_graph = derive_rng(seed, "benchmark-graph")
    rng_data = derive_rng(seed, "benchmark-data")
    rng_cells = derive_rng(seed, "benchmark-cells")
    dag = random_dag(n, expected_neighbors, rng=rng_graph)
    gauss = generate_gaussian(dag, n_rows, rng_data)
    hi = 2 * expected_levels - 2
    level_counts = rng_cells.integers(2, hi + 1, size=n)
    probs = [dirichlet_cell_probs(int(li), concentration, rng_cells)
             for li in level_counts]
    data, thresholds = discretize(gauss, probs)
    return Benchmark(dag, true_correlation(dag), data, thresholds, seed)
