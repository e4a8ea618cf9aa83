"""Bayesian network structure learning from ordinal data.

Ordinal variables are modeled as marginal discretizations of latent
Gaussian variables whose joint distribution factorizes over a DAG; the
structure and parameters are learned with a Monte Carlo structural EM
loop around a decomposable expected-BIC score.
"""

__version__ = "0.1.0"

from .data import OrdinalDataset, load_dataset_csv, save_dataset_csv, split_rows
from .em import (FitRecord, FitTrace, OsemConfig, OsemResult, osem_fit,
                 penalized_q, recover_node_params, rescale_to_correlation,
                 update_parameters)
from .errors import InputError, NumericError, OsemError, StructuralError
from .graph import (Cpdag, Dag, Pattern, cpdag_to_pattern, dag_to_cpdag,
                    dag_to_pattern, full_dag, is_acyclic, markov_equivalent,
                    random_dag, topological_order)
from .initialization import (bivariate_rectangle_prob, estimate_thresholds,
                             initialize, pairwise_correlation, smooth_to_pd)
from .latent import (LatentModel, NodeParams, Thresholds, complete_log_density,
                     covariance_to_correlation, params_to_covariance)
from .metrics import pattern_confusion, shd_pattern, to_pattern, tpr_fprp
from .predict import (BootstrapResult, GhkEstimate, LogLossReport,
                      bootstrap_edges, ghk_rectangle, rectangle_log_prob,
                      test_log_loss)
from .scoring import ScoreContext, node_score, total_score
from .search import SearchConfig, exhaustive_search, search_structure
from .simulate import (Benchmark, dirichlet_cell_probs, discretize,
                       generate_gaussian, make_benchmark, true_correlation)
from .tmvn import (LatentSampleBlock, expected_covariance, gibbs_sample_row,
                   sample_block, sample_truncated_univariate)

__all__ = [name for name in dir() if not name.startswith("_")]
