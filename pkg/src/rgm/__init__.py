"""Bayesian structure learning for Gaussian reciprocal graphical models.

Gene expression ``Y`` is modelled through the simultaneous equations
``Y = A Y + B X + E`` with DNA-level covariates ``X`` (copy number and
methylation) that can only act on their own gene. Thresholded priors on
``A`` and ``B`` give sparse graphs with directed cycles allowed.
"""

from .graph import (GraphError, ReciprocalGraph, anterior_set, boundary, global_markov, implied_independencies,
                    is_reciprocal, markov_equivalent, moralize, path_components, separates)
from .sem import (DataSet, ModelError, ScenarioSpec, SemParameters, conditional_moments, log_density,
                  log_likelihood, path_diagram, simulate)
from .inference import (Hyperparameters, McmcConfig, PriorState, SampleStore, log_posterior, run_chain,
                        update_coefficient, update_threshold, update_variances)
from .selection import EdgeProbabilityTable, GraphEstimate, edge_probabilities, select_fdr, select_hpm, select_mpm
from .evaluation import (confusion, degree_posterior, find_motifs, kendall_distance, metrics, ordering_score, roc)

__version__ = "0.1.0"
