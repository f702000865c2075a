"""
Scoring recovery and reading a fitted network
=============================================

Compare a fit with the truth (TPR, FDR, MCC, ROC), then look for motifs,
degree distributions and a cascade ordering.
"""

import numpy as np

from rgm.evaluation import (confusion, degree_posterior, find_motifs, kendall_distance, metrics, ordering_score,
                            roc, score_ranks)
from rgm.inference import Hyperparameters, McmcConfig, run_chain
from rgm.selection import edge_probabilities, select_fdr, select_mpm
from rgm.sem import ScenarioSpec, cascade_parameters, simulate, simulate_from

config = McmcConfig(iterations=20_000, burn_in=10_000)

data, truth = simulate(ScenarioSpec(2, seed=12))
table = edge_probabilities(run_chain(data, Hyperparameters(), config))
est = select_mpm(table)
print("scenario 2:", confusion(est, truth), metrics(confusion(est, truth)))
curve = roc(table, truth)
print(f"AUC {curve.auc:.3f} over {curve.fpr.size} ROC points")

# a five-tier cascade where every gene feeds all later tiers
tiers = [3, 2, 1, 2, 2]
rng = np.random.default_rng(9)
cascade = cascade_parameters(tiers, rng=rng)
data = simulate_from(cascade, 276, rng)
store = run_chain(data, Hyperparameters(), config)
est = select_fdr(edge_probabilities(store), 0.1)
labels = [f"G{i + 1}" for i in range(10)]

motifs = find_motifs(est, labels)
print({k: len(v) for k, v in motifs.items()}, "e.g.", motifs["feed_forward_loops"][:1])
q = degree_posterior(store).quartiles()
print("degree median per gene:", q[:, 2].tolist())

scores = ordering_score(est)
reference = np.repeat(np.arange(len(tiers)), tiers)
print("ordering score:", scores.tolist())
print("Kendall distance to the tiers:", kendall_distance(score_ranks(scores), reference))
