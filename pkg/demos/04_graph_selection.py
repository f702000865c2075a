"""
From posterior draws to a network
=================================

Median probability model, posterior expected FDR control and, for a gene
pair, the highest posterior probability model.
"""

import numpy as np

from rgm.inference import Hyperparameters, McmcConfig, run_chain
from rgm.selection import (EdgeProbabilityTable, edge_probabilities, hpm_visit_counts, select_fdr, select_hpm,
                           select_mpm)
from rgm.sem import SemParameters, simulate_from

toy = EdgeProbabilityTable.from_probabilities([0.9, 0.8, 0.6, 0.3])
for alpha in (0.1, 0.2, 0.5):
    est = select_fdr(toy, alpha)
    print(f"alpha={alpha}: keep {est.probs}, expected FDR {est.expected_fdr:.3f}")
print("MPM keeps", select_mpm(toy).probs)

# one-way interaction Y1 -> Y2 with one instrument per gene
rng = np.random.default_rng(4)
A = np.array([[0.0, 0.0], [0.6, 0.0]])
B = np.zeros((2, 4))
B[0, 0], B[1, 3] = 0.8, -0.8
data = simulate_from(SemParameters(A, B, np.array([0.25, 0.25])), 200, rng)
store = run_chain(data, Hyperparameters(), McmcConfig(iterations=10_000, burn_in=5_000, thin=2))

table = edge_probabilities(store)
for row in table.to_rows():
    print(f"  {row['kind']} target={row['target']} source={row['source']} prob={row['prob']:.3f}")
hpm = select_hpm(store)
print("HPM edges:", hpm.edges, "signs:", hpm.signs)
print("three most visited configurations:", hpm_visit_counts(store).most_common(3))
print(hpm.to_dot(["GENE1", "GENE2"]))
