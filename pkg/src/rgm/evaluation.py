"""Recovery metrics against a known truth, and analytics for fitted networks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Sequence

import numpy as np
from scipy.stats import rankdata

from .inference import SampleStore
from .selection import EdgeProbabilityTable, GraphEstimate, candidate_edges
from .sem import ModelError, SemParameters, b_mask

CASCADE_MAX_EDGES = 6


@dataclass(frozen=True)
class ConfusionSummary:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class Metrics(NamedTuple):
    tpr: float
    fdr: float
    mcc: float


def _truth_vector(truth: SemParameters) -> np.ndarray:
    p = truth.p
    off = ~np.eye(p, dtype=bool)
    return np.concatenate([truth.A[off] != 0, truth.B[b_mask(p)] != 0])


def confusion(estimate: GraphEstimate, truth: SemParameters) -> ConfusionSummary:
    """Entrywise comparison over all off-diagonal A and masked B positions."""
    if estimate.p != truth.p:
        raise ModelError(f"estimate has p={estimate.p}, truth has p={truth.p}")
    SA, SB = estimate.support()
    p = truth.p
    off = ~np.eye(p, dtype=bool)
    pred = np.concatenate([SA[off], SB[b_mask(p)]])
    true = _truth_vector(truth)
    return ConfusionSummary(int(np.sum(pred & true)), int(np.sum(pred & ~true)),
                            int(np.sum(~pred & ~true)), int(np.sum(~pred & true)))


def metrics(c: ConfusionSummary) -> Metrics:
    """TPR, FDR and Matthews correlation, with 1 / 0 / 0 on empty denominators."""
    tpr = c.tp / (c.tp + c.fn) if c.tp + c.fn else 1.0
    fdr = c.fp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    margins = [c.tp + c.fp, c.tp + c.fn, c.tn + c.fp, c.tn + c.fn]
    if min(margins) == 0:
        mcc = 0.0
    else:
        mcc = (c.tp * c.tn - c.fp * c.fn) / math.sqrt(math.prod(float(m) for m in margins))
    return Metrics(tpr, fdr, mcc)


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def tpr_at(self, grid) -> np.ndarray:
        """TPR on an FPR grid, following the curve (vertical jumps take the upper value)."""
        grid = np.asarray(grid, dtype=float)
        out = np.empty_like(grid)
        for g_idx, g in enumerate(grid):
            at = self.tpr[self.fpr == g]
            if at.size:
                out[g_idx] = at.max()
                continue
            right = np.searchsorted(self.fpr, g, side="right")
            left = right - 1
            f0, f1 = self.fpr[left], self.fpr[right]
            t0, t1 = self.tpr[left], self.tpr[right]
            out[g_idx] = t0 + (t1 - t0) * (g - f0) / (f1 - f0)
        return out


def roc_from_scores(scores, labels) -> RocCurve:
    """ROC swept from cutoff above the maximum down to below the minimum.

    Tied scores move the curve along one diagonal segment; AUC is trapezoidal.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    n_pos = labels.sum()
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ModelError("ROC needs both positive and negative truth entries")
    fpr = [0.0]
    tpr = [0.0]
    for c in np.unique(scores)[::-1]:
        sel = scores >= c
        tpr.append(np.sum(sel & labels) / n_pos)
        fpr.append(np.sum(sel & ~labels) / n_neg)
    fpr = np.array(fpr)
    tpr = np.array(tpr)
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    return RocCurve(fpr, tpr, auc)


def roc(table: EdgeProbabilityTable, truth: SemParameters) -> RocCurve:
    if table.p != truth.p:
        raise ModelError(f"table has p={table.p}, truth has p={truth.p}")
    PA, PB = table.matrices()
    p = truth.p
    off = ~np.eye(p, dtype=bool)
    return roc_from_scores(np.concatenate([PA[off], PB[b_mask(p)]]), _truth_vector(truth))


def average_roc(curves: Sequence[RocCurve], grid=None):
    """Pointwise mean TPR of several curves on a common FPR grid."""
    grid = np.linspace(0, 1, 101) if grid is None else np.asarray(grid, dtype=float)
    return grid, np.mean([c.tpr_at(grid) for c in curves], axis=0)


# -- network analytics -------------------------------------------------------

def find_motifs(estimate: GraphEstimate, labels: Sequence[str] = None) -> Dict[str, list]:
    """Feed-forward loops, two-gene feedback loops and cascades among gene-gene edges.

    Cascades are simple directed paths with at least two edges that cannot be
    extended at either end, truncated at ``CASCADE_MAX_EDGES`` edges.
    """
    p = estimate.p
    labels = list(labels) if labels is not None else [f"Y{i + 1}" for i in range(p)]
    sign = {}
    for src, dst, s, _ in estimate.gene_edges():
        sign[(src, dst)] = s
    out = {v: [] for v in range(p)}
    inn = {v: [] for v in range(p)}
    for src, dst in sorted(sign):
        out[src].append(dst)
        inn[dst].append(src)

    def edge_doc(a, b):
        return {"source": labels[a], "target": labels[b], "sign": sign[(a, b)]}

    ffl = []
    for i, j, k in itertools.permutations(range(p), 3):
        if (i, j) in sign and (j, k) in sign and (i, k) in sign:
            ffl.append({"genes": [labels[i], labels[j], labels[k]],
                        "edges": [edge_doc(i, j), edge_doc(j, k), edge_doc(i, k)]})
    feedback = []
    for i, j in itertools.combinations(range(p), 2):
        if (i, j) in sign and (j, i) in sign:
            kind = "positive" if sign[(i, j)] * sign[(j, i)] > 0 else "negative"
            feedback.append({"genes": [labels[i], labels[j]], "type": kind,
                             "edges": [edge_doc(i, j), edge_doc(j, i)]})
    cascades = []

    def extend(path):
        last = path[-1]
        nxt = [w for w in out[last] if w not in path]
        if len(path) - 1 >= CASCADE_MAX_EDGES or not nxt:
            if len(path) >= 3:
                cascades.append(path)
            return
        for w in nxt:
            extend(path + [w])

    for start in range(p):
        extend([start])
    # keep paths that cannot be extended backwards either
    kept = []
    for path in cascades:
        if len(path) - 1 < CASCADE_MAX_EDGES and any(u not in path for u in inn[path[0]]):
            continue
        kept.append({"genes": [labels[v] for v in path],
                     "edges": [edge_doc(a, b) for a, b in zip(path, path[1:])]})
    return {"feed_forward_loops": ffl, "feedback_loops": feedback, "cascades": kept}


@dataclass(frozen=True)
class DegreePosterior:
    degrees: np.ndarray  # (draws, p)

    def distribution(self) -> np.ndarray:
        """(p, 2p-1) empirical probabilities of degree 0..2(p-1) per gene."""
        p = self.degrees.shape[1]
        support = 2 * (p - 1) + 1
        return np.stack([np.bincount(self.degrees[:, g], minlength=support)[:support] / len(self.degrees)
                         for g in range(p)])

    def quartiles(self) -> np.ndarray:
        """(p, 5) rows of min, Q1, median, Q3, max."""
        return np.percentile(self.degrees, [0, 25, 50, 75, 100], axis=0).T


def degree_posterior(store: SampleStore) -> DegreePosterior:
    """Per draw and gene, the number of incident gene-gene edges (each direction counts)."""
    if len(store) == 0:
        raise ModelError("empty sample store")
    G = store.gamma_A
    deg = G.sum(axis=2) + G.sum(axis=1)
    return DegreePosterior(deg.astype(int))


def ordering_score(estimate: GraphEstimate) -> np.ndarray:
    """In-degree minus out-degree over gene-gene edges."""
    score = np.zeros(estimate.p, dtype=int)
    for src, dst, _, _ in estimate.gene_edges():
        score[dst] += 1
        score[src] -= 1
    return score


def kendall_distance(ranking, reference) -> float:
    """Normalised Kendall tau distance between a ranking and a tiered reference.

    ``ranking`` and ``reference`` give each item a position (smaller = earlier).
    Pairs tied in ``reference`` are ignored; pairs tied only in ``ranking``
    count as half discordant.
    """
    r = np.asarray(ranking, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if r.shape != ref.shape:
        raise ModelError("ranking and reference differ in length")
    i, j = np.triu_indices(r.size, k=1)
    dref = np.sign(ref[i] - ref[j])
    dr = np.sign(r[i] - r[j])
    use = dref != 0
    if not use.any():
        return 0.0
    disc = np.where(dr[use] == 0, 0.5, (dr[use] != dref[use]).astype(float))
    return float(disc.sum() / use.sum())


def reference_positions(groups: Sequence[Sequence[str]], labels: Sequence[str]) -> np.ndarray:
    """Tier index per label from an ordered list of tie groups."""
    where = {}
    for tier, group in enumerate(groups):
        for lab in group:
            if lab in where:
                raise ModelError(f"label {lab!r} appears in more than one group")
            where[lab] = tier
    missing = [lab for lab in labels if lab not in where]
    extra = set(where) - set(labels)
    if missing or extra:
        raise ModelError(f"reference ordering mismatch: missing {missing}, unknown {sorted(extra)}")
    return np.array([where[lab] for lab in labels])


def score_ranks(scores) -> np.ndarray:
    """Average ranks (1-based) of scores in increasing order."""
    return rankdata(scores, method="average")
