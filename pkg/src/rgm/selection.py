"""Graph estimates from posterior draws: MPM, posterior-expected-FDR control, HPM."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .graph import ReciprocalGraph
from .inference import SampleStore
from .sem import ModelError, b_mask

HPM_MAX_EDGES = 20
SIGN_TOL = 1e-6


def candidate_edges(p: int) -> List[Tuple[str, int, int]]:
    """Candidate edges in canonical order: ``("A", i, j)`` is ``Y_j -> Y_i``,
    ``("B", i, k)`` is ``X_k -> Y_i`` (0-based)."""
    edges = [("A", i, j) for i in range(p) for j in range(p) if i != j]
    edges += [("B", i, k) for i in range(p) for k in (2 * i, 2 * i + 1)]
    return edges


def _sign(value: float) -> int:
    if not np.isfinite(value) or abs(value) < SIGN_TOL:
        return 0
    return 1 if value > 0 else -1


@dataclass
class EdgeProbabilityTable:
    p: int
    edges: List[Tuple[str, int, int]]
    prob: np.ndarray
    mean_if_included: np.ndarray
    n_draws: int = 0

    def __len__(self) -> int:
        return len(self.edges)

    def signs(self) -> np.ndarray:
        return np.array([_sign(v) for v in self.mean_if_included], dtype=int)

    def matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        """Inclusion probabilities laid out as (p, p) and (p, 2p) matrices."""
        PA = np.zeros((self.p, self.p))
        PB = np.zeros((self.p, 2 * self.p))
        for (kind, i, j), pr in zip(self.edges, self.prob):
            (PA if kind == "A" else PB)[i, j] = pr
        return PA, PB

    def to_rows(self) -> List[dict]:
        return [{"kind": k, "target": i, "source": j, "prob": float(pr), "mean_if_included": float(mu)}
                for (k, i, j), pr, mu in zip(self.edges, self.prob, self.mean_if_included)]

    @classmethod
    def from_probabilities(cls, probs, p: Optional[int] = None) -> "EdgeProbabilityTable":
        """Table over abstract edges ``("E", e, e)``; handy for exercising the selectors."""
        probs = np.asarray(probs, dtype=float)
        return cls(p or 0, [("E", e, e) for e in range(probs.size)], probs, np.ones(probs.size))


def edge_probabilities(store: SampleStore) -> EdgeProbabilityTable:
    """Fraction of retained draws (all chains pooled) in which each candidate edge is present."""
    if len(store) == 0:
        raise ModelError("empty sample store")
    p = store.p
    A, B = store.effective
    edges = candidate_edges(p)
    probs = np.empty(len(edges))
    means = np.empty(len(edges))
    for e, (kind, i, j) in enumerate(edges):
        vals = A[:, i, j] if kind == "A" else B[:, i, j]
        inc = vals != 0
        probs[e] = inc.mean()
        means[e] = vals[inc].mean() if inc.any() else np.nan
    return EdgeProbabilityTable(p, edges, probs, means, len(store))


@dataclass
class GraphEstimate:
    p: int
    edges: List[Tuple[str, int, int]]
    signs: List[int]
    probs: List[float]
    rule: str
    cutoff: Optional[float]
    expected_fdr: float
    met_target: bool = True

    def __len__(self) -> int:
        return len(self.edges)

    def support(self) -> Tuple[np.ndarray, np.ndarray]:
        A = np.zeros((self.p, self.p), dtype=bool)
        B = np.zeros((self.p, 2 * self.p), dtype=bool)
        for kind, i, j in self.edges:
            if kind == "A":
                A[i, j] = True
            elif kind == "B":
                B[i, j] = True
        return A, B

    def signed_A(self) -> np.ndarray:
        S = np.zeros((self.p, self.p), dtype=int)
        for (kind, i, j), s in zip(self.edges, self.signs):
            if kind == "A":
                S[i, j] = s
        return S

    def gene_edges(self) -> List[Tuple[int, int, int, float]]:
        """Gene-gene edges as ``(source, target, sign, prob)``, 0-based."""
        return [(j, i, s, pr) for (kind, i, j), s, pr in zip(self.edges, self.signs, self.probs) if kind == "A"]

    def to_graph(self) -> ReciprocalGraph:
        """Path diagram on 3p vertices (Y first, then X), 1-based."""
        directed = set()
        for kind, i, j in self.edges:
            src = j + 1 if kind == "A" else self.p + j + 1
            directed.add((src, i + 1))
        return ReciprocalGraph(3 * self.p, frozenset(directed))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "rule": self.rule,
            "cutoff": self.cutoff,
            "expected_fdr": self.expected_fdr,
            "met_target": self.met_target,
            "edges": [{"kind": k, "target": i, "source": j, "sign": s, "prob": pr}
                      for (k, i, j), s, pr in zip(self.edges, self.signs, self.probs)],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GraphEstimate":
        edges = doc.get("edges", [])
        return cls(int(doc["p"]), [(e["kind"], int(e["target"]), int(e["source"])) for e in edges],
                   [int(e["sign"]) for e in edges], [float(e["prob"]) for e in edges],
                   doc["rule"], doc.get("cutoff"), float(doc["expected_fdr"]), bool(doc.get("met_target", True)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GraphEstimate":
        return cls.from_dict(json.loads(text))

    def to_dot(self, gene_labels: Optional[List[str]] = None, include_dna: bool = True) -> str:
        """Stimulatory edges get arrowheads; inhibitory edges are dashed with a tee.
        Pen width scales with inclusion probability."""
        labels = gene_labels or [f"Y{i + 1}" for i in range(self.p)]
        lines = ["digraph estimate {"]
        for i, lab in enumerate(labels):
            lines.append(f'  Y{i + 1} [label="{lab}"];')
        for (kind, i, j), s, pr in zip(self.edges, self.signs, self.probs):
            if kind == "B" and not include_dna:
                continue
            src = f"Y{j + 1}" if kind == "A" else f"X{j + 1}"
            style = 'arrowhead=tee, style=dashed' if s < 0 else "arrowhead=normal"
            lines.append(f"  {src} -> Y{i + 1} [{style}, penwidth={0.5 + 3.0 * pr:.3f}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _expected_fdr(selected_probs: np.ndarray) -> float:
    return float(np.sum(1.0 - selected_probs) / max(1, selected_probs.size))


def select_cutoff(table: EdgeProbabilityTable, cutoff: float, rule: str = "cutoff") -> GraphEstimate:
    """Edges with inclusion probability strictly above ``cutoff``."""
    keep = np.flatnonzero(table.prob > cutoff)
    signs = table.signs()
    return GraphEstimate(table.p, [table.edges[e] for e in keep], [int(signs[e]) for e in keep],
                         [float(table.prob[e]) for e in keep], rule, float(cutoff),
                         _expected_fdr(table.prob[keep]))


def select_mpm(table: EdgeProbabilityTable) -> GraphEstimate:
    return select_cutoff(table, 0.5, rule="mpm")


def select_fdr(table: EdgeProbabilityTable, alpha: float) -> GraphEstimate:
    """Largest edge set ``{prob > c}`` whose posterior expected FDR is at most ``alpha``.

    Candidate cutoffs are the distinct probabilities plus 0. If no nonempty
    set qualifies, the empty graph comes back with ``met_target=False``.
    """
    if not 0 < alpha < 1:
        raise ModelError(f"alpha must lie in (0, 1), got {alpha}")
    rule = f"fdr:{alpha:g}"
    cutoffs = np.unique(np.concatenate([table.prob, [0.0]]))
    best = None
    for c in cutoffs[::-1]:
        chosen = table.prob[table.prob > c]
        if chosen.size == 0:
            continue
        if _expected_fdr(chosen) <= alpha + 1e-12:
            best = c
        else:
            # expected FDR only grows as the cutoff falls
            break
    if best is None:
        est = select_cutoff(table, 1.0, rule=rule)
        est.met_target = False
        return est
    return select_cutoff(table, float(best), rule=rule)


def select_hpm(store: SampleStore) -> GraphEstimate:
    """Most frequently visited (Gamma_A, Gamma_B) configuration.

    Ties go to the configuration with fewer edges, then to the
    lexicographically smallest indicator vector (canonical edge order).
    """
    p = store.p
    edges = candidate_edges(p)
    if len(edges) > HPM_MAX_EDGES:
        raise ModelError(f"HPM needs at most {HPM_MAX_EDGES} candidate edges, got {len(edges)}")
    if len(store) == 0:
        raise ModelError("empty sample store")
    A, B = store.effective
    off = ~np.eye(p, dtype=bool)
    ind = np.concatenate([A[:, off] != 0, B[:, b_mask(p)] != 0], axis=1)
    counts = Counter(map(tuple, ind.astype(np.int8).tolist()))
    config, _ = min(counts.items(), key=lambda kv: (-kv[1], sum(kv[0]), kv[0]))
    config = np.array(config, dtype=bool)
    rows = np.all(ind == config, axis=1)
    coef = np.concatenate([A[:, off], B[:, b_mask(p)]], axis=1)
    marginal = ind.mean(axis=0)
    keep = np.flatnonzero(config)
    return GraphEstimate(p, [edges[e] for e in keep], [_sign(coef[rows, e].mean()) for e in keep],
                         [float(marginal[e]) for e in keep], "hpm", None, _expected_fdr(marginal[keep]))


def hpm_visit_counts(store: SampleStore) -> Counter:
    p = store.p
    A, B = store.effective
    off = ~np.eye(p, dtype=bool)
    ind = np.concatenate([A[:, off] != 0, B[:, b_mask(p)] != 0], axis=1)
    return Counter(map(tuple, ind.astype(np.int8).tolist()))
