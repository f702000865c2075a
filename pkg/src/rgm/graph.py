"""Reciprocal graphs and their Markov properties.

Vertices are labelled ``1..p`` (1-based) throughout. A reciprocal graph may
hold directed edges (including directed cycles) and undirected edges, as long
as no directed edge joins two vertices of the same path component.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Tuple

MAX_ENUMERATION_VERTICES = 8

Triple = Tuple[FrozenSet[int], FrozenSet[int], FrozenSet[int]]


class GraphError(ValueError):
    """Raised for malformed graphs or invalid graph queries."""


def _undirected_key(i: int, j: int) -> Tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class ReciprocalGraph:
    """Immutable mixed graph on vertices ``1..p``.

    ``directed`` holds ordered pairs ``(i, j)`` meaning ``i -> j``;
    ``undirected`` holds pairs ``(i, j)`` with ``i < j``.
    """

    p: int
    directed: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)
    undirected: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.p < 1:
            raise GraphError(f"vertex count must be positive, got {self.p}")
        directed = frozenset((int(i), int(j)) for i, j in self.directed)
        undirected = frozenset(_undirected_key(int(i), int(j)) for i, j in self.undirected)
        for i, j in itertools.chain(directed, undirected):
            if not (1 <= i <= self.p and 1 <= j <= self.p):
                raise GraphError(f"edge ({i}, {j}) outside vertex range 1..{self.p}")
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
        for i, j in directed:
            if _undirected_key(i, j) in undirected:
                raise GraphError(f"pair ({i}, {j}) is both directed and undirected")
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)

    @property
    def vertices(self) -> FrozenSet[int]:
        return frozenset(range(1, self.p + 1))

    def neighbors(self, v: int) -> set:
        """Undirected neighbours of ``v``."""
        out = set()
        for i, j in self.undirected:
            if i == v:
                out.add(j)
            elif j == v:
                out.add(i)
        return out

    def parents(self, v: int) -> set:
        return {i for i, j in self.directed if j == v}

    def induced(self, keep: Iterable[int]) -> "ReciprocalGraph":
        """Subgraph induced by ``keep``, relabelled to keep original labels.

        The vertex count stays ``p``; vertices outside ``keep`` become isolated.
        """
        keep = set(keep)
        return ReciprocalGraph(
            self.p,
            frozenset(e for e in self.directed if e[0] in keep and e[1] in keep),
            frozenset(e for e in self.undirected if e[0] in keep and e[1] in keep),
        )

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "directed": [list(e) for e in sorted(self.directed)],
            "undirected": [list(e) for e in sorted(self.undirected)],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ReciprocalGraph":
        try:
            return cls(
                int(doc["p"]),
                frozenset(tuple(e) for e in doc.get("directed", [])),
                frozenset(tuple(e) for e in doc.get("undirected", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, GraphError):
                raise
            raise GraphError(f"malformed graph document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ReciprocalGraph":
        return cls.from_dict(json.loads(text))

    def to_dot(self, labels=None, name: str = "G") -> str:
        labels = labels or {}
        lines = [f"digraph {name} {{"]
        for v in sorted(self.vertices):
            lines.append(f'  {v} [label="{labels.get(v, v)}"];')
        for i, j in sorted(self.directed):
            lines.append(f"  {i} -> {j};")
        for i, j in sorted(self.undirected):
            lines.append(f"  {i} -> {j} [dir=none];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _union_find_components(vertices, pairs) -> List[FrozenSet[int]]:
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for v in sorted(vertices):
        groups.setdefault(find(v), set()).add(v)
    return [frozenset(g) for _, g in sorted(groups.items())]


def path_components(g: ReciprocalGraph) -> List[FrozenSet[int]]:
    """Connected components of the undirected part, sorted by smallest member."""
    return _union_find_components(g.vertices, g.undirected)


def is_reciprocal(g: ReciprocalGraph) -> bool:
    comp_of = {}
    for idx, comp in enumerate(path_components(g)):
        for v in comp:
            comp_of[v] = idx
    return all(comp_of[i] != comp_of[j] for i, j in g.directed)


def boundary(g: ReciprocalGraph, s: Iterable[int]) -> FrozenSet[int]:
    """Parents and undirected neighbours of ``s``, minus ``s`` itself."""
    s = frozenset(s)
    out = set()
    for i, j in g.directed:
        if j in s:
            out.add(i)
    for i, j in g.undirected:
        if i in s:
            out.add(j)
        if j in s:
            out.add(i)
    return frozenset(out - s)


def anterior_set(g: ReciprocalGraph, s: Iterable[int]) -> FrozenSet[int]:
    """Smallest superset of ``s`` with empty boundary."""
    w = frozenset(s)
    while True:
        bd = boundary(g, w)
        if not bd:
            return w
        w = w | bd


def moralize(g: ReciprocalGraph) -> ReciprocalGraph:
    """Join the boundary of every path component, then drop directions.

    Path components are the undirected-connectivity classes only; the vertices
    of a directed cycle are *not* merged (see the feedback-pair example in
    the tests, where merging would destroy ``3 _||_ 4 | {1, 2}``).
    """
    if not is_reciprocal(g):
        raise GraphError("moralization requires a reciprocal graph")
    edges = set(g.undirected)
    edges.update(_undirected_key(i, j) for i, j in g.directed)
    for comp in path_components(g):
        bd = sorted(boundary(g, comp))
        for i, j in itertools.combinations(bd, 2):
            edges.add((i, j))
    return ReciprocalGraph(g.p, frozenset(), frozenset(edges))


def separates(g_undirected: ReciprocalGraph, v1, v2, v3) -> bool:
    """True iff every path between ``v1`` and ``v2`` passes through ``v3``."""
    if g_undirected.directed:
        raise GraphError("separation is defined on undirected graphs")
    v1, v2, v3 = frozenset(v1), frozenset(v2), frozenset(v3)
    if v1 & v2 or v1 & v3 or v2 & v3:
        raise GraphError("separation query sets must be pairwise disjoint")
    adj = {v: set() for v in g_undirected.vertices}
    for i, j in g_undirected.undirected:
        adj[i].add(j)
        adj[j].add(i)
    seen = set(v1)
    stack = list(v1)
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w in v3 or w in seen:
                continue
            if w in v2:
                return False
            seen.add(w)
            stack.append(w)
    return True


def global_markov(g: ReciprocalGraph, v1, v2, v3) -> bool:
    """Does ``g`` imply ``Y_v1 _||_ Y_v2 | Y_v3``?"""
    v1, v2, v3 = frozenset(v1), frozenset(v2), frozenset(v3)
    an = anterior_set(g, v1 | v2 | v3)
    return separates(moralize(g.induced(an)), v1, v2, v3)


def implied_independencies(g: ReciprocalGraph) -> List[Triple]:
    """All independence statements implied by the global Markov property.

    Each statement ``(V1, V2, V3)`` has nonempty disjoint ``V1`` and ``V2``,
    possibly empty ``V3``, and is listed once with ``min(V1) < min(V2)``.
    """
    if g.p > MAX_ENUMERATION_VERTICES:
        raise GraphError(
            f"enumeration limited to {MAX_ENUMERATION_VERTICES} vertices, got {g.p}"
        )
    if not is_reciprocal(g):
        raise GraphError("graph is not reciprocal")
    verts = sorted(g.vertices)
    moral_cache = {}
    found = []
    for labels in itertools.product(range(4), repeat=len(verts)):
        v1 = frozenset(v for v, lab in zip(verts, labels) if lab == 1)
        v2 = frozenset(v for v, lab in zip(verts, labels) if lab == 2)
        if not v1 or not v2 or min(v1) > min(v2):
            continue
        v3 = frozenset(v for v, lab in zip(verts, labels) if lab == 3)
        an = anterior_set(g, v1 | v2 | v3)
        moral = moral_cache.get(an)
        if moral is None:
            moral = moral_cache[an] = moralize(g.induced(an))
        if separates(moral, v1, v2, v3):
            found.append((v1, v2, v3))
    found.sort(key=lambda t: (len(t[0]) + len(t[1]) + len(t[2]), sorted(t[0]), sorted(t[1]), sorted(t[2])))
    return found


def markov_equivalent(g1: ReciprocalGraph, g2: ReciprocalGraph) -> bool:
    if g1.p != g2.p:
        raise GraphError("Markov equivalence needs graphs on the same vertex set")
    return set(implied_independencies(g1)) == set(implied_independencies(g2))
