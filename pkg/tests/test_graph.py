import itertools

import pytest
from hypothesis import given, settings, strategies as st

from rgm.graph import (GraphError, ReciprocalGraph, anterior_set, boundary, implied_independencies, is_reciprocal,
                       markov_equivalent, moralize, path_components, separates)


@st.composite
def mixed_graphs(draw, max_p=8):
    p = draw(st.integers(1, max_p))
    pairs = [(i, j) for i in range(1, p + 1) for j in range(i + 1, p + 1)]
    directed, undirected = set(), set()
    for i, j in pairs:
        kind = draw(st.sampled_from(["none", "none", "fwd", "back", "both", "und"]))
        if kind == "fwd":
            directed.add((i, j))
        elif kind == "back":
            directed.add((j, i))
        elif kind == "both":
            directed |= {(i, j), (j, i)}
        elif kind == "und":
            undirected.add((i, j))
    return ReciprocalGraph(p, frozenset(directed), frozenset(undirected))


@st.composite
def dags(draw, max_p=6):
    p = draw(st.integers(2, max_p))
    order = draw(st.permutations(range(1, p + 1)))
    edges = set()
    for a, b in itertools.combinations(range(p), 2):
        if draw(st.booleans()):
            edges.add((order[a], order[b]))
    return ReciprocalGraph(p, frozenset(edges))


def reachability_components(g):
    """Components by repeated transitive closure of the undirected adjacency."""
    reach = {v: {v} for v in g.vertices}
    for i, j in g.undirected:
        reach[i].add(j)
        reach[j].add(i)
    changed = True
    while changed:
        changed = False
        for v in g.vertices:
            new = set().union(*(reach[w] for w in reach[v]))
            if new != reach[v]:
                reach[v] = new
                changed = True
    return {frozenset(s) for s in reach.values()}


def test_rejects_self_loops_and_double_pairs():
    with pytest.raises(GraphError):
        ReciprocalGraph(3, {(1, 1)})
    with pytest.raises(GraphError):
        ReciprocalGraph(3, {(1, 2)}, {(2, 1)})
    with pytest.raises(GraphError):
        ReciprocalGraph(3, {(1, 4)})


def test_path_components_singletons():
    assert path_components(ReciprocalGraph(4)) == [frozenset({v}) for v in range(1, 5)]


def test_path_components_of_sem_path_diagram():
    # Y1, Y2 = 1, 2; X1..X4 = 3..6 with X1 - X2 joined through their covariance block.
    g = ReciprocalGraph(6, {(2, 1), (1, 2), (3, 1), (4, 1), (5, 2)}, {(3, 4)})
    comps = path_components(g)
    assert frozenset({3, 4}) in comps
    assert sorted(len(c) for c in comps) == [1, 1, 1, 1, 2]


@given(mixed_graphs())
def test_path_components_match_closure_oracle(g):
    comps = path_components(g)
    assert set(comps) == reachability_components(g)
    assert frozenset().union(*comps) == g.vertices
    assert sum(len(c) for c in comps) == g.p


def test_is_reciprocal_examples(example_graphs):
    assert not is_reciprocal(ReciprocalGraph(3, {(1, 3)}, {(1, 2), (2, 3)}))
    for name in "abcd":
        assert is_reciprocal(example_graphs[name])


def test_is_reciprocal_direct_violation():
    # (1, 2) cannot be both undirected and directed, so go through a third vertex.
    g = ReciprocalGraph(3, {(1, 2)}, {(1, 3), (2, 3)})
    assert not is_reciprocal(g)


def test_boundary(example_graphs):
    g = example_graphs["a"]
    assert boundary(g, set()) == frozenset()
    assert boundary(g, {1}) == {2, 3}
    assert boundary(g, g.vertices) == frozenset()


def test_anterior_set(example_graphs):
    assert anterior_set(ReciprocalGraph(4), {2}) == {2}
    assert anterior_set(example_graphs["b"], {2}) == {1, 2, 3, 4}
    assert anterior_set(example_graphs["b"], {3}) == {3}
    g = example_graphs["a"]
    assert anterior_set(g, g.vertices) == g.vertices


@given(mixed_graphs(max_p=6), st.data())
def test_anterior_monotone_and_idempotent(g, data):
    s = data.draw(st.sets(st.sampled_from(sorted(g.vertices))))
    extra = data.draw(st.sets(st.sampled_from(sorted(g.vertices))))
    an = anterior_set(g, s)
    assert anterior_set(g, an) == an
    assert an <= anterior_set(g, s | extra)
    assert boundary(g, an) == frozenset()


def test_moralize_collider():
    m = moralize(ReciprocalGraph(4, {(3, 1), (4, 1)}))
    assert m.directed == frozenset()
    assert m.undirected == {(3, 4), (1, 3), (1, 4)}


def test_moralize_two_cycle_uses_singleton_components(example_graphs):
    # Each of 1, 2 is its own path component: bd(1) = {2, 3}, bd(2) = {1, 4}.
    m = moralize(example_graphs["a"])
    assert m.undirected == {(1, 2), (1, 3), (2, 4), (2, 3), (1, 4)}
    assert (3, 4) not in m.undirected


def test_moralize_undirected_fixed_point():
    g = ReciprocalGraph(4, set(), {(1, 2), (2, 3), (3, 4)})
    assert moralize(g) == g


def test_moralize_rejects_non_reciprocal():
    with pytest.raises(GraphError):
        moralize(ReciprocalGraph(3, {(1, 2)}, {(1, 3), (2, 3)}))


@given(mixed_graphs(max_p=6))
def test_moralize_idempotent(g):
    if not is_reciprocal(g):
        return
    m = moralize(g)
    assert moralize(m) == m


def test_separates_examples():
    assert separates(ReciprocalGraph(4, set(), {(1, 2), (3, 4)}), {1}, {3}, set())
    square = ReciprocalGraph(4, set(), {(1, 3), (1, 2), (2, 4)})
    assert separates(square, {3}, {4}, {1, 2})
    complete = ReciprocalGraph(4, set(), set(itertools.combinations(range(1, 5), 2)))
    assert not separates(complete, {1}, {2}, {3, 4})
    with pytest.raises(GraphError):
        separates(square, {1}, {1, 2}, set())
    with pytest.raises(GraphError):
        separates(ReciprocalGraph(2, {(1, 2)}), {1}, {2}, set())


@given(mixed_graphs(max_p=6), st.data())
def test_separates_symmetric(g, data):
    labels = data.draw(st.lists(st.integers(0, 3), min_size=g.p, max_size=g.p))
    sets = [frozenset(v for v, lab in zip(sorted(g.vertices), labels) if lab == k) for k in (1, 2, 3)]
    u = ReciprocalGraph(g.p, frozenset(), g.undirected)
    assert separates(u, sets[0], sets[1], sets[2]) == separates(u, sets[1], sets[0], sets[2])


def _singleton_statements(g):
    return {(min(a), min(b), tuple(sorted(c))) for a, b, c in implied_independencies(g)
            if len(a) == 1 and len(b) == 1}


def test_feedback_pair_independencies(example_graphs):
    assert _singleton_statements(example_graphs["a"]) == {(3, 4, ()), (3, 4, (1, 2))}


def test_example_graph_equivalence_classes(example_graphs):
    for x, y in itertools.combinations("abcd", 2):
        assert not markov_equivalent(example_graphs[x], example_graphs[y]), (x, y)
    for x, y in itertools.combinations("efgh", 2):
        assert markov_equivalent(example_graphs[x], example_graphs[y]), (x, y)
    for name in "efgh":
        assert implied_independencies(example_graphs[name]) == []


def test_edgeless_graph_lists_every_triple():
    g = ReciprocalGraph(3)
    found = implied_independencies(g)
    # unordered {V1, V2} nonempty disjoint, V3 the rest or a subset of it
    expected = set()
    for labels in itertools.product(range(4), repeat=3):
        v1 = frozenset(v + 1 for v, lab in enumerate(labels) if lab == 1)
        v2 = frozenset(v + 1 for v, lab in enumerate(labels) if lab == 2)
        v3 = frozenset(v + 1 for v, lab in enumerate(labels) if lab == 3)
        if v1 and v2 and min(v1) < min(v2):
            expected.add((v1, v2, v3))
    assert set(found) == expected
    assert len(found) == len(expected)


def test_enumeration_size_cap():
    with pytest.raises(GraphError):
        implied_independencies(ReciprocalGraph(9))
    with pytest.raises(GraphError):
        markov_equivalent(ReciprocalGraph(3), ReciprocalGraph(4))


def test_markov_equivalent_reflexive(example_graphs):
    assert markov_equivalent(example_graphs["a"], example_graphs["a"])


# -- brute-force d-separation oracle for DAGs ---------------------------------

def _simple_paths(adj, x, y):
    stack = [[x]]
    while stack:
        path = stack.pop()
        if path[-1] == y:
            yield path
            continue
        for w in adj[path[-1]]:
            if w not in path:
                stack.append(path + [w])


def _descendants(g, v):
    out, stack = {v}, [v]
    while stack:
        u = stack.pop()
        for a, b in g.directed:
            if a == u and b not in out:
                out.add(b)
                stack.append(b)
    return out


def d_separated(g, v1, v2, v3):
    adj = {v: set() for v in g.vertices}
    for a, b in g.directed:
        adj[a].add(b)
        adj[b].add(a)
    for x in v1:
        for y in v2:
            for path in _simple_paths(adj, x, y):
                blocked = False
                for k in range(1, len(path) - 1):
                    prev, mid, nxt = path[k - 1], path[k], path[k + 1]
                    collider = (prev, mid) in g.directed and (nxt, mid) in g.directed
                    if collider and not (_descendants(g, mid) & v3):
                        blocked = True
                    if not collider and mid in v3:
                        blocked = True
                    if blocked:
                        break
                if not blocked:
                    return False
    return True


@settings(max_examples=12, deadline=None)
@given(dags(max_p=5))
def test_dag_independencies_match_d_separation(g):
    found = set(implied_independencies(g))
    verts = sorted(g.vertices)
    for labels in itertools.product(range(4), repeat=g.p):
        v1 = frozenset(v for v, lab in zip(verts, labels) if lab == 1)
        v2 = frozenset(v for v, lab in zip(verts, labels) if lab == 2)
        v3 = frozenset(v for v, lab in zip(verts, labels) if lab == 3)
        if not v1 or not v2 or min(v1) > min(v2):
            continue
        assert ((v1, v2, v3) in found) == d_separated(g, v1, v2, v3), (v1, v2, v3)


def test_dag_six_vertices_match_d_separation():
    g = ReciprocalGraph(6, {(1, 3), (2, 3), (3, 4), (4, 5), (2, 6), (6, 5)})
    found = set(implied_independencies(g))
    verts = sorted(g.vertices)
    for labels in itertools.product(range(4), repeat=6):
        v1 = frozenset(v for v, lab in zip(verts, labels) if lab == 1)
        v2 = frozenset(v for v, lab in zip(verts, labels) if lab == 2)
        v3 = frozenset(v for v, lab in zip(verts, labels) if lab == 3)
        if v1 and v2 and min(v1) < min(v2):
            assert ((v1, v2, v3) in found) == d_separated(g, v1, v2, v3)


def test_json_and_dot_round_trip(example_graphs):
    g = example_graphs["d"]
    assert ReciprocalGraph.from_json(g.to_json()) == g
    dot = g.to_dot()
    assert "3 -> 1;" in dot and "1 -> 2 [dir=none];" in dot
    with pytest.raises(GraphError):
        ReciprocalGraph.from_dict({"directed": []})
