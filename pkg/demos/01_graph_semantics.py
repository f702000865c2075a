"""
Reciprocal graphs and their Markov properties
=============================================

Build the four-vertex graphs with two genes (1, 2) and their DNA-level
regulators (3, 4), moralize them and list the conditional independences
they imply.
"""

from rgm.graph import (ReciprocalGraph, anterior_set, implied_independencies, markov_equivalent, moralize,
                       path_components)

feedback = ReciprocalGraph(4, {(1, 2), (2, 1), (3, 1), (4, 2)})
chain = ReciprocalGraph(4, {(3, 1), (1, 2), (4, 2)})
reverse = ReciprocalGraph(4, {(3, 1), (2, 1), (4, 2)})
undirected = ReciprocalGraph(4, {(3, 1), (4, 2)}, {(1, 2)})

# directed 2-cycles do not merge vertices: every vertex is its own path component
print("path components:", path_components(feedback))
print("anterior set of {2} in 3->1->2<-4:", sorted(anterior_set(chain, {2})))
print("moral graph of the feedback loop:", sorted(moralize(feedback).undirected))


def show(name, g):
    pairs = [(sorted(a), sorted(b), sorted(c)) for a, b, c in implied_independencies(g) if len(a) == len(b) == 1]
    print(f"{name}: {len(pairs)} singleton statements")
    for a, b, c in pairs:
        print(f"   {a[0]} _||_ {b[0]} | {set(c) or '{}'}")


for name, g in [("feedback", feedback), ("chain", chain), ("reverse", reverse), ("undirected", undirected)]:
    show(name, g)

graphs = [feedback, chain, reverse, undirected]
print("any two of the four equivalent?",
      any(markov_equivalent(g, h) for i, g in enumerate(graphs) for h in graphs[i + 1:]))

# Without instruments, every two-gene graph implies nothing and they are all equivalent
two = [ReciprocalGraph(2, {(1, 2)}), ReciprocalGraph(2, {(2, 1)}), ReciprocalGraph(2, set(), {(1, 2)}),
       ReciprocalGraph(2, {(1, 2), (2, 1)})]
print("two-gene graphs all equivalent:", all(markov_equivalent(two[0], g) for g in two))
print(feedback.to_dot())
