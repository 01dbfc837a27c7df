import random

import pytest

from relwl.graphs import default_pair_coloring, from_triples


@pytest.fixture
def graph_a():
    """Three nodes, two typed facts converging on u."""
    g = from_triples(
        [("v", "r1", "u"), ("v'", "r2", "u")], node_order=("u", "v", "v'")
    )
    return g.with_pair_coloring(default_pair_coloring(g))


@pytest.fixture
def graph_b():
    """Four nodes, a single fact into u'."""
    g = from_triples([("x", "r", "u'")], node_order=("u", "u'", "v", "x"))
    return g.with_pair_coloring(default_pair_coloring(g))


def names_partition(trace, t):
    """Trace partition at iteration t as frozensets of names."""
    classes = {}
    for key, color in zip(trace.keys(), trace.colorings[t]):
        if trace.arity == 1:
            member = trace.node_names[key]
        else:
            member = (trace.node_names[key[0]], trace.node_names[key[1]])
        classes.setdefault(color, set()).add(member)
    return {frozenset(c) for c in classes.values()}


def random_permutation(rng: random.Random, n: int) -> tuple[int, ...]:
    perm = list(range(n))
    rng.shuffle(perm)
    return tuple(perm)
