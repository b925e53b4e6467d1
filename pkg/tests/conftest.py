import os
from fractions import Fraction

import numpy as np
import pytest

from faircut.graph import RootedTree, WeightedGraph

INSTANCES = os.path.join(os.path.dirname(__file__), "instances")


def random_tree_graph(rng: np.random.Generator, n: int, integer: bool = True, max_cost: int = 5) -> WeightedGraph:
    triples = []
    for v in range(1, n):
        cost = Fraction(int(rng.integers(1, max_cost + 1)))
        if not integer:
            cost /= int(rng.integers(1, 4))
        triples.append((int(rng.integers(0, v)), v, cost))
    return WeightedGraph.from_triples(triples, 0, range(n))


def random_connected_graph(rng: np.random.Generator, n: int, extra: int, max_cost: int = 5) -> WeightedGraph:
    triples = [(e.u, e.v, e.cost) for e in random_tree_graph(rng, n, True, max_cost).edges]
    for _ in range(extra):
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        triples.append((u, v, Fraction(int(rng.integers(1, max_cost + 1)))))
    return WeightedGraph.from_triples(triples, 0, range(n))


@pytest.fixture
def instance_path():
    return lambda name: os.path.join(INSTANCES, name)


@pytest.fixture
def g1() -> WeightedGraph:
    # s=0, a=1, b=2, c=3; edge ids 0:(s,a) 1:(s,b) 2:(a,b) 3:(b,c)
    return WeightedGraph.from_triples([(0, 1, 1), (0, 2, 2), (1, 2, 1), (2, 3, 3)], 0)


@pytest.fixture
def t1_graph() -> WeightedGraph:
    # edge ids 0:(s,a) 1:(s,b) 2:(b,c)
    return WeightedGraph.from_triples([(0, 1, 1), (0, 2, 2), (2, 3, 3)], 0)


@pytest.fixture
def t1(t1_graph) -> RootedTree:
    return RootedTree(t1_graph)


@pytest.fixture
def triangle() -> WeightedGraph:
    return WeightedGraph.from_triples([(0, 1, 1), (0, 2, 1), (1, 2, 1)], 0)


@pytest.fixture
def star() -> WeightedGraph:
    return WeightedGraph.from_triples([(0, 1, 2), (0, 2, 2)], 0)


@pytest.fixture
def random_tree():
    return random_tree_graph


@pytest.fixture
def random_graph():
    return random_connected_graph
