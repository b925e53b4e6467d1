from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from faircut.embedding import (
    EXHAUSTIVE,
    SAMPLED,
    TreeEmbedding,
    build_embedding,
    certify,
    decomposition_tree,
    embedding_from_document,
    embedding_to_document,
    tree_cut_to_graph_cut,
)
from faircut.errors import InputError, RefusalError
from faircut.graph import CutSolution, RootedTree, WeightedGraph, boundary, tree_cut_cost
from faircut.models import EmbeddingDocument, SolverConfig

F = Fraction


@pytest.fixture
def g1_tree() -> RootedTree:
    # edge ids follow the child order: 0 -> a, 1 -> b, 2 -> c
    return RootedTree.from_parents(0, {1: 0, 2: 0, 3: 2}, {1: 2, 2: 3, 3: 3})


def single(tree: RootedTree) -> TreeEmbedding:
    return TreeEmbedding((tree,), (F(1),), F(1), EXHAUSTIVE)


def all_subsets(g):
    others = sorted(g.vertices - {g.source})
    for r in range(1, len(others) + 1):
        yield from (frozenset(c) for c in combinations(others, r))


def assert_dominates(g, emb):
    for S in all_subsets(g):
        graph_cut = g.cost_of(boundary(g, S))
        for tree in emb.trees:
            tree_cut = tree_cut_cost(tree, S)
            assert tree_cut is None or tree_cut >= graph_cut


def test_tree_gets_identity_embedding(t1_graph):
    emb = build_embedding(t1_graph)
    assert emb.origin == "identity"
    assert emb.k == 1
    assert emb.certified_stretch == 1
    assert emb.trees[0].graph is t1_graph


def test_identity_certifies_with_equality(t1_graph):
    report = certify(t1_graph, TreeEmbedding.identity(t1_graph))
    assert report.dominated
    assert report.stretch == 1
    assert report.subsets_checked == 7


@pytest.mark.parametrize("fixture", ["triangle", "g1"])
def test_built_embedding_is_certified(request, fixture):
    g = request.getfixturevalue(fixture)
    emb = build_embedding(g, SolverConfig(seed=3))
    assert emb.certification_mode == EXHAUSTIVE
    assert emb.report.dominated
    assert emb.report.subsets_checked == 2 ** (g.n - 1) - 1
    assert sum(emb.multipliers) == 1
    assert emb.certified_stretch >= 1
    assert_dominates(g, emb)
    for tree in emb.trees:
        assert tree.real == g.vertices
        assert tree.root == g.source


def test_triangle_single_vertex_cut(triangle):
    emb = build_embedding(triangle)
    for tree in emb.trees:
        assert tree_cut_cost(tree, {1}) >= 2


def test_build_is_deterministic(g1):
    first = build_embedding(g1, SolverConfig(seed=11))
    second = build_embedding(g1, SolverConfig(seed=11))
    assert embedding_to_document(first) == embedding_to_document(second)


def test_decomposition_tree_on_g1(g1, g1_tree):
    tree = decomposition_tree(g1, np.random.default_rng(0), False, 14)
    assert tree.parents() == g1_tree.parents()
    assert {c: tree.parent_edge(c).cost for c in tree.parents()} == {1: 2, 2: 3, 3: 3}


@pytest.mark.parametrize("seed", range(3))
def test_decomposition_trees_dominate(random_graph, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 7, 5)
    assert_dominates(g, single(decomposition_tree(g, rng, True, 14)))


def test_certify_reports_stretch_and_witness(g1, g1_tree):
    report = certify(g1, single(g1_tree))
    assert report.dominated
    assert report.stretch == F(5, 3)
    assert report.witness == {1, 2, 3}


def test_certify_finds_under_scaled_tree(g1, g1_tree):
    halved = g1_tree.with_costs({e.id: e.cost / 2 for e in g1_tree.graph.edges})
    report = certify(g1, single(halved))
    assert not report.dominated
    assert report.violation_count > 0
    witness = next(v for v in report.violations if v.subset == {1})
    assert witness.graph_cut == 2
    assert witness.tree_cut == 1


def test_certify_stretch_below_one_for_under_scaled_tree(g1, g1_tree):
    halved = g1_tree.with_costs({e.id: e.cost / 2 for e in g1_tree.graph.edges})
    report = certify(g1, single(halved))
    assert report.stretch == F(5, 6)
    assert report.witness == {1, 2, 3}


def test_certify_refuses_large_exhaustive(random_graph):
    g = random_graph(np.random.default_rng(0), 6, 2)
    emb = build_embedding(g)
    with pytest.raises(RefusalError):
        certify(g, emb, EXHAUSTIVE, max_n=5)


def test_sampled_certification(random_graph):
    g = random_graph(np.random.default_rng(1), 8, 4)
    emb = build_embedding(g, SolverConfig(exhaustive_max_n=4, sampled_subsets=64))
    assert emb.certification_mode == SAMPLED
    assert 0 < emb.report.subsets_checked <= 64
    assert emb.report.dominated


def test_multipliers_must_sum_to_one(g1_tree):
    with pytest.raises(InputError):
        TreeEmbedding((g1_tree,), (F(1, 2),), F(1), EXHAUSTIVE)


def test_disconnected_graph_is_rejected():
    g = WeightedGraph.from_triples([(0, 1, 1), (1, 2, 1), (0, 2, 1)], 0, vertices=range(4))
    with pytest.raises(InputError):
        build_embedding(g)


def test_tree_cut_to_graph_cut_identity(t1_graph):
    tree = RootedTree(t1_graph)
    cut = CutSolution.from_cut(t1_graph, [1])
    assert tree_cut_to_graph_cut(t1_graph, tree, cut) == cut


def test_tree_cut_to_graph_cut_triangle(triangle):
    tree = RootedTree.from_parents(0, {1: 0, 2: 0}, {1: 2, 2: 2})
    graph_cut = tree_cut_to_graph_cut(triangle, tree, CutSolution.from_cut(tree.graph, [0]))
    assert graph_cut.protected == {1}
    assert graph_cut.cut_edges == {0, 2}
    assert graph_cut.cost == 2


def test_tree_cut_to_graph_cut_g1(g1, g1_tree):
    graph_cut = tree_cut_to_graph_cut(g1, g1_tree, CutSolution.from_cut(g1_tree.graph, [1]))
    assert graph_cut.protected == {2, 3}
    assert graph_cut.cut_edges == {1, 2}
    assert graph_cut.cost == 3


def test_document_round_trip(g1):
    emb = build_embedding(g1, SolverConfig(seed=5))
    doc = EmbeddingDocument.model_validate_json(embedding_to_document(emb).model_dump_json())
    loaded = embedding_from_document(doc, g1)
    assert loaded.origin == "file"
    assert loaded.multipliers == emb.multipliers
    assert [t.parents() for t in loaded.trees] == [t.parents() for t in emb.trees]
    assert loaded.certified_stretch == emb.certified_stretch


def test_document_with_wrong_source(g1, g1_tree):
    doc = embedding_to_document(single(g1_tree)).model_copy(update={"source": 3})
    with pytest.raises(InputError):
        embedding_from_document(doc, g1)


def test_document_with_under_scaled_tree(g1, g1_tree):
    halved = g1_tree.with_costs({e.id: e.cost / 2 for e in g1_tree.graph.edges})
    doc = embedding_to_document(single(halved))
    with pytest.raises(InputError, match="domination"):
        embedding_from_document(doc, g1)
