# Tree embeddings: candidate decomposition trees, cut-domination certification and JSON exchange
import math
from dataclasses import dataclass
from fractions import Fraction
from logging import getLogger
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from faircut.errors import InputError, RefusalError
from faircut.graph import CutSolution, RootedTree, SubsetIndex, WeightedGraph, boundary, tree_cut_cost
from faircut.lp import solve_float
from faircut.models import (
    CertificationDocument,
    EmbeddingDocument,
    EmbeddingSummary,
    SolverConfig,
    TreeDocument,
    ViolationDocument,
)
from faircut.rational import as_fraction, fmt
from faircut.runtime import derive_rng, parallel_map

log = getLogger(__name__)

EXHAUSTIVE = "exhaustive"
SAMPLED = "sampled"
REPORTED_VIOLATIONS = 20


@dataclass(frozen=True)
class Violation:
    tree: int
    subset: FrozenSet[int]
    graph_cut: Fraction
    tree_cut: Fraction


@dataclass(frozen=True)
class CertificationReport:
    mode: str
    subsets_checked: int
    violations: Tuple[Violation, ...]
    violation_count: int
    # None when some tree cannot separate a subset the graph cuts at positive cost
    stretch: Optional[Fraction]
    witness: Optional[FrozenSet[int]]

    @property
    def dominated(self) -> bool:
        return self.violation_count == 0


@dataclass(frozen=True)
class TreeEmbedding:
    trees: Tuple[RootedTree, ...]
    multipliers: Tuple[Fraction, ...]
    certified_stretch: Fraction
    certification_mode: str
    report: Optional[CertificationReport] = None
    origin: str = "build"

    def __post_init__(self) -> None:
        if not self.trees or len(self.trees) != len(self.multipliers):
            raise InputError("an embedding needs one multiplier per tree and at least one tree")
        if any(lam < 0 for lam in self.multipliers) or sum(self.multipliers) != 1:
            raise InputError("multipliers must be non-negative and sum to exactly 1")
        if self.certification_mode not in (EXHAUSTIVE, SAMPLED):
            raise InputError(f"unknown certification mode {self.certification_mode!r}")

    @property
    def k(self) -> int:
        return len(self.trees)

    @classmethod
    def identity(cls, g: WeightedGraph) -> "TreeEmbedding":
        return cls((RootedTree(g),), (Fraction(1),), Fraction(1), EXHAUSTIVE, origin="identity")

    def summary(self) -> EmbeddingSummary:
        return EmbeddingSummary(
            origin=self.origin, trees=self.k, stretch=fmt(self.certified_stretch), mode=self.certification_mode
        )


def _tree_evaluator(index: SubsetIndex, tree: RootedTree) -> Callable[[int], Optional[Fraction]]:
    if tree.real == tree.vertices and all(e.cuttable for e in tree.graph.edges):
        encoded = index.encode(tree.graph.edges)
        return lambda mask: index.cut_cost(mask, encoded)
    return lambda mask: tree_cut_cost(tree, index.members(mask))


def _subset_masks(index: SubsetIndex, mode: str, count: int, seed: int) -> List[int]:
    if mode == EXHAUSTIVE:
        return list(range(1, 1 << len(index)))
    bits = derive_rng(seed, "embed", "subsets").random((count, len(index))) < 0.5
    weights = [1 << i for i in range(len(index))]
    masks = {sum(w for w, b in zip(weights, row) if b) for row in bits}
    masks.discard(0)
    return sorted(masks)


def _cut_table(
    g: WeightedGraph, trees: Sequence[RootedTree], masks: List[int], workers: int
) -> List[Tuple[int, Fraction, List[Optional[Fraction]]]]:
    index = SubsetIndex(g)
    evaluators = [_tree_evaluator(index, t) for t in trees]

    def evaluate(chunk: List[int]):
        return [(mask, index.cut_cost(mask), [ev(mask) for ev in evaluators]) for mask in chunk]

    chunks = [masks[i :: max(workers, 1)] for i in range(max(workers, 1))]
    rows = [row for part in parallel_map(evaluate, chunks, workers) for row in part]
    rows.sort(key=lambda row: row[0])
    return rows


def certify(
    g: WeightedGraph,
    emb: TreeEmbedding,
    mode: str = EXHAUSTIVE,
    count: int = 2048,
    seed: int = 0,
    max_n: int = 14,
    workers: int = 1,
) -> CertificationReport:
    """Check per-tree domination and measure the average stretch over vertex subsets."""
    if mode == EXHAUSTIVE and g.n > max_n:
        raise RefusalError(f"exhaustive certification refused for n={g.n} > {max_n}")
    index = SubsetIndex(g)
    masks = _subset_masks(index, mode, count, seed)
    violations: List[Violation] = []
    violation_count = 0
    best: Optional[Fraction] = None
    witness = None
    unbounded = False
    for mask, graph_cut, tree_cuts in _cut_table(g, emb.trees, masks, workers):
        for i, tree_cut in enumerate(tree_cuts):
            if tree_cut is not None and tree_cut < graph_cut:
                violation_count += 1
                if len(violations) < REPORTED_VIOLATIONS:
                    violations.append(Violation(i, index.members(mask), graph_cut, tree_cut))
        if graph_cut <= 0 or unbounded:
            continue
        if any(tree_cut is None for tree_cut in tree_cuts):
            unbounded, witness = True, index.members(mask)
            continue
        ratio = sum(lam * t for lam, t in zip(emb.multipliers, tree_cuts)) / graph_cut
        if best is None or ratio > best:
            best, witness = ratio, index.members(mask)

    # stretch is 1 when no subset has a positive graph cut
    stretch = None if unbounded else (Fraction(1) if best is None else best)

    if violation_count:
        log.warning(f"Embedding violates per-tree domination on {violation_count} (tree, subset) pairs")
    log.debug(f"Certified {len(masks)} subsets in {mode} mode, stretch {stretch}")
    return CertificationReport(mode, len(masks), tuple(violations), violation_count, stretch, witness)


def _split(
    g: WeightedGraph,
    cluster: List[int],
    rep: int,
    weights: Dict[int, float],
    rng: np.random.Generator,
    exact_split_max: int,
) -> Tuple[List[int], List[int]]:
    """Split ``cluster`` into (side with ``rep``, other side) by minimum ratio cut."""
    members = set(cluster)
    inner_edges = [e for e in g.edges if e.u in members and e.v in members]
    if len(cluster) <= exact_split_max:
        others = [v for v in cluster if v != rep]
        bit = {v: 1 << i for i, v in enumerate(others)}
        encoded = [(bit.get(e.u, 0), bit.get(e.v, 0), weights[e.id]) for e in inner_edges]
        best_mask, best_ratio = None, math.inf
        for mask in range(1, 1 << len(others)):
            size = bin(mask).count("1")
            cut = sum(w for a, b, w in encoded if bool(mask & a) != bool(mask & b))
            ratio = cut / min(size, len(cluster) - size)
            if ratio < best_ratio:
                best_mask, best_ratio = mask, ratio
        outer = [v for v in others if best_mask & bit[v]]
    else:
        simple = nx.Graph()
        simple.add_nodes_from(cluster)
        for e in inner_edges:
            previous = simple.get_edge_data(e.u, e.v, {"weight": 0.0})["weight"]
            simple.add_edge(e.u, e.v, weight=previous + weights[e.id])
        left, right = nx.algorithms.community.kernighan_lin_bisection(
            simple, weight="weight", seed=int(rng.integers(2**31))
        )
        outer = sorted(right if rep in left else left)
    outer_set = set(outer)
    return [v for v in cluster if v not in outer_set], outer


def _representative(g: WeightedGraph, outer: List[int], inner: List[int], weights: Dict[int, float]) -> int:
    inner_set, outer_set = set(inner), set(outer)
    attachment = {v: 0.0 for v in outer}
    for e in g.edges:
        if e.u in outer_set and e.v in inner_set:
            attachment[e.u] += weights[e.id]
        elif e.v in outer_set and e.u in inner_set:
            attachment[e.v] += weights[e.id]
    return min(outer, key=lambda v: (-attachment[v], v))


def decomposition_tree(g: WeightedGraph, rng: np.random.Generator, perturb: bool, exact_split_max: int) -> RootedTree:
    """Hierarchical decomposition of ``g`` whose clusters are represented by real vertices.

    Each tree edge separates exactly one cluster C and costs w(delta(C)),
    which makes every tree cut dominate the graph cut of the same set.
    """
    weights = {e.id: float(e.cost) * (1.0 + rng.random() if perturb else 1.0) for e in g.edges}
    parents: Dict[int, int] = dict()
    costs: Dict[int, Fraction] = dict()
    stack: List[Tuple[List[int], int]] = [(sorted(g.vertices), g.source)]
    while stack:
        cluster, rep = stack.pop()
        if len(cluster) == 1:
            continue
        inner, outer = _split(g, cluster, rep, weights, rng, exact_split_max)
        child = _representative(g, outer, inner, weights)
        parents[child] = rep
        costs[child] = g.cost_of(boundary(g, outer))
        stack.append((inner, rep))
        stack.append((outer, child))
    return RootedTree.from_parents(g.source, parents, costs)


def _multipliers(table, k: int) -> Tuple[Fraction, ...]:
    """Convex weights minimizing the worst average stretch over the evaluated subsets."""
    if k == 1:
        return (Fraction(1),)
    rows = []
    for _, graph_cut, tree_cuts in table:
        if graph_cut > 0 and all(t is not None for t in tree_cuts):
            rows.append([float(t / graph_cut) for t in tree_cuts] + [-1.0])
    if not rows:
        return tuple(Fraction(1, k) for _ in range(k))
    result = solve_float(
        [0.0] * k + [1.0], A_ub=rows, b_ub=[0.0] * len(rows), A_eq=[[1.0] * k + [0.0]], b_eq=[1.0]
    )
    approx = [Fraction(max(v, 0.0)).limit_denominator(10**6) for v in result.x[:k]]
    total = sum(approx)
    if total == 0:
        return tuple(Fraction(1, k) for _ in range(k))
    return tuple(q / total for q in approx)


def build_embedding(g: WeightedGraph, config: Optional[SolverConfig] = None) -> TreeEmbedding:
    config = config or SolverConfig()
    if g.n < 2:
        raise InputError("an embedding needs at least two vertices")
    if not g.is_connected():
        raise InputError("graph must be connected; protect components without the source before embedding")
    if g.is_tree():
        log.info("Input graph is a tree; using the identity embedding")
        return TreeEmbedding.identity(g)

    k = config.trees or math.ceil(math.log2(g.n)) + 1
    candidates = parallel_map(
        lambda j: decomposition_tree(g, derive_rng(config.seed, "embed", j), j > 0, config.exact_split_max),
        range(k),
        config.workers,
    )
    trees: List[RootedTree] = []
    seen = set()
    for tree in candidates:
        key = tuple(sorted((c, p, tree.parent_edge(c).cost) for c, p in tree.parents().items()))
        if key not in seen:
            seen.add(key)
            trees.append(tree)
    log.debug(f"Built {len(trees)} distinct decomposition trees out of {k} candidates")

    mode = EXHAUSTIVE if g.n <= config.exhaustive_max_n else SAMPLED
    if mode == SAMPLED:
        log.warning(f"n={g.n} exceeds the exhaustive bound; certifying on {config.sampled_subsets} sampled subsets")
    masks = _subset_masks(SubsetIndex(g), mode, config.sampled_subsets, config.seed)
    table = _cut_table(g, trees, masks, config.workers)

    scaled: List[Tuple[int, RootedTree, Fraction]] = []
    for i, tree in enumerate(trees):
        alpha: Optional[Fraction] = Fraction(1)
        for _, graph_cut, tree_cuts in table:
            tree_cut = tree_cuts[i]
            if tree_cut is not None and tree_cut < graph_cut:
                if tree_cut == 0:
                    alpha = None
                    break
                alpha = max(alpha, graph_cut / tree_cut)
        if alpha is None:
            log.warning(f"Dropping tree {i}: it separates a positive graph cut at zero cost")
            continue
        if alpha > 1:
            log.debug(f"Scaling tree {i} by {alpha} to restore per-tree domination")
            tree = tree.with_costs({e.id: e.cost * alpha for e in tree.graph.edges})
        scaled.append((i, tree, alpha))
    if not scaled:
        raise InputError("no candidate tree dominates the graph cuts")

    table = [
        (mask, graph_cut, [None if tree_cuts[i] is None else tree_cuts[i] * alpha for i, _, alpha in scaled])
        for mask, graph_cut, tree_cuts in table
    ]
    multipliers = _multipliers(table, len(scaled))
    emb = TreeEmbedding(tuple(t for _, t, _ in scaled), multipliers, Fraction(1), mode)
    report = certify(g, emb, mode, config.sampled_subsets, config.seed, config.exhaustive_max_n, config.workers)
    if report.stretch is None:
        raise InputError("embedding cannot reproduce every graph cut")
    log.info(f"Embedding with k={emb.k} trees, stretch {report.stretch} ({mode})")
    return TreeEmbedding(emb.trees, multipliers, report.stretch, mode, report)


def tree_cut_to_graph_cut(g: WeightedGraph, tree: RootedTree, tree_cut: CutSolution) -> CutSolution:
    protected = (tree_cut.protected & tree.real & g.vertices) - {g.source}
    return CutSolution.from_cut(g, boundary(g, protected))


def embedding_to_document(emb: TreeEmbedding) -> EmbeddingDocument:
    trees = []
    for tree, lam in zip(emb.trees, emb.multipliers):
        parents = tree.parents()
        edges = {c: tree.parent_edge(c) for c in parents}
        trees.append(
            TreeDocument(
                parent=parents,
                costs={c: fmt(e.cost) for c, e in edges.items()},
                multiplier=fmt(lam),
                real=None if tree.real == tree.vertices else sorted(tree.real),
                cuttable={c: False for c, e in edges.items() if not e.cuttable} or None,
            )
        )
    return EmbeddingDocument(
        source=emb.trees[0].root,
        trees=trees,
        certified_stretch=fmt(emb.certified_stretch),
        certification_mode=emb.certification_mode,
        report=None if emb.report is None else report_to_document(emb.report),
    )


def report_to_document(report: CertificationReport) -> CertificationDocument:
    return CertificationDocument(
        mode=report.mode,
        subsets_checked=report.subsets_checked,
        stretch=None if report.stretch is None else fmt(report.stretch),
        stretch_witness=None if report.witness is None else sorted(report.witness),
        violation_count=report.violation_count,
        violations=[
            ViolationDocument(tree=v.tree, subset=sorted(v.subset), graph_cut=fmt(v.graph_cut), tree_cut=fmt(v.tree_cut))
            for v in report.violations
        ],
    )


def embedding_from_document(doc: EmbeddingDocument, g: WeightedGraph, config: Optional[SolverConfig] = None) -> TreeEmbedding:
    """Load an externally supplied embedding, re-certifying it against ``g``."""
    config = config or SolverConfig()
    if doc.source != g.source:
        raise InputError(f"embedding is rooted at {doc.source}, graph source is {g.source}")
    trees = []
    for i, entry in enumerate(doc.trees):
        tree = RootedTree.from_parents(doc.source, entry.parent, entry.costs, entry.real, entry.cuttable)
        if tree.real != g.vertices:
            raise InputError(f"tree {i} must carry exactly the graph's vertices as real vertices")
        trees.append(tree)
    multipliers = tuple(as_fraction(entry.multiplier, f"tree {i} multiplier") for i, entry in enumerate(doc.trees))
    mode = EXHAUSTIVE if g.n <= config.exhaustive_max_n else SAMPLED
    emb = TreeEmbedding(tuple(trees), multipliers, Fraction(1), mode, origin="file")
    report = certify(g, emb, mode, config.sampled_subsets, config.seed, config.exhaustive_max_n, config.workers)
    if not report.dominated:
        first = report.violations[0]
        raise InputError(
            f"supplied embedding violates per-tree domination on {report.violation_count} (tree, subset) pairs, "
            f"first at tree {first.tree} subset {sorted(first.subset)}"
        )
    stretch = report.stretch
    if stretch is None:
        raise InputError("supplied embedding cannot reproduce every graph cut")
    if mode == SAMPLED and doc.certified_stretch is not None:
        stretch = max(stretch, as_fraction(doc.certified_stretch, "certified_stretch"))
    return TreeEmbedding(tuple(trees), multipliers, stretch, mode, report, origin="file")
