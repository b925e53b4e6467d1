# AuxCut: budgeted maximum protected weight, exact on trees up to discretization, wrapped for general graphs
import math
from dataclasses import dataclass, field
from fractions import Fraction
from logging import Logger, getLogger
from typing import AbstractSet, Dict, Iterable, List, Mapping, Optional, Tuple

from faircut.embedding import TreeEmbedding, build_embedding, tree_cut_to_graph_cut
from faircut.errors import InfeasibleError, InputError
from faircut.graph import CutSolution, Edge, RootedTree, WeightedGraph, binarize
from faircut.models import AuxCutDocument, CutReport, SolverConfig
from faircut.rational import Rational, as_fraction, fmt
from faircut.solvers.base import Solver, TreeChoice, solve_per_tree

log = getLogger(__name__)

State = Tuple[int, int]


@dataclass(frozen=True)
class AuxCutInstance:
    graph: WeightedGraph
    budget: Fraction
    target: int
    weights: Dict[int, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise InputError(f"budget must be non-negative, got {self.budget}")
        if not 0 <= self.target <= self.graph.n - 1:
            raise InputError(f"target {self.target} outside [0, {self.graph.n - 1}]")
        for v, a in self.weights.items():
            if v not in self.graph.vertices:
                raise InputError(f"vertex weight given for unknown vertex {v}")
            if a < 0:
                raise InputError(f"vertex {v} has negative weight {a}")
            if v == self.graph.source and a != 0:
                raise InputError("the source carries no vertex weight")

    @classmethod
    def build(
        cls, graph: WeightedGraph, budget: Rational, target: int, weights: Optional[Mapping[int, Rational]] = None
    ) -> "AuxCutInstance":
        parsed = {int(v): as_fraction(a, f"weight of vertex {v}") for v, a in (weights or {}).items()}
        return cls(graph, as_fraction(budget, "budget"), int(target), parsed)

    @classmethod
    def from_document(
        cls, graph: WeightedGraph, doc: AuxCutDocument, budget: Optional[Rational] = None, target: Optional[int] = None
    ) -> "AuxCutInstance":
        budget = doc.budget if budget is None else budget
        target = doc.target if target is None else target
        if budget is None:
            raise InputError("an AuxCut instance needs a budget")
        return cls.build(graph, budget, target or 0, doc.vertex_weights)

    def value(self, protected: AbstractSet[int]) -> Fraction:
        return sum((self.weights.get(v, Fraction(0)) for v in protected), Fraction(0))


@dataclass(frozen=True)
class Discretization:
    # Integer costs of the edges that may be cut; edges dearer than the budget are left out
    costs: Dict[int, int]
    scale: Fraction
    budget: int


def discretize_edges(edges: Iterable[Edge], budget: Fraction, epsilon: Fraction) -> Discretization:
    edges = [e for e in edges if e.cuttable]
    if budget == 0:
        return Discretization({e.id: 0 for e in edges if e.cost == 0}, Fraction(1), 0)
    cap = math.ceil(len(edges) / epsilon) if edges else 1
    if budget.denominator == 1 and budget <= cap and all(e.cost.denominator == 1 for e in edges):
        scale, scaled_budget = Fraction(1), int(budget)
    else:
        scale, scaled_budget = Fraction(cap) / budget, cap
    costs = dict()
    for e in edges:
        w = math.floor(scale * e.cost)
        if w <= scaled_budget:
            costs[e.id] = w
    return Discretization(costs, scale, scaled_budget)


def discretize(inst: AuxCutInstance, epsilon: Rational) -> Discretization:
    """Floor-scale edge costs so that budget B maps to ceil(m/epsilon).

    Integer instances whose budget already fits are kept at scale 1.
    """
    epsilon = as_fraction(epsilon, "epsilon")
    if epsilon <= 0:
        raise InputError("epsilon must be positive")
    return discretize_edges(inst.graph.edges, inst.budget, epsilon)


def auxcut_on_tree(
    tree: RootedTree, budget: Fraction, target: int, weights: Mapping[int, Fraction], epsilon: Fraction
) -> CutSolution:
    """Table-A dynamic program over the binarized tree.

    A node's table maps (discretized spend, real vertices still connected to
    it) to the least weight of those connected vertices.
    """
    disc = discretize_edges(tree.graph.edges, budget, epsilon)
    bt = binarize(tree)
    tables: Dict[int, Dict[State, Fraction]] = dict()
    back: Dict[int, List[Tuple[int, Dict[State, Tuple[State, Optional[State]]]]]] = dict()
    for v in bt.postorder():
        real = bt.is_real(v)
        table = {(0, int(real)): weights.get(v, Fraction(0)) if real else Fraction(0)}
        steps = []
        for c in bt.children(v):
            e = bt.parent_edge(c)
            options = {state: (weight, state) for state, weight in tables.pop(c).items()}
            if e.cuttable and e.id in disc.costs:
                cut_state = (disc.costs[e.id], 0)
                if cut_state not in options or options[cut_state][0] > 0:
                    options[cut_state] = (Fraction(0), None)
            merged: Dict[State, Fraction] = dict()
            record: Dict[State, Tuple[State, Optional[State]]] = dict()
            for (wa, ka), weight_a in table.items():
                for (wb, kb), (weight_b, choice) in options.items():
                    spend = wa + wb
                    if spend > disc.budget:
                        continue
                    state = (spend, ka + kb)
                    total = weight_a + weight_b
                    if state not in merged or total < merged[state]:
                        merged[state] = total
                        record[state] = ((wa, ka), choice)
            table = merged
            steps.append((c, record))
        tables[v] = table
        back[v] = steps

    n_real = len(tree.real)
    root_table = tables[bt.root]
    log.debug(f"AuxCut DP: {len(root_table)} root states, scaled budget {disc.budget}, scale {disc.scale}")
    candidates = [(weight, spend, k) for (spend, k), weight in root_table.items() if n_real - k >= target]
    if not candidates:
        raise InfeasibleError(f"no cut within budget {budget} protects {target} vertices")
    _, spend, k = min(candidates)

    cut = set()
    stack = [(bt.root, (spend, k))]
    while stack:
        v, state = stack.pop()
        for c, record in reversed(back[v]):
            prev, choice = record[state]
            if choice is None:
                cut.add(bt.parent_edge(c).id)
            else:
                stack.append((c, choice))
            state = prev
    return CutSolution.from_cut(tree.graph, cut)


def auxcut_tree(inst: AuxCutInstance, epsilon: Rational) -> CutSolution:
    tree = RootedTree(inst.graph)
    return auxcut_on_tree(tree, inst.budget, inst.target, inst.weights, as_fraction(epsilon, "epsilon"))


def auxcut_general(
    inst: AuxCutInstance,
    emb: Optional[TreeEmbedding] = None,
    epsilon: Rational = Fraction(1, 8),
    config: Optional[SolverConfig] = None,
    logger: Optional[Logger] = None,
) -> TreeChoice:
    """Solve each tree at budget B times the embedding stretch and keep the most valuable boundary cut."""
    config = config or SolverConfig()
    epsilon = as_fraction(epsilon, "epsilon")
    g = inst.graph
    emb = emb or build_embedding(g, config)
    tree_budget = inst.budget * emb.certified_stretch

    def solve(i: int, tree: RootedTree) -> Tuple[Fraction, TreeChoice]:
        tree_cut = auxcut_on_tree(tree, tree_budget, inst.target, inst.weights, epsilon)
        choice = TreeChoice(tree_cut_to_graph_cut(g, tree, tree_cut), i, tree_cut)
        return inst.value(tree_cut.protected & tree.real), choice

    solved = solve_per_tree(emb, solve, config.workers, logger or log)
    _, choice = min((r for _, r in solved), key=lambda r: (-r[0], r[1].cut.cost, r[1].tree))
    return choice


class AuxCut(Solver):
    name = "auxcut"

    def run(
        self, g: WeightedGraph, emb: TreeEmbedding, inst: AuxCutInstance = None, epsilon: Optional[Rational] = None
    ) -> CutReport:
        epsilon = self.config.epsilon if epsilon is None else as_fraction(epsilon, "epsilon")
        choice = auxcut_general(inst, emb, epsilon, self.config, self.log)
        bound = (1 + epsilon) * emb.certified_stretch * inst.budget
        value = inst.value(choice.cut.protected)
        self.log.info(f"AuxCut value {value} at cost {choice.cut.cost} (bound {bound})")
        return self.cut_report(
            choice.cut,
            emb,
            value=fmt(value),
            budget=fmt(inst.budget),
            budget_bound=fmt(bound),
            target=inst.target,
            tree=choice.tree,
        )
