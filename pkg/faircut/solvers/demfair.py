# DemFairCut: exact tree DP, LP relaxation with dependent rounding, and the general-graph wrapper
import math
from dataclasses import dataclass
from fractions import Fraction
from logging import Logger, getLogger
from typing import AbstractSet, Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from faircut.embedding import TreeEmbedding, build_embedding, tree_cut_to_graph_cut
from faircut.errors import InfeasibleError, InputError, RefusalError, SolverFailure
from faircut.graph import CutSolution, RootedTree, WeightedGraph, binarize, root_path
from faircut.lp import solve_exact, solve_float
from faircut.models import CutReport, DemographicsDocument, GroupCoverage, SolverConfig
from faircut.rational import Rational, as_fraction, fmt, rationalize
from faircut.runtime import derive_rng, parallel_map
from faircut.solvers.base import Solver, TreeChoice, solve_per_tree

log = getLogger(__name__)

# Rough per-entry footprint of a sparse table slot (key tuple, Fraction, back-pointer)
ENTRY_BYTES = 256

Counts = Tuple[int, ...]


@dataclass(frozen=True)
class Group:
    members: FrozenSet[int]
    fraction: Fraction

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def threshold(self) -> Fraction:
        return self.fraction * self.size

    def covered(self, protected: AbstractSet[int]) -> int:
        return len(self.members & protected)


@dataclass(frozen=True)
class DemographicSpec:
    groups: Tuple[Group, ...]

    def __post_init__(self) -> None:
        if not self.groups:
            raise InputError("at least one demographic group is required")
        for h, group in enumerate(self.groups):
            if not group.members:
                raise InputError(f"group {h} has no members")
            if not 0 < group.fraction <= 1:
                raise InputError(f"group {h}: fraction {group.fraction} outside (0, 1]")

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[Iterable[int], Rational]]) -> "DemographicSpec":
        return cls(
            tuple(Group(frozenset(members), as_fraction(f, f"group {h} fraction")) for h, (members, f) in enumerate(pairs))
        )

    @classmethod
    def from_document(cls, doc: DemographicsDocument) -> "DemographicSpec":
        return cls.from_pairs((entry.members, entry.fraction) for entry in doc.groups)

    @property
    def gamma(self) -> int:
        return len(self.groups)

    @property
    def min_fraction(self) -> Fraction:
        return min(group.fraction for group in self.groups)

    def check(self, vertices: AbstractSet[int], source: int) -> None:
        for h, group in enumerate(self.groups):
            unknown = group.members - vertices
            if unknown:
                raise InputError(f"group {h} has unknown or auxiliary vertices {sorted(unknown)}")
            if source in group.members:
                raise InputError(f"group {h} contains the source {source}")

    def membership(self, v: int) -> Counts:
        return tuple(int(v in group.members) for group in self.groups)

    def satisfied(self, protected: AbstractSet[int], slack: Fraction = Fraction(1)) -> bool:
        return all(group.covered(protected) >= slack * group.threshold for group in self.groups)

    def coverage(self, protected: AbstractSet[int]) -> List[GroupCoverage]:
        return [
            GroupCoverage(group=h, size=group.size, required=fmt(group.threshold), protected=group.covered(protected))
            for h, group in enumerate(self.groups)
        ]


@dataclass(frozen=True)
class FractionalCut:
    x: Dict[int, Fraction]
    y: Dict[int, Fraction]
    objective: Fraction
    exact: bool = True

    @classmethod
    def from_edges(cls, t: RootedTree, x: Dict[int, Fraction], exact: bool = True) -> "FractionalCut":
        """Complete ``x`` with path sums y; a float solution is clamped so every y stays at most 1."""
        x = {e.id: Fraction(x.get(e.id, 0)) if e.cuttable else Fraction(0) for e in t.graph.edges}
        y = {t.root: Fraction(0)}
        for v in t.order:
            for c in t.children(v):
                eid = t.parent_edge(c).id
                if not exact:
                    x[eid] = min(max(x[eid], Fraction(0)), 1 - y[v])
                y[c] = y[v] + x[eid]
        objective = sum((e.cost * x[e.id] for e in t.graph.edges), Fraction(0))
        return cls(x, y, objective, exact)


@dataclass(frozen=True)
class RoundingResult:
    cut: CutSolution
    repetitions: int
    attempts: int
    lp_objective: Fraction


def table_bytes(t: RootedTree, spec: DemographicSpec) -> int:
    width = 1
    for group in spec.groups:
        width *= group.size + 1
    return t.graph.n * width * ENTRY_BYTES


def demfair_tree_dp(t: RootedTree, spec: DemographicSpec, config: Optional[SolverConfig] = None) -> CutSolution:
    """Minimum-cost cut of tree ``t`` meeting every group's coverage exactly.

    The table of a node maps the vector of group members still connected to it
    to the cheapest cut inside its subtree achieving that vector.
    """
    config = config or SolverConfig()
    spec.check(t.real, t.root)
    estimate = table_bytes(t, spec)
    if estimate > config.memory_budget:
        raise RefusalError(f"DP table estimate {estimate} bytes exceeds the memory budget {config.memory_budget}")

    bt = binarize(t)
    zero = (0,) * spec.gamma
    tables: Dict[int, Dict[Counts, Fraction]] = dict()
    back: Dict[int, List[Tuple[int, Dict[Counts, Tuple[Counts, Optional[Counts]]]]]] = dict()
    for v in bt.postorder():
        table = {spec.membership(v) if bt.is_real(v) else zero: Fraction(0)}
        steps = []
        for c in bt.children(v):
            e = bt.parent_edge(c)
            options = {vec: (cost, vec) for vec, cost in tables.pop(c).items()}
            if e.cuttable and (zero not in options or e.cost < options[zero][0]):
                options[zero] = (e.cost, None)
            merged: Dict[Counts, Fraction] = dict()
            record: Dict[Counts, Tuple[Counts, Optional[Counts]]] = dict()
            for a, cost_a in table.items():
                for b, (cost_b, choice) in options.items():
                    vec = tuple(i + j for i, j in zip(a, b))
                    total = cost_a + cost_b
                    if vec not in merged or total < merged[vec]:
                        merged[vec] = total
                        record[vec] = (a, choice)
            table = merged
            steps.append((c, record))
        tables[v] = table
        back[v] = steps

    root_table = tables[bt.root]
    log.debug(f"DemFair DP: {len(root_table)} root entries over {bt.graph.n} nodes")
    feasible = [
        (cost, vec)
        for vec, cost in root_table.items()
        if all(group.size - k >= group.threshold for group, k in zip(spec.groups, vec))
    ]
    if not feasible:
        raise InfeasibleError("no cut of the tree meets every group's coverage")
    cost, vec = min(feasible)

    cut = set()
    stack = [(bt.root, vec)]
    while stack:
        v, vec = stack.pop()
        for c, record in reversed(back[v]):
            prev, choice = record[vec]
            if choice is None:
                cut.add(bt.parent_edge(c).id)
            else:
                stack.append((c, choice))
            vec = prev
    solution = CutSolution.from_cut(t.graph, cut)
    assert solution.cost == cost
    return solution


def demfair_lp_solve(t: RootedTree, spec: DemographicSpec, config: Optional[SolverConfig] = None) -> FractionalCut:
    """Solve the path relaxation: min w.x with y_v = x(P(s,v)) <= 1 and group sums of y above f_h n_h."""
    config = config or SolverConfig()
    spec.check(t.real, t.root)
    edges = [e for e in t.graph.edges if e.cuttable]
    if not edges:
        raise InfeasibleError("the tree has no cuttable edge")
    column = {e.id: j for j, e in enumerate(edges)}
    paths = {v: [column[eid] for eid in root_path(t, v) if eid in column] for v in t.vertices}

    A_ub, b_ub = [], []
    for v in t.order:
        if v != t.root and not t.children(v):
            row = [0] * len(edges)
            for j in paths[v]:
                row[j] = 1
            A_ub.append(row)
            b_ub.append(Fraction(1))
    for group in spec.groups:
        row = [0] * len(edges)
        for v in group.members:
            for j in paths[v]:
                row[j] -= 1
        A_ub.append(row)
        b_ub.append(-group.threshold)
    c = [e.cost for e in edges]

    if len(edges) <= config.exact_lp_max_vars:
        result = solve_exact(c, A_ub, b_ub)
        exact = True
    else:
        log.warning(f"LP with {len(edges)} variables solved in floating point")
        result = solve_float(c, A_ub, b_ub)
        exact = False
    if not result.optimal:
        raise InfeasibleError(f"coverage relaxation is {result.status}")
    x = {e.id: (value if exact else rationalize(value)) for e, value in zip(edges, result.x)}
    return FractionalCut.from_edges(t, x, exact)


def _round_edges(t: RootedTree, frac: FractionalCut, rng: np.random.Generator) -> List[int]:
    ordered = sorted(t.graph.edges, key=lambda e: (t.depth(t.lower(e)) - 1, e.id))
    blocked = set()
    cut = []
    for e in ordered:
        lower = t.lower(e)
        upper = e.other(lower)
        if upper in blocked:
            blocked.add(lower)
            continue
        xe, above = frac.x.get(e.id, Fraction(0)), frac.y[upper]
        if xe <= 0 or above >= 1:
            continue
        if Fraction(rng.random()) < xe / (1 - above):
            cut.append(e.id)
            blocked.add(lower)
    return cut


def round_once(t: RootedTree, frac: FractionalCut, rng: np.random.Generator) -> CutSolution:
    """One pass of dependent rounding; no root-to-leaf path receives two cut edges."""
    return CutSolution.from_cut(t.graph, _round_edges(t, frac, rng))


def repetition_count(spec: DemographicSpec, epsilon: Fraction, beta: int = 2) -> int:
    log_gamma = 1.0 if spec.gamma == 1 else math.log(spec.gamma)
    return max(1, math.ceil(10 * beta * log_gamma / float(Fraction(epsilon) ** 2 * spec.min_fraction)))


def demfair_lp_round(
    t: RootedTree,
    spec: DemographicSpec,
    epsilon: Fraction,
    seed: int,
    config: Optional[SolverConfig] = None,
    labels: Tuple = (),
) -> RoundingResult:
    config = config or SolverConfig()
    epsilon = as_fraction(epsilon, "epsilon")
    frac = demfair_lp_solve(t, spec, config)
    repetitions = repetition_count(spec, epsilon, config.beta)
    cost_cap = config.markov_c * repetitions * frac.objective
    slack = 1 - epsilon
    log.debug(f"Rounding with N={repetitions}, LP objective {frac.objective}, cost cap {cost_cap}")

    best = None
    for attempt in range(config.retry_cap):
        draws = parallel_map(
            lambda r: _round_edges(t, frac, derive_rng(seed, "demfair", *labels, attempt, r)),
            range(repetitions),
            config.workers,
        )
        cut = CutSolution.from_cut(t.graph, set().union(*draws))
        covered = spec.satisfied(cut.protected, slack)
        if covered and cut.cost <= cost_cap:
            return RoundingResult(cut, repetitions, attempt + 1, frac.objective)
        log.debug(f"Attempt {attempt}: covered={covered}, cost {cut.cost}")
        score = (not covered, cut.cost)
        if best is None or score < best[0]:
            best = (score, cut)
    raise SolverFailure(
        f"rounding did not meet coverage and cost within {config.retry_cap} attempts",
        best=best[1],
        details=dict(repetitions=repetitions, lp_objective=fmt(frac.objective)),
    )


def demfair_general(
    g: WeightedGraph,
    spec: DemographicSpec,
    method: str = "dp",
    emb: Optional[TreeEmbedding] = None,
    config: Optional[SolverConfig] = None,
    logger: Optional[Logger] = None,
) -> TreeChoice:
    """Solve on every embedding tree and keep the cheapest boundary cut in ``g``."""
    config = config or SolverConfig()
    if method not in ("dp", "lp"):
        raise InputError(f"unknown method {method!r}")
    spec.check(g.vertices, g.source)
    emb = emb or build_embedding(g, config)

    def solve(i: int, tree: RootedTree) -> TreeChoice:
        rounding = None
        if method == "dp":
            tree_cut = demfair_tree_dp(tree, spec, config)
        else:
            rounding = demfair_lp_round(tree, spec, config.epsilon, config.seed, config, labels=(i,))
            tree_cut = rounding.cut
        return TreeChoice(tree_cut_to_graph_cut(g, tree, tree_cut), i, tree_cut, rounding)

    solved = solve_per_tree(emb, solve, config.workers, logger or log)
    return min((choice for _, choice in solved), key=lambda choice: (choice.cut.cost, choice.tree))


class DemFair(Solver):
    name = "demfair"

    def run(self, g: WeightedGraph, emb: TreeEmbedding, spec: DemographicSpec = None, method: str = "dp") -> CutReport:
        choice = demfair_general(g, spec, method, emb, self.config, self.log)
        self.log.info(f"DemFairCut ({method}) picked tree {choice.tree} with cost {choice.cut.cost}")
        extra = dict(method=method, tree=choice.tree, coverage=spec.coverage(choice.cut.protected))
        if choice.rounding is not None:
            extra.update(
                repetitions=choice.rounding.repetitions,
                attempts=choice.rounding.attempts,
                lp_objective=fmt(choice.rounding.lp_objective),
            )
        return self.cut_report(choice.cut, emb, **extra)
