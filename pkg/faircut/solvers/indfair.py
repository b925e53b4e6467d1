# IndFairCut: round-or-cut over the distribution LP with AuxCut as the separation oracle
from dataclasses import dataclass, field
from fractions import Fraction
from logging import Logger, getLogger
from typing import AbstractSet, Dict, List, Mapping, Optional, Tuple

import numpy as np

from faircut.embedding import EXHAUSTIVE, TreeEmbedding, build_embedding
from faircut.errors import InfeasibleError, InputError, UnresolvedError
from faircut.graph import CutSolution, WeightedGraph
from faircut.lp import solve_exact
from faircut.models import (
    DistributionDocument,
    DistributionReport,
    DualPointDocument,
    ProtectionDocument,
    SolverConfig,
    SupportEntry,
    SweepProbe,
)
from faircut.rational import Rational, as_fraction, fmt
from faircut.solvers.auxcut import AuxCutInstance, auxcut_general
from faircut.solvers.base import Solver

log = getLogger(__name__)


@dataclass(frozen=True)
class ProtectionSpec:
    probabilities: Dict[int, Fraction] = field(default_factory=dict)
    target: int = 0

    def __post_init__(self) -> None:
        if self.target < 0:
            raise InputError(f"target must be non-negative, got {self.target}")
        for v, p in self.probabilities.items():
            if not 0 <= p <= 1:
                raise InputError(f"protection probability of vertex {v} outside [0, 1]: {p}")

    @classmethod
    def build(cls, probabilities: Optional[Mapping[int, Rational]] = None, target: int = 0) -> "ProtectionSpec":
        parsed = {int(v): as_fraction(p, f"probability of vertex {v}") for v, p in (probabilities or {}).items()}
        return cls(parsed, int(target))

    @classmethod
    def from_document(cls, doc: ProtectionDocument) -> "ProtectionSpec":
        return cls.build(doc.probabilities, doc.target)

    def check(self, g: WeightedGraph) -> None:
        if self.target > g.n - 1:
            raise InputError(f"target {self.target} exceeds the {g.n - 1} non-source vertices")
        unknown = set(self.probabilities) - g.vertices
        if unknown:
            raise InputError(f"probabilities given for unknown vertices {sorted(unknown)}")
        if self.probabilities.get(g.source, Fraction(0)) != 0:
            raise InputError("the source cannot carry a protection probability")

    def p(self, v: int) -> Fraction:
        return self.probabilities.get(v, Fraction(0))


@dataclass(frozen=True)
class DualPoint:
    y: Dict[int, Fraction]
    mu: Fraction

    def value(self, protected: AbstractSet[int]) -> Fraction:
        return sum((self.y.get(v, Fraction(0)) for v in protected), Fraction(0))

    def check(self, spec: Optional[ProtectionSpec] = None) -> None:
        """Coordinates must be non-negative; with ``spec`` the point must also be normalized."""
        if any(value < 0 for value in self.y.values()):
            raise InputError("dual point has a negative coordinate")
        if spec is not None and sum((spec.p(v) * value for v, value in self.y.items()), Fraction(0)) < self.mu + 1:
            raise InputError("dual point violates its normalization")

    def to_document(self) -> DualPointDocument:
        return DualPointDocument(y={str(v): fmt(value) for v, value in sorted(self.y.items())}, mu=fmt(self.mu))


@dataclass(frozen=True)
class CutDistribution:
    support: Tuple[CutSolution, ...]
    probabilities: Tuple[Fraction, ...]
    budget_class: Optional[Fraction] = None
    target: int = 0

    def __post_init__(self) -> None:
        if not self.support or len(self.support) != len(self.probabilities):
            raise InputError("a distribution needs one probability per support cut")
        if any(x < 0 for x in self.probabilities) or sum(self.probabilities) != 1:
            raise InputError("probabilities must be non-negative and sum to exactly 1")

    @classmethod
    def point_mass(cls, cut: CutSolution, budget_class: Optional[Fraction] = None, target: int = 0) -> "CutDistribution":
        return cls((cut,), (Fraction(1),), budget_class, target)

    def marginal(self, v: int) -> Fraction:
        return sum((x for cut, x in zip(self.support, self.probabilities) if v in cut.protected), Fraction(0))

    def marginals(self, vertices: AbstractSet[int]) -> Dict[int, Fraction]:
        return {v: self.marginal(v) for v in sorted(vertices)}

    def verify(self, g: WeightedGraph) -> bool:
        return all(
            cut.verify(g)
            and len(cut.protected) >= self.target
            and (self.budget_class is None or cut.cost <= self.budget_class)
            for cut in self.support
        )

    def entries(self) -> List[SupportEntry]:
        return [
            SupportEntry(
                cut_edges=sorted(cut.cut_edges), cost=fmt(cut.cost), protected=sorted(cut.protected), probability=fmt(x)
            )
            for cut, x in zip(self.support, self.probabilities)
        ]

    def to_document(self) -> DistributionDocument:
        return DistributionDocument(
            support=self.entries(),
            budget_class=None if self.budget_class is None else fmt(self.budget_class),
            target=self.target,
        )

    @classmethod
    def from_document(cls, doc: DistributionDocument, g: Optional[WeightedGraph] = None) -> "CutDistribution":
        support = []
        for i, entry in enumerate(doc.support):
            if g is None:
                cut = CutSolution(
                    frozenset(entry.cut_edges), as_fraction(entry.cost, f"support {i} cost"), frozenset(entry.protected)
                )
            else:
                cut = CutSolution.from_cut(g, entry.cut_edges)
                if cut.protected != frozenset(entry.protected) or cut.cost != as_fraction(entry.cost, "cost"):
                    raise InputError(f"support entry {i} does not match the graph")
            support.append(cut)
        probabilities = tuple(as_fraction(entry.probability, f"support {i} probability") for i, entry in enumerate(doc.support))
        budget_class = None if doc.budget_class is None else as_fraction(doc.budget_class, "budget_class")
        return cls(tuple(support), probabilities, budget_class, doc.target)


@dataclass(frozen=True)
class Separation:
    member: bool
    cut: Optional[CutSolution] = None
    value: Optional[Fraction] = None


@dataclass(frozen=True)
class FeasibilityResult:
    budget: Fraction
    distribution: Optional[CutDistribution]
    certificate: Optional[DualPoint]
    oracle_calls: int

    @property
    def feasible(self) -> bool:
        return self.distribution is not None


@dataclass(frozen=True)
class IndFairResult:
    budget: Fraction
    distribution: CutDistribution
    class_factor: Fraction
    trace: Tuple[FeasibilityResult, ...]
    oracle_calls: int


def _most_valuable_cut(
    g: WeightedGraph,
    target: int,
    budget: Fraction,
    weights: Mapping[int, Fraction],
    emb: TreeEmbedding,
    config: SolverConfig,
    logger: Optional[Logger],
) -> Optional[CutSolution]:
    """AuxCut at budget ``budget``; None when the affordable family is provably empty."""
    inst = AuxCutInstance(g, budget, target, {v: a for v, a in weights.items() if v != g.source and a > 0})
    try:
        return auxcut_general(inst, emb, config.epsilon_aux, config, logger).cut
    except InfeasibleError as e:
        if emb.certification_mode == EXHAUSTIVE:
            return None
        raise UnresolvedError(f"AuxCut found no cut at budget {budget} and the embedding is only sampled: {e}")


def separate(
    g: WeightedGraph,
    target: int,
    budget: Rational,
    point: DualPoint,
    emb: TreeEmbedding,
    config: Optional[SolverConfig] = None,
    logger: Optional[Logger] = None,
) -> Separation:
    """Either certify that ``point`` lies in Q(budget) or return a cut whose constraint it violates."""
    config = config or SolverConfig()
    point.check()
    cut = _most_valuable_cut(g, target, as_fraction(budget, "budget"), point.y, emb, config, logger)
    if cut is None:
        return Separation(True)
    value = point.value(cut.protected)
    return Separation(value <= point.mu, cut, value)


def feasibility_round(
    g: WeightedGraph,
    spec: ProtectionSpec,
    budget: Rational,
    emb: Optional[TreeEmbedding] = None,
    config: Optional[SolverConfig] = None,
    logger: Optional[Logger] = None,
) -> FeasibilityResult:
    """Cutting-plane loop on the restricted distribution LP.

    Returns a basic distribution meeting every p_v, or INFEASIBLE with a
    normalized dual point that the separation oracle could not cut off.
    """
    config = config or SolverConfig()
    budget = as_fraction(budget, "budget")
    spec.check(g)
    emb = emb or build_embedding(g, config)
    budget_class = (1 + config.epsilon_aux) * emb.certified_stretch * budget
    cap = config.iteration_factor * g.n

    seed_cut = _most_valuable_cut(g, spec.target, budget, spec.probabilities, emb, config, logger)
    calls = 1
    if seed_cut is None:
        point = DualPoint({}, Fraction(-1))
        log.debug(f"B={budget}: no affordable cut saves {spec.target} vertices")
        return FeasibilityResult(budget, None, point, calls)

    rows = sorted(v for v in g.vertices if spec.p(v) > 0)
    columns: List[CutSolution] = [seed_cut]
    while True:
        A_ub = [[-int(v in cut.protected) for cut in columns] for v in rows]
        b_ub = [-spec.p(v) for v in rows]
        result = solve_exact([0] * len(columns), A_ub, b_ub, [[1] * len(columns)], [1])
        if result.optimal:
            kept = [(cut, x) for cut, x in zip(columns, result.x) if x > 0]
            distribution = CutDistribution(
                tuple(cut for cut, _ in kept), tuple(x for _, x in kept), budget_class, spec.target
            )
            log.debug(f"B={budget}: distribution over {len(kept)} cuts after {calls} oracle calls")
            return FeasibilityResult(budget, distribution, None, calls)

        y = dict(zip(rows, result.farkas_ub))
        mu = result.farkas_eq[0]
        gap = sum((spec.p(v) * y[v] for v in rows), Fraction(0)) - mu
        assert gap > 0, "Farkas certificate without positive gap"
        point = DualPoint({v: value / gap for v, value in y.items()}, mu / gap)
        point.check(spec)

        if calls >= cap:
            raise UnresolvedError(f"no verdict at budget {budget} after {calls} oracle calls", best=point)
        separation = separate(g, spec.target, budget, point, emb, config, logger)
        calls += 1
        if separation.member:
            log.debug(f"B={budget}: dual point certified after {calls} oracle calls")
            return FeasibilityResult(budget, None, point, calls)
        if any(cut.cut_edges == separation.cut.cut_edges for cut in columns):
            raise UnresolvedError(f"separation repeated a known cut at budget {budget}", best=point)
        columns.append(separation.cut)


def budget_grid(g: WeightedGraph, epsilon: Fraction) -> List[Fraction]:
    total = g.total_cost
    grid = {Fraction(0), total}
    positive = [e.cost for e in g.edges if e.cost > 0]
    if positive:
        b = min(positive)
        while b < total:
            grid.add(b)
            b *= 1 + epsilon
    return sorted(grid)


def indfair_solve(
    g: WeightedGraph,
    spec: ProtectionSpec,
    epsilon: Rational = Fraction(1, 4),
    emb: Optional[TreeEmbedding] = None,
    config: Optional[SolverConfig] = None,
    logger: Optional[Logger] = None,
) -> IndFairResult:
    """Bisect the geometric budget grid for the smallest budget admitting a distribution."""
    config = config or SolverConfig()
    epsilon = as_fraction(epsilon, "epsilon")
    spec.check(g)
    emb = emb or build_embedding(g, config)
    grid = budget_grid(g, epsilon)
    trace: List[FeasibilityResult] = []
    probes: Dict[int, FeasibilityResult] = dict()

    def probe(i: int) -> FeasibilityResult:
        if i not in probes:
            probes[i] = feasibility_round(g, spec, grid[i], emb, config, logger)
            trace.append(probes[i])
        return probes[i]

    hi = len(grid) - 1
    if not probe(hi).feasible:
        raise InfeasibleError(
            f"no distribution exists even at budget w(E) = {grid[hi]}", certificate=probes[hi].certificate
        )
    lo = 0
    while lo < hi:
        mid = (lo + hi) // 2
        if probe(mid).feasible:
            hi = mid
        else:
            lo = mid + 1
    final = probe(hi)
    class_factor = (1 + config.epsilon_aux) * emb.certified_stretch
    calls = sum(r.oracle_calls for r in trace)
    log.info(f"IndFairCut budget {final.budget} after {len(trace)} probes and {calls} oracle calls")
    return IndFairResult(final.budget, final.distribution, class_factor, tuple(trace), calls)


def sample(dist: CutDistribution, rng: np.random.Generator) -> CutSolution:
    u = Fraction(rng.random())
    cumulative = Fraction(0)
    for cut, x in zip(dist.support, dist.probabilities):
        cumulative += x
        if u < cumulative:
            return cut
    return dist.support[-1]


class IndFair(Solver):
    name = "indfair"

    def run(
        self, g: WeightedGraph, emb: TreeEmbedding, spec: ProtectionSpec = None, epsilon: Optional[Rational] = None
    ) -> DistributionReport:
        epsilon = self.config.epsilon if epsilon is None else epsilon
        result = indfair_solve(g, spec, epsilon, emb, self.config, self.log)
        dist = result.distribution
        return DistributionReport(
            support=dist.entries(),
            budget_class=fmt(dist.budget_class),
            target=dist.target,
            budget=fmt(result.budget),
            class_factor=fmt(result.class_factor),
            marginals={str(v): fmt(x) for v, x in dist.marginals(g.vertices - {g.source}).items()},
            sweep=[
                SweepProbe(budget=fmt(r.budget), feasible=r.feasible, oracle_calls=r.oracle_calls) for r in result.trace
            ],
            oracle_calls=result.oracle_calls,
            embedding=emb.summary(),
            **self.result_template(),
        )
