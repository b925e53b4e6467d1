# Brute-force reference solvers over closed cuts delta(S), exact at small scale
from dataclasses import dataclass
from fractions import Fraction
from logging import getLogger
from typing import Callable, FrozenSet, List, Optional, Tuple

from faircut.errors import RefusalError
from faircut.graph import CutSolution, SubsetIndex, WeightedGraph, boundary
from faircut.lp import solve_exact
from faircut.models import OracleDocument
from faircut.rational import Rational, as_fraction, fmt
from faircut.runtime import parallel_map
from faircut.solvers.auxcut import AuxCutInstance
from faircut.solvers.demfair import DemographicSpec
from faircut.solvers.indfair import CutDistribution, DualPoint, ProtectionSpec

log = getLogger(__name__)


@dataclass(frozen=True)
class OracleReport:
    problem: str
    feasible: bool
    enumerated: int
    optimum: Optional[Fraction] = None
    witness: Optional[FrozenSet[int]] = None
    cut: Optional[CutSolution] = None
    distribution: Optional[CutDistribution] = None
    certificate: Optional[DualPoint] = None

    def to_document(self) -> OracleDocument:
        return OracleDocument(
            problem=self.problem,
            feasible=self.feasible,
            enumerated=self.enumerated,
            optimum=None if self.optimum is None else fmt(self.optimum),
            witness=None if self.witness is None else sorted(self.witness),
            cut_edges=None if self.cut is None else sorted(self.cut.cut_edges),
            support=None if self.distribution is None else self.distribution.entries(),
            certificate=None if self.certificate is None else self.certificate.to_document(),
        )


def _refuse_above(g: WeightedGraph, max_n: int, problem: str) -> None:
    if g.n > max_n:
        raise RefusalError(f"{problem} oracle refused for n={g.n} > {max_n}")


def _best_subset(
    index: SubsetIndex, key: Callable[[int, Fraction], Optional[tuple]], workers: int
) -> Tuple[Optional[tuple], int]:
    """Smallest ``key`` over all subsets; a key of None marks an infeasible subset."""
    total = 1 << len(index)
    parts = max(1, workers)

    def scan(offset: int):
        best = None
        for mask in range(offset, total, parts):
            k = key(mask, index.cut_cost(mask))
            if k is not None and (best is None or k < best):
                best = k
        return best

    found = [b for b in parallel_map(scan, range(parts), workers) if b is not None]
    return (min(found) if found else None), total


def _report(g: WeightedGraph, index: SubsetIndex, problem: str, best: Optional[tuple], enumerated: int, value) -> OracleReport:
    if best is None:
        log.debug(f"{problem} oracle: empty feasible family over {enumerated} subsets")
        return OracleReport(problem, False, enumerated)
    mask = best[-1]
    witness = index.members(mask)
    return OracleReport(problem, True, enumerated, value(best), witness, CutSolution.from_cut(g, boundary(g, witness)))


def oracle_sbmincc(g: WeightedGraph, target: int, max_n: int = 16, workers: int = 1) -> OracleReport:
    _refuse_above(g, max_n, "sbmincc")
    index = SubsetIndex(g)
    best, enumerated = _best_subset(
        index, lambda mask, cost: (cost, mask) if SubsetIndex.size(mask) >= target else None, workers
    )
    return _report(g, index, "sbmincc", best, enumerated, lambda b: b[0])


def oracle_demfair(g: WeightedGraph, spec: DemographicSpec, max_n: int = 16, workers: int = 1) -> OracleReport:
    _refuse_above(g, max_n, "demfair")
    spec.check(g.vertices, g.source)
    index = SubsetIndex(g)
    groups = [(index.mask_of(group.members), group.threshold) for group in spec.groups]

    def key(mask: int, cost: Fraction):
        if all(SubsetIndex.size(mask & members) >= threshold for members, threshold in groups):
            return cost, mask
        return None

    best, enumerated = _best_subset(index, key, workers)
    return _report(g, index, "demfair", best, enumerated, lambda b: b[0])


def oracle_auxcut(inst: AuxCutInstance, max_n: int = 16, workers: int = 1) -> OracleReport:
    g = inst.graph
    _refuse_above(g, max_n, "auxcut")
    index = SubsetIndex(g)
    weight = {index.bit[v]: inst.weights.get(v, Fraction(0)) for v in index.vertices}

    def key(mask: int, cost: Fraction):
        if cost > inst.budget or SubsetIndex.size(mask) < inst.target:
            return None
        value = sum((a for bit, a in weight.items() if mask & bit), Fraction(0))
        return -value, cost, mask

    best, enumerated = _best_subset(index, key, workers)
    return _report(g, index, "auxcut", best, enumerated, lambda b: -b[0])


def affordable_cuts(g: WeightedGraph, target: int, budget: Fraction) -> List[CutSolution]:
    """Distinct closed cuts delta(S) with |S| >= target and cost at most ``budget``."""
    index = SubsetIndex(g)
    cuts, seen = [], set()
    for mask in index.masks():
        if SubsetIndex.size(mask) < target or index.cut_cost(mask) > budget:
            continue
        edges = boundary(g, index.members(mask))
        if edges not in seen:
            seen.add(edges)
            cuts.append(CutSolution.from_cut(g, edges))
    return cuts


def oracle_plp_feasible(g: WeightedGraph, spec: ProtectionSpec, budget: Rational, max_n: int = 10) -> OracleReport:
    """Exact distribution LP over every affordable closed cut."""
    _refuse_above(g, max_n, "plp")
    spec.check(g)
    budget = as_fraction(budget, "budget")
    columns = affordable_cuts(g, spec.target, budget)
    enumerated = 1 << (g.n - 1)
    if not columns:
        return OracleReport("plp", False, enumerated, budget, certificate=DualPoint({}, Fraction(-1)))

    rows = sorted(v for v in g.vertices if spec.p(v) > 0)
    A_ub = [[-int(v in cut.protected) for cut in columns] for v in rows]
    result = solve_exact([0] * len(columns), A_ub, [-spec.p(v) for v in rows], [[1] * len(columns)], [1])
    if result.optimal:
        kept = [(cut, x) for cut, x in zip(columns, result.x) if x > 0]
        dist = CutDistribution(tuple(c for c, _ in kept), tuple(x for _, x in kept), budget, spec.target)
        return OracleReport("plp", True, enumerated, budget, distribution=dist)

    y = dict(zip(rows, result.farkas_ub))
    mu = result.farkas_eq[0]
    gap = sum((spec.p(v) * y[v] for v in rows), Fraction(0)) - mu
    point = DualPoint({v: value / gap for v, value in y.items()}, mu / gap)
    return OracleReport("plp", False, enumerated, budget, certificate=point)


def oracle_indfair(g: WeightedGraph, spec: ProtectionSpec, max_n: int = 10) -> OracleReport:
    """Least budget at which the exact distribution LP becomes feasible."""
    _refuse_above(g, max_n, "indfair")
    spec.check(g)
    index = SubsetIndex(g)
    candidates = sorted({index.cut_cost(mask) for mask in index.masks() if SubsetIndex.size(mask) >= spec.target})
    lo, hi = 0, len(candidates) - 1
    reports = {hi: oracle_plp_feasible(g, spec, candidates[hi], max_n)}
    while lo < hi:
        mid = (lo + hi) // 2
        reports[mid] = oracle_plp_feasible(g, spec, candidates[mid], max_n)
        if reports[mid].feasible:
            hi = mid
        else:
            lo = mid + 1
    final = reports[hi]
    return OracleReport("indfair", final.feasible, final.enumerated, candidates[hi], distribution=final.distribution)
