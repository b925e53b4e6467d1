# SB-MinCC as the single-group case of DemFairCut or the zero-probability case of IndFairCut
from fractions import Fraction
from logging import Logger, getLogger
from typing import Any, Callable, Dict, Optional, Tuple

from faircut.embedding import TreeEmbedding, build_embedding
from faircut.errors import InputError
from faircut.graph import CutSolution, WeightedGraph
from faircut.models import CutReport, SolverConfig
from faircut.rational import fmt
from faircut.solvers.base import Solver
from faircut.solvers.demfair import DemographicSpec, Group, demfair_general
from faircut.solvers.indfair import ProtectionSpec, indfair_solve

log = getLogger(__name__)

Outcome = Tuple[CutSolution, Dict[str, Any]]


def single_group(g: WeightedGraph, target: int) -> DemographicSpec:
    others = frozenset(g.vertices - {g.source})
    return DemographicSpec((Group(others, Fraction(target, len(others))),))


def _via_demfair(
    g: WeightedGraph, target: int, method: str, emb: TreeEmbedding, config: SolverConfig, logger: Optional[Logger]
) -> Outcome:
    choice = demfair_general(g, single_group(g, target), method, emb, config, logger)
    meta = dict(method=f"demfair-{method}", tree=choice.tree)
    if choice.rounding is not None:
        meta.update(
            repetitions=choice.rounding.repetitions,
            attempts=choice.rounding.attempts,
            lp_objective=fmt(choice.rounding.lp_objective),
        )
    return choice.cut, meta


def _via_indfair(
    g: WeightedGraph, target: int, method: str, emb: TreeEmbedding, config: SolverConfig, logger: Optional[Logger]
) -> Outcome:
    result = indfair_solve(g, ProtectionSpec({}, target), config.epsilon, emb, config, logger)
    cut = min(result.distribution.support, key=lambda c: (c.cost, sorted(c.cut_edges)))
    return cut, dict(method="indfair", budget=fmt(result.budget), budget_bound=fmt(result.class_factor * result.budget))


ROUTES: Dict[str, Callable[..., Outcome]] = {"demfair": _via_demfair, "indfair": _via_indfair}


def _solve(
    g: WeightedGraph,
    target: int,
    route: str,
    method: str,
    emb: Optional[TreeEmbedding],
    config: SolverConfig,
    logger: Optional[Logger],
) -> Outcome:
    if route not in ROUTES:
        raise InputError(f"unknown route {route!r}; expected one of {sorted(ROUTES)}")
    if not 0 <= target <= g.n - 1:
        raise InputError(f"target {target} outside [0, {g.n - 1}]")
    if target == 0:
        return CutSolution.from_cut(g, ()), dict(method=route)
    emb = emb or build_embedding(g, config)
    return ROUTES[route](g, target, method, emb, config, logger)


def sbmincc_solve(
    g: WeightedGraph,
    target: int,
    route: str = "demfair",
    emb: Optional[TreeEmbedding] = None,
    config: Optional[SolverConfig] = None,
    method: str = "dp",
    logger: Optional[Logger] = None,
) -> CutSolution:
    """Cheapest cut found that leaves at least ``target`` vertices unreachable from the source."""
    return _solve(g, target, route, method, emb, config or SolverConfig(), logger)[0]


class SBMinCC(Solver):
    name = "sbmincc"

    def run(
        self, g: WeightedGraph, emb: TreeEmbedding, target: int = 0, route: str = "demfair", method: str = "dp"
    ) -> CutReport:
        cut, meta = _solve(g, target, route, method, emb, self.config, self.log)
        self.log.info(f"SB-MinCC via {route}: cost {cut.cost}, {len(cut.protected)} protected")
        return self.cut_report(cut, emb, target=target, **meta)
