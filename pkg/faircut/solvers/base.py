from dataclasses import dataclass
from logging import Logger, getLogger
from typing import Any, Callable, Dict, List, Optional, Tuple, TypeVar

from faircut.embedding import TreeEmbedding
from faircut.errors import FairCutError
from faircut.graph import CutSolution, RootedTree, WeightedGraph
from faircut.models import CutReport, SolverConfig
from faircut.rational import fmt
from faircut.runtime import parallel_map

R = TypeVar("R")


@dataclass(frozen=True)
class TreeChoice:
    """A general-graph cut chosen from the per-tree solutions of an embedding."""

    cut: CutSolution
    tree: int
    tree_cut: CutSolution
    rounding: Any = None


def solve_per_tree(
    emb: TreeEmbedding,
    fn: Callable[[int, RootedTree], R],
    workers: int = 1,
    logger: Optional[Logger] = None,
) -> List[Tuple[int, R]]:
    """Run ``fn`` on every embedding tree, skipping trees whose solve raises.

    The last error is re-raised only when no tree produced a result.
    """
    log = logger or getLogger(__name__)
    failures: List[FairCutError] = []

    def attempt(i: int):
        try:
            return fn(i, emb.trees[i])
        except FairCutError as e:
            log.error(f"tree {i}: {e}")
            failures.append(e)
            return None

    results = parallel_map(attempt, range(emb.k), workers)
    solved = [(i, r) for i, r in enumerate(results) if r is not None]
    if not solved and failures:
        raise failures[-1]
    return solved


class Solver:
    name: str = None

    def __init__(self, logger: Logger = None, config: SolverConfig = None):
        if not logger:
            logger = getLogger()
        self.log = logger
        self.config = config or SolverConfig()

    # Define a template for results from this solver
    def result_template(self) -> Dict[str, Any]:
        return dict(command=self.name, seed=self.config.seed)

    def cut_report(self, cut: CutSolution, emb: Optional[TreeEmbedding] = None, **extra) -> CutReport:
        template = self.result_template()
        template.update(extra)
        return CutReport(
            cut_edges=sorted(cut.cut_edges),
            cost=fmt(cut.cost),
            protected=sorted(cut.protected),
            embedding=None if emb is None else emb.summary(),
            **template,
        )

    # Solve one instance on a graph through its tree embedding
    def run(self, g: WeightedGraph, emb: TreeEmbedding, **kwargs):
        raise NotImplementedError()
