# Main module for the faircut library
from logging import Logger, getLogger
from typing import Dict, Iterable, Optional

from pydantic import BaseModel

from faircut.embedding import TreeEmbedding, build_embedding, embedding_from_document, embedding_to_document
from faircut.graph import WeightedGraph, merge_sources
from faircut.io import load_model
from faircut.models import EmbeddingDocument, OracleDocument, SolverConfig
from faircut.oracle import oracle_auxcut, oracle_demfair, oracle_indfair, oracle_plp_feasible, oracle_sbmincc
from faircut.rational import Rational
from faircut.solvers import AuxCut, DemFair, IndFair, SBMinCC
from faircut.solvers.auxcut import AuxCutInstance
from faircut.solvers.base import Solver
from faircut.solvers.demfair import DemographicSpec
from faircut.solvers.indfair import ProtectionSpec

SOLVERS = [SBMinCC, DemFair, IndFair, AuxCut]


class FairCut:
    """Solves every fair-cut problem on one graph, sharing a single tree embedding."""

    def __init__(
        self,
        graph: WeightedGraph,
        config: SolverConfig = None,
        logger: Logger = None,
        embedding: str = "build",
        sources: Optional[Iterable[int]] = None,
    ) -> None:
        if not logger:
            logger = getLogger()
        self.log = logger
        self.config = config or SolverConfig()
        self.SOLVER_MAPPING: Dict[str, Solver] = {cls.name: cls(logger, self.config) for cls in SOLVERS}

        self.sources = sorted(set(sources)) if sources else None
        if self.sources:
            graph = merge_sources(graph, {graph.source} | set(self.sources))
            self.log.info(f"Merged sources {self.sources} into source vertex {graph.source}")
        self.graph = graph
        self.embedding_origin = embedding
        self._embedding: Optional[TreeEmbedding] = None

    @property
    def embedding(self) -> TreeEmbedding:
        if self._embedding is None:
            if self.embedding_origin == "build":
                self._embedding = build_embedding(self.graph, self.config)
            else:
                self.log.debug(f"Loading embedding from {self.embedding_origin}")
                doc = load_model(self.embedding_origin, EmbeddingDocument)
                self._embedding = embedding_from_document(doc, self.graph, self.config)
        return self._embedding

    def finalize(self, report: BaseModel) -> BaseModel:
        if self.sources:
            return report.model_copy(update={"sources": self.sources})
        return report

    def sbmincc(self, target: int, route: str = "demfair", method: str = "dp"):
        emb = None if target == 0 else self.embedding
        return self.finalize(self.SOLVER_MAPPING["sbmincc"].run(self.graph, emb, target=target, route=route, method=method))

    def demfair(self, spec: DemographicSpec, method: str = "dp"):
        return self.finalize(self.SOLVER_MAPPING["demfair"].run(self.graph, self.embedding, spec=spec, method=method))

    def auxcut(self, inst: AuxCutInstance):
        return self.finalize(self.SOLVER_MAPPING["auxcut"].run(self.graph, self.embedding, inst=inst))

    def indfair(self, spec: ProtectionSpec):
        return self.finalize(self.SOLVER_MAPPING["indfair"].run(self.graph, self.embedding, spec=spec))

    def embed(self) -> EmbeddingDocument:
        return embedding_to_document(self.embedding).model_copy(update={"seed": self.config.seed})

    def oracle(self, problem: str, spec=None, target: int = 0, budget: Optional[Rational] = None, inst=None) -> OracleDocument:
        g, config = self.graph, self.config
        if problem == "sbmincc":
            report = oracle_sbmincc(g, target, config.oracle_max_n, config.workers)
        elif problem == "demfair":
            report = oracle_demfair(g, spec, config.oracle_max_n, config.workers)
        elif problem == "auxcut":
            report = oracle_auxcut(inst, config.oracle_max_n, config.workers)
        elif problem == "plp":
            report = oracle_plp_feasible(g, spec, budget, config.plp_oracle_max_n)
        elif problem == "indfair":
            report = oracle_indfair(g, spec, config.plp_oracle_max_n)
        else:
            raise ValueError(f"unknown oracle problem {problem!r}")
        self.log.info(f"{problem} oracle: feasible={report.feasible}, optimum={report.optimum}")
        return report.to_document().model_copy(update={"seed": config.seed})
