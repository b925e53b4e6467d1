# Pydantic models: solver configuration, input documents and every JSON output document
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, field_validator

from faircut.rational import as_fraction

RationalField = Union[int, float, str]


class SolverConfig(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    epsilon: Fraction = Fraction(1, 4)
    epsilon_aux: Fraction = Fraction(1, 8)
    seed: int = 0
    exhaustive_max_n: int = 14
    oracle_max_n: int = 16
    plp_oracle_max_n: int = 10
    sampled_subsets: int = 2048
    trees: Optional[int] = None
    exact_split_max: int = 14
    memory_budget: int = 2 * 1024**3
    beta: int = 2
    markov_c: int = 4
    retry_cap: int = 64
    exact_lp_max_vars: int = 20
    iteration_factor: int = 50
    workers: int = 1

    @field_validator("epsilon", "epsilon_aux", mode="before")
    @classmethod
    def parse_rational(cls, value):
        return as_fraction(value, "epsilon")

    @field_validator("epsilon", "epsilon_aux")
    @classmethod
    def check_open_unit(cls, value: Fraction) -> Fraction:
        if not 0 < value < 1:
            raise ValueError(f"must lie in (0, 1), got {value}")
        return value

    @field_validator("seed")
    @classmethod
    def check_seed(cls, value: int) -> int:
        if not 0 <= value < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return value


class RunConfig(BaseModel):
    command: str
    graph: Optional[str] = None
    groups: Optional[str] = None
    protection: Optional[str] = None
    budget: Optional[RationalField] = None
    target: Optional[int] = None
    epsilon: RationalField = "1/4"
    seed: int = 0
    method: str = "dp"
    embedding: str = "build"
    out: Optional[str] = None
    max_n: Optional[int] = None
    sources: Optional[List[int]] = None
    workers: int = 1

    @field_validator("method")
    @classmethod
    def check_method(cls, value: str) -> str:
        if value not in ("dp", "lp"):
            raise ValueError("method must be 'dp' or 'lp'")
        return value

    def solver_config(self) -> SolverConfig:
        overrides = dict(epsilon=self.epsilon, seed=self.seed, workers=self.workers)
        if self.max_n is not None:
            overrides.update(exhaustive_max_n=self.max_n, oracle_max_n=self.max_n, plp_oracle_max_n=self.max_n)
        return SolverConfig(**overrides)


# Input documents


class GraphDocument(BaseModel):
    source: int
    edges: List[Tuple[int, int, RationalField]]
    n: Optional[int] = None
    vertices: Optional[List[int]] = None


class GroupEntry(BaseModel):
    members: List[int]
    fraction: RationalField


class DemographicsDocument(BaseModel):
    groups: List[GroupEntry]


class ProtectionDocument(BaseModel):
    target: int = 0
    probabilities: Dict[int, RationalField] = {}


class AuxCutDocument(BaseModel):
    budget: Optional[RationalField] = None
    target: Optional[int] = None
    vertex_weights: Dict[int, RationalField] = {}


class TreeDocument(BaseModel):
    parent: Dict[int, int]
    costs: Dict[int, RationalField]
    multiplier: RationalField
    real: Optional[List[int]] = None
    cuttable: Optional[Dict[int, bool]] = None


class ViolationDocument(BaseModel):
    tree: int
    subset: List[int]
    graph_cut: str
    tree_cut: Optional[str] = None


class CertificationDocument(BaseModel):
    mode: str
    subsets_checked: int
    stretch: Optional[str] = None
    stretch_witness: Optional[List[int]] = None
    violation_count: int = 0
    violations: List[ViolationDocument] = []


class EmbeddingDocument(BaseModel):
    source: int
    trees: List[TreeDocument]
    certified_stretch: Optional[RationalField] = None
    certification_mode: str = "sampled"
    report: Optional[CertificationDocument] = None
    seed: int = 0


class CutEntry(BaseModel):
    cut_edges: List[int]
    cost: str
    protected: List[int]


class SupportEntry(CutEntry):
    probability: str


class DistributionDocument(BaseModel):
    support: List[SupportEntry]
    budget_class: Optional[str] = None
    target: int = 0


# Output documents


class GroupCoverage(BaseModel):
    group: int
    size: int
    required: str
    protected: int


class EmbeddingSummary(BaseModel):
    origin: str
    trees: int
    stretch: str
    mode: str


class CutReport(CutEntry):
    command: str
    seed: int
    method: Optional[str] = None
    sources: Optional[List[int]] = None
    coverage: Optional[List[GroupCoverage]] = None
    value: Optional[str] = None
    budget: Optional[str] = None
    budget_bound: Optional[str] = None
    target: Optional[int] = None
    tree: Optional[int] = None
    repetitions: Optional[int] = None
    attempts: Optional[int] = None
    lp_objective: Optional[str] = None
    embedding: Optional[EmbeddingSummary] = None


class SweepProbe(BaseModel):
    budget: str
    feasible: bool
    oracle_calls: int


class DistributionReport(DistributionDocument):
    command: str
    seed: int
    budget: str
    class_factor: str
    marginals: Dict[str, str]
    sweep: List[SweepProbe]
    oracle_calls: int
    sources: Optional[List[int]] = None
    embedding: Optional[EmbeddingSummary] = None


class DualPointDocument(BaseModel):
    y: Dict[str, str]
    mu: str


class OracleDocument(BaseModel):
    command: str = "oracle"
    problem: str
    seed: int = 0
    feasible: bool
    enumerated: int
    optimum: Optional[str] = None
    witness: Optional[List[int]] = None
    cut_edges: Optional[List[int]] = None
    support: Optional[List[SupportEntry]] = None
    certificate: Optional[DualPointDocument] = None


class SampleReport(BaseModel):
    command: str = "sample"
    seed: int
    draws: List[CutEntry]


SCHEMAS = {
    "cut": CutReport,
    "distribution": DistributionReport,
    "embedding": EmbeddingDocument,
    "oracle": OracleDocument,
    "sample": SampleReport,
}
