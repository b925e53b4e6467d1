import math
from fractions import Fraction

import numpy as np
import pytest

from faircut.embedding import TreeEmbedding, build_embedding
from faircut.errors import InputError
from faircut.graph import CutSolution
from faircut.models import DistributionDocument, ProtectionDocument, SolverConfig
from faircut.oracle import oracle_plp_feasible
from faircut.solvers.indfair import (
    CutDistribution,
    DualPoint,
    IndFair,
    ProtectionSpec,
    budget_grid,
    feasibility_round,
    indfair_solve,
    sample,
    separate,
)

F = Fraction
P_VALUES = [F(0), F(1, 4), F(1, 2), F(1)]


@pytest.fixture
def star_spec() -> ProtectionSpec:
    return ProtectionSpec.build({1: "1/2", 2: "1/2"}, 1)


@pytest.fixture
def star_split(star) -> CutDistribution:
    return CutDistribution(
        (CutSolution.from_cut(star, [0]), CutSolution.from_cut(star, [1])), (F(1, 2), F(1, 2)), F(2), 1
    )


def assert_sound(g, spec, dist):
    assert sum(dist.probabilities) == 1
    assert len(dist.support) <= g.n
    assert dist.verify(g)
    for v in g.vertices - {g.source}:
        assert dist.marginal(v) >= spec.p(v)


def test_separate_zero_weights(g1):
    emb = build_embedding(g1)
    found = separate(g1, 0, 3, DualPoint({}, F(-1)), emb)
    assert not found.member
    assert found.value == 0


@pytest.mark.parametrize("budget, member", [(2, False), (1, True)])
def test_separate_single_vertex(star, budget, member):
    emb = TreeEmbedding.identity(star)
    found = separate(star, 0, budget, DualPoint({1: F(1)}, F(0)), emb)
    assert found.member == member
    if not member:
        assert 1 in found.cut.protected
    # an indicator can never beat a threshold of one
    assert separate(star, 0, budget, DualPoint({1: F(1)}, F(1)), emb).member


@pytest.mark.parametrize("scale", [F(1, 3), F(1), F(7)])
def test_separate_is_scale_invariant(star, scale):
    emb = TreeEmbedding.identity(star)
    base = separate(star, 1, 2, DualPoint({1: F(2), 2: F(1)}, F(1)), emb)
    scaled = separate(star, 1, 2, DualPoint({1: 2 * scale, 2: scale}, scale), emb)
    assert base.member == scaled.member is False
    assert base.cut == scaled.cut


def test_separate_with_unreachable_target(star):
    # nothing within budget protects a vertex, so the affordable family is empty
    assert separate(star, 1, 1, DualPoint({1: F(1)}, F(0)), TreeEmbedding.identity(star)).member


def test_separate_rejects_negative_coordinates(star):
    with pytest.raises(InputError, match="negative"):
        separate(star, 0, 2, DualPoint({1: F(-1)}, F(0)), TreeEmbedding.identity(star))


def test_round_with_no_constraints(g1):
    result = feasibility_round(g1, ProtectionSpec(), 0, build_embedding(g1))
    assert result.feasible
    assert result.distribution.support == (CutSolution.from_cut(g1, []),)
    assert result.distribution.probabilities == (1,)


def test_round_full_protection(g1, instance_path):
    with open(instance_path("g1_protection.json")) as fh:
        spec = ProtectionSpec.from_document(ProtectionDocument.model_validate_json(fh.read()))
    result = feasibility_round(g1, spec, 3, build_embedding(g1))
    assert result.feasible
    (cut,) = result.distribution.support
    assert cut.cut_edges == {0, 1}
    assert cut.cost == 3
    assert_sound(g1, spec, result.distribution)


def test_round_full_protection_too_cheap(g1):
    spec = ProtectionSpec.build({1: 1, 2: 1, 3: 1}, 3)
    result = feasibility_round(g1, spec, 1, build_embedding(g1))
    assert not result.feasible
    assert not oracle_plp_feasible(g1, spec, 1).feasible


def test_round_needs_two_cuts(star, star_spec):
    result = feasibility_round(star, star_spec, 2, TreeEmbedding.identity(star))
    assert result.feasible
    assert result.oracle_calls == 2
    dist = result.distribution
    assert sorted(sorted(cut.protected) for cut in dist.support) == [[1], [2]]
    assert dist.probabilities == (F(1, 2), F(1, 2))
    assert dist.budget_class == F(9, 4)
    assert_sound(star, star_spec, dist)


def test_round_certificate(star, star_spec):
    result = feasibility_round(star, star_spec, 1, TreeEmbedding.identity(star))
    assert not result.feasible
    assert result.certificate is not None


@pytest.mark.parametrize("seed", range(8))
def test_round_verdicts_match_oracle(random_graph, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 7))
    g = random_graph(rng, n, 2)
    spec = ProtectionSpec.build({v: P_VALUES[int(rng.integers(len(P_VALUES)))] for v in range(1, n)}, int(rng.integers(0, 3)))
    budget = int(rng.integers(1, int(g.total_cost) + 1))
    emb = build_embedding(g, SolverConfig(seed=seed))
    result = feasibility_round(g, spec, budget, emb)
    if result.feasible:
        assert_sound(g, spec, result.distribution)
        for cut in result.distribution.support:
            assert len(cut.protected) >= spec.target
    else:
        assert not oracle_plp_feasible(g, spec, budget).feasible


def test_budget_grid(star):
    grid = budget_grid(star, F(1, 4))
    assert grid == [0, 2, F(5, 2), F(25, 8), F(125, 32), 4]


def test_solve_without_constraints(g1):
    result = indfair_solve(g1, ProtectionSpec(), F(1, 4), build_embedding(g1))
    assert result.budget == 0
    assert result.distribution.support[0].cut_edges == set()


def test_solve_star(star, star_spec):
    emb = TreeEmbedding.identity(star)
    result = indfair_solve(star, star_spec, F(1, 4), emb)
    assert result.budget == 2
    assert result.class_factor == F(9, 8)
    assert result.distribution.marginals({1, 2}) == {1: F(1, 2), 2: F(1, 2)}
    assert_sound(star, star_spec, result.distribution)
    assert result.oracle_calls == sum(r.oracle_calls for r in result.trace)


def test_solve_g1_full_protection(g1):
    spec = ProtectionSpec.build({1: 1, 2: 1, 3: 1}, 3)
    result = indfair_solve(g1, spec, F(1, 4), build_embedding(g1))
    assert result.budget <= F(5, 4) * 3
    assert_sound(g1, spec, result.distribution)
    # feasibility only grows along the probed budgets
    verdicts = [r.feasible for r in sorted(result.trace, key=lambda r: r.budget)]
    assert verdicts == sorted(verdicts)


def test_sample_point_mass(g1):
    cut = CutSolution.from_cut(g1, [0, 1])
    dist = CutDistribution.point_mass(cut)
    rng = np.random.default_rng(0)
    assert all(sample(dist, rng) == cut for _ in range(50))


def test_sample_frequencies(star, star_split):
    rng = np.random.default_rng(99)
    trials = 10_000
    hits = sum(1 in sample(star_split, rng).protected for _ in range(trials))
    assert abs(hits / trials - 0.5) <= 4 * math.sqrt(0.25 / trials)


def test_distribution_validation(star):
    cut = CutSolution.from_cut(star, [0])
    with pytest.raises(InputError):
        CutDistribution((cut,), (F(1, 2),))
    with pytest.raises(InputError):
        CutDistribution((), ())


def test_distribution_document(star, star_split):
    doc = DistributionDocument.model_validate_json(star_split.to_document().model_dump_json())
    assert CutDistribution.from_document(doc, star) == star_split
    assert CutDistribution.from_document(doc) == star_split
    tampered = doc.model_copy(update={"support": [doc.support[0].model_copy(update={"cost": "5"}), doc.support[1]]})
    with pytest.raises(InputError):
        CutDistribution.from_document(tampered, star)


@pytest.mark.parametrize(
    "probabilities, target",
    [({1: "3/2"}, 0), ({1: -1}, 0), ({}, -1)],
)
def test_invalid_protection(probabilities, target):
    with pytest.raises(InputError):
        ProtectionSpec.build(probabilities, target)


@pytest.mark.parametrize("spec", [ProtectionSpec.build({}, 3), ProtectionSpec.build({5: 1}), ProtectionSpec.build({0: 1})])
def test_protection_checked_against_graph(star, spec):
    with pytest.raises(InputError):
        spec.check(star)


def test_dual_point_check(star_spec):
    DualPoint({1: F(2)}, F(0)).check(star_spec)
    with pytest.raises(InputError):
        DualPoint({1: F(-1)}, F(-5)).check(star_spec)
    with pytest.raises(InputError):
        DualPoint({1: F(1)}, F(0)).check(star_spec)
    # sign only without a spec
    DualPoint({1: F(1)}, F(0)).check()


def test_solver_report(star, star_spec):
    report = IndFair(config=SolverConfig(seed=6)).run(star, TreeEmbedding.identity(star), star_spec)
    assert report.command == "indfair"
    assert report.seed == 6
    assert report.budget == "2"
    assert report.class_factor == "9/8"
    assert report.budget_class == "9/4"
    assert report.marginals == {"1": "1/2", "2": "1/2"}
    assert len(report.support) == 2
    assert report.oracle_calls == sum(probe.oracle_calls for probe in report.sweep)
