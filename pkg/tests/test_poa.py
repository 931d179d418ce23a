import numpy as np
import pytest

from tollsub.core.errors import DegenerateInstanceError, DomainError, ParameterError
from tollsub.models.game import GameInstance
from tollsub.models.latency import LatencyFunction
from tollsub.models.network import parallel_network
from tollsub.usecase.incentives import MarginalCost, OptBoundedToll, TightSubsidy, TightToll, subsidy_to_toll_bound
from tollsub.usecase.poa import (
    affine_subsidy_poa_formula,
    affine_toll_poa_formula,
    nes_effective_heterogeneity,
    nes_poa_formula,
    pigou_generator,
    pigou_instance,
    poa_family,
    poa_instance,
    smc_poa_formula,
    smc_single_class_poa,
)


def pigou_poa(p):
    return 1.0 / (1.0 - p * (p + 1.0) ** (-(p + 1.0) / p))


def test_unincentivized_pigou_is_four_thirds(pigou):
    report = poa_instance(pigou, restarts=0)
    assert report.poa == pytest.approx(4.0 / 3.0, abs=1e-6)
    assert report.lower_bound
    assert report.certified
    assert report.mechanism == "none"


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_marginal_cost_pigou_is_one(p):
    assert poa_instance(pigou_instance(p, MarginalCost()), restarts=0).poa == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("p", [2, 3])
def test_polynomial_pigou_matches_closed_form(p):
    assert poa_instance(pigou_instance(p), restarts=0).poa == pytest.approx(pigou_poa(p), abs=1e-6)


def test_tight_subsidy_at_its_cap_is_optimal():
    for p in (1, 2, 3):
        instance = pigou_instance(p, TightSubsidy(p / (p + 1.0), p))
        assert poa_instance(instance, restarts=0).poa == pytest.approx(1.0, abs=1e-6)


def test_tight_subsidy_never_worse_than_tight_toll():
    for beta in (0.25, 0.5, 1.0):
        for p in (1, 2):
            toll = poa_instance(pigou_instance(p, TightToll(beta, p)), restarts=0).poa
            subsidy = poa_instance(pigou_instance(p, TightSubsidy(beta, p)), restarts=0).poa
            assert subsidy <= toll + 1e-7


def test_family_reports_argmax_and_exclusions():
    family = [pigou_instance(p) for p in (1, 2, 3)]
    free = GameInstance.untolled(parallel_network([LatencyFunction.constant(0.0), LatencyFunction.constant(1.0)], name="free"))
    report = poa_family(family + [free], restarts=0)
    assert report.instance_id == "pigou_p3"
    assert report.family_size == 4
    assert report.excluded == 1
    assert "argmax pigou_p3" in report.note


def test_family_with_mechanism_applies_it_everywhere():
    family = [pigou_instance(p) for p in (1, 2)]
    report = poa_family(family, MarginalCost(), restarts=0)
    assert report.poa == pytest.approx(1.0, abs=1e-6)
    assert report.mechanism == "mc"


def test_degenerate_instance():
    free = GameInstance.untolled(parallel_network([LatencyFunction.constant(0.0), LatencyFunction.constant(1.0)]))
    with pytest.raises(DegenerateInstanceError):
        poa_instance(free, restarts=0)
    with pytest.raises(ParameterError):
        poa_family([])


@pytest.mark.parametrize(
    "beta, expected",
    [(0.0, 4.0 / 3.0), (0.5, 4.0 / 3.75), (1.0, 1.0), (2.0, 1.0)],
)
def test_affine_toll_formula(beta, expected):
    assert affine_toll_poa_formula(beta) == pytest.approx(expected)


def test_affine_subsidy_formula_branches():
    assert affine_subsidy_poa_formula(0.0) == pytest.approx(4.0 / 3.0)
    assert affine_subsidy_poa_formula(0.5) == 1.0
    assert affine_subsidy_poa_formula(0.75) == 1.0
    with pytest.raises(DomainError):
        affine_subsidy_poa_formula(1.0)


def test_subsidy_formula_is_the_toll_formula_at_the_matching_bound():
    for beta in np.linspace(0.0, 0.5, 1000, endpoint=False):
        assert affine_subsidy_poa_formula(beta) == affine_toll_poa_formula(subsidy_to_toll_bound(beta))


def test_subsidy_formula_never_exceeds_toll_formula():
    for beta in np.linspace(0.0, 0.99, 100):
        assert affine_subsidy_poa_formula(beta) <= affine_toll_poa_formula(beta) + 1e-15


def test_smc_formula():
    assert smc_poa_formula(1.0) == pytest.approx(1.0)
    assert smc_poa_formula(1e-12) == pytest.approx(4.0 / 3.0, abs=1e-5)
    with pytest.raises(DomainError):
        smc_poa_formula(0.0)


def test_single_class_smc_curve():
    assert smc_single_class_poa(1.0) == pytest.approx(1.0)
    assert smc_single_class_poa(0.25) == pytest.approx(1.125)
    for q in (0.1, 0.25, 0.5, 0.75):
        assert smc_single_class_poa(q) > smc_poa_formula(q)
    with pytest.raises(DomainError):
        smc_single_class_poa(1.5)


@pytest.mark.parametrize("q", [0.1, 0.25, 0.5, 0.75])
def test_heterogeneity_hurts_the_subsidy_more(q):
    assert nes_poa_formula(q) > smc_poa_formula(q)
    assert nes_effective_heterogeneity(q, 1.0, 1.0 / q) < q


def test_nes_formula_at_homogeneity_and_consistency():
    assert nes_poa_formula(1.0) == pytest.approx(1.0)
    assert nes_poa_formula(0.25, 1.0, 4.0) == pytest.approx(nes_poa_formula(0.25))
    with pytest.raises(ParameterError):
        nes_poa_formula(0.25, 1.0, 2.0)
    with pytest.raises(ParameterError):
        nes_poa_formula(0.25, 1.0)


def test_pigou_generator_validates_degree():
    assert pigou_generator(3).name == "pigou_p3"
    with pytest.raises(ParameterError):
        pigou_generator(0)
    with pytest.raises(ParameterError):
        pigou_generator(1.5)


def test_toll_report_fields():
    report = poa_instance(pigou_instance(1, OptBoundedToll(0.5)), restarts=0)
    # Nash puts 2/3 on the congestible link: latency 4/9 + 1/3
    assert report.nash_latency == pytest.approx(7.0 / 9.0, abs=1e-8)
    assert report.opt_latency == pytest.approx(0.75, abs=1e-8)
    assert report.mechanism == "toll:β=0.5"
    assert report.row()["poa"] == report.poa
