import numpy as np
import pytest

from tollsub.core.errors import TopologyError
from tollsub.models.game import GameInstance
from tollsub.models.latency import LatencyFunction
from tollsub.models.network import Commodity, Edge, RoutingProblem, parallel_network
from tollsub.models.sensitivity import SensitivityModel
from tollsub.usecase.equilibrium import crossing_equilibrium, nash_flow, nash_flow_heterogeneous, vi_gap
from tollsub.usecase.heterogeneous import water_fill
from tollsub.usecase.incentives import NoIncentive, OptBoundedSubsidy, OptBoundedToll, ScaledMarginalCost
from tollsub.usecase.poa import pigou_instance


def two_class_pigou(mechanism, s_lower=1.0, s_upper=4.0, mass_lower=0.5):
    return pigou_instance(1, mechanism, SensitivityModel.two_class(s_lower, s_upper, mass_lower))


def test_two_classes_split_by_sensitivity():
    # subsidy 0.25 on the constant link: class s=1 sees 0.75, class s=3 sees 0.25
    instance = two_class_pigou(OptBoundedSubsidy(0.25), 1.0, 3.0, 0.5)
    result = nash_flow(instance)
    assert result.certified
    assert len(result.class_gaps) == 2
    assert max(result.class_gaps) <= result.eps
    # at F = 0.5 class s=1 prefers link 1 (0.5 < 0.75) and class s=3 link 2 (0.25 < 0.5)
    low, high = (cf.as_dict() for cf in result.class_flows)
    assert low["0:e1"] == pytest.approx(1.0, abs=1e-9)
    assert high["0:e2"] == pytest.approx(1.0, abs=1e-9)
    assert result.flow.as_dict()["0:e1"] == pytest.approx(0.5, abs=1e-9)


def test_crossing_extremes_bracket_every_equilibrium():
    # two constant links of equal cost: any split is an equilibrium
    problem = parallel_network([LatencyFunction.constant(1.0), LatencyFunction.constant(1.0)])
    instance = GameInstance.untolled(problem)
    low = crossing_equilibrium(instance, side="low")
    high = crossing_equilibrium(instance, side="high")
    assert low.flow.as_dict()["0:e1"] == pytest.approx(0.0)
    assert high.flow.as_dict()["0:e1"] == pytest.approx(1.0)
    assert low.certified and high.certified


def test_best_response_certifies_three_links():
    latencies = [LatencyFunction.affine(1.0, 0.0), LatencyFunction.affine(2.0, 0.3), LatencyFunction.affine(0.5, 0.6)]
    population = SensitivityModel.two_class(1.0, 2.0, mass_lower=0.4)
    instance = GameInstance.untolled(parallel_network(latencies), population).with_mechanism(ScaledMarginalCost(1.0, 2.0))
    result = nash_flow_heterogeneous(instance)
    assert result.certified
    assert result.flow.mass == pytest.approx(1.0)
    assert vi_gap(instance, result.flow, result.class_flows) <= result.eps


def test_user_start_is_respected_in_shape():
    latencies = [LatencyFunction.affine(1.0, 0.0), LatencyFunction.affine(1.0, 0.1), LatencyFunction.affine(1.0, 0.2)]
    population = SensitivityModel.two_class(1.0, 2.0, mass_lower=0.5)
    instance = GameInstance.untolled(parallel_network(latencies), population).with_mechanism(OptBoundedToll(0.5))
    start = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    result = nash_flow_heterogeneous(instance, start=start)
    assert result.certified
    with pytest.raises(ValueError):
        nash_flow_heterogeneous(instance, start=np.ones((3, 3)) / 3)


def test_classes_merge_without_incentives():
    population = SensitivityModel.two_class(1.0, 5.0, mass_lower=0.3)
    instance = pigou_instance(1, NoIncentive(), population)
    result = nash_flow(instance)
    assert result.total_latency == pytest.approx(1.0)
    assert len(result.class_flows) == 2


def test_non_parallel_network_is_rejected():
    edges = [
        Edge("sa", "s", "a", LatencyFunction.affine(1.0, 0.0)),
        Edge("sb", "s", "b", LatencyFunction.constant(1.0)),
        Edge("ab", "a", "b", LatencyFunction.constant(0.0)),
        Edge("at", "a", "t", LatencyFunction.constant(1.0)),
        Edge("bt", "b", "t", LatencyFunction.affine(1.0, 0.0)),
    ]
    problem = RoutingProblem.build("sabt", edges, [Commodity("s", "t", 1.0)], name="braess")
    instance = GameInstance.untolled(problem).with_mechanism(OptBoundedToll(0.5)).with_sensitivity(SensitivityModel.two_class(1.0, 2.0, mass_lower=0.5))
    with pytest.raises(TopologyError):
        nash_flow(instance)


def test_water_fill_equalizes_used_links():
    polys = [LatencyFunction.affine(1.0, 0.0), LatencyFunction.affine(1.0, 0.2), LatencyFunction.constant(0.5)]
    others = np.zeros(3)
    z = water_fill(polys, others, 1.0, np.full(3, 1.0 / 3.0), np.zeros(3, dtype=bool), 1e-10)
    assert z.sum() == pytest.approx(1.0)
    # increasing links fill up to the constant level 0.5, the rest goes to link 3
    assert z[0] == pytest.approx(0.5)
    assert z[1] == pytest.approx(0.3)
    assert z[2] == pytest.approx(0.2)
