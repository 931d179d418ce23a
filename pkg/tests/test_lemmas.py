"""
Nominal equivalence of transformed mechanisms.

A certified equilibrium of (T, s) must stay certified, with no larger VI gap
up to the cost rescaling, after moving to (λT + (λ - 1)l, g(s, λ)).
"""

import numpy as np
import pytest

from tollsub.core.config import settings
from tollsub.models.game import GameInstance
from tollsub.models.latency import LatencyFunction
from tollsub.models.network import parallel_network, total_latency
from tollsub.models.sensitivity import SensitivityModel
from tollsub.usecase.equilibrium import nash_flow, vi_gap
from tollsub.usecase.incentives import (
    MarginalCost,
    NoIncentive,
    OptBoundedToll,
    ScaledMarginalCost,
    affine_transform,
    transform_sensitivity,
)


def random_links(rng, n):
    return [LatencyFunction.affine(rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0)) for _ in range(n)]


def random_population(rng):
    n = int(rng.integers(2, 4))
    s = np.sort(rng.uniform(0.5, 3.0, size=n))
    masses = rng.dirichlet(np.ones(n))
    masses[-1] = 1.0 - masses[:-1].sum()
    return SensitivityModel.from_pairs(zip(masses, s), (float(s[0]), float(s[-1])))


def homogeneous_case(rng):
    problem = parallel_network(random_links(rng, int(rng.integers(2, 5))))
    mechanism = [NoIncentive(), MarginalCost(), OptBoundedToll(rng.uniform(0.0, 1.0))][int(rng.integers(3))]
    lam = rng.uniform(0.05, 2.0)
    return GameInstance.untolled(problem).with_mechanism(mechanism), mechanism, lam


def heterogeneous_case(rng):
    problem = parallel_network(random_links(rng, int(rng.integers(2, 4))))
    population = random_population(rng)
    if rng.random() < 0.5:
        mechanism = ScaledMarginalCost(*population.bounds)
    else:
        mechanism = OptBoundedToll(rng.uniform(0.0, 1.0))
    lam = rng.uniform(0.05, 0.95)
    return GameInstance.untolled(problem, population).with_mechanism(mechanism), mechanism, lam


def check_homogeneous(instance, mechanism, lam):
    result = nash_flow(instance)
    assert result.certified
    transformed = instance.with_mechanism(affine_transform(mechanism, lam))
    # costs scale by λ, so the relative gap grows by at most max(λ, 1)
    assert vi_gap(transformed, result.flow) <= max(lam, 1.0) * result.vi_gap + 1e-12
    # the re-certified flow is the transformed equilibrium, so the Nash latencies agree
    assert total_latency(transformed.problem, result.flow) == pytest.approx(result.total_latency, abs=10 * settings.EPS_EQ)


def check_heterogeneous(instance, mechanism, lam):
    result = nash_flow(instance)
    assert result.certified
    transformed = instance.with_mechanism(affine_transform(mechanism, lam)).with_sensitivity(
        transform_sensitivity(instance.sensitivity, lam)
    )
    # every class cost is rescaled by λ / (λ + s - sλ) <= 1
    assert vi_gap(transformed, result.flow, result.class_flows) <= result.vi_gap + 1e-12
    assert total_latency(transformed.problem, result.flow) == pytest.approx(result.total_latency, abs=10 * settings.EPS_EQ)


@pytest.mark.parametrize("seed", range(5))
def test_homogeneous_transform_keeps_the_equilibrium(seed):
    check_homogeneous(*homogeneous_case(np.random.default_rng(seed)))


@pytest.mark.parametrize("seed", range(5))
def test_heterogeneous_transform_keeps_the_equilibrium(seed):
    check_heterogeneous(*heterogeneous_case(np.random.default_rng(1000 + seed)))


def test_transformed_population_scales_class_costs():
    population = SensitivityModel.two_class(1.0, 3.0, mass_lower=0.5)
    mapped = transform_sensitivity(population, 0.5)
    lat = LatencyFunction.affine(1.0, 1.0)
    mechanism = OptBoundedToll(0.5)
    tau, tau_hat = mechanism.apply(lat), affine_transform(mechanism, 0.5).apply(lat)
    for cls, new in zip(population.classes, mapped.classes):
        factor = 0.5 / (0.5 + cls.s - 0.5 * cls.s)
        for f in (0.0, 0.4, 1.0):
            before = lat.value(f) + cls.s * tau.value(f)
            after = lat.value(f) + new.s * tau_hat.value(f)
            assert after == pytest.approx(factor * before)


@pytest.mark.slow
def test_homogeneous_transform_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        check_homogeneous(*homogeneous_case(rng))


@pytest.mark.slow
def test_heterogeneous_transform_on_random_instances():
    rng = np.random.default_rng(4096)
    for _ in range(100):
        check_heterogeneous(*heterogeneous_case(rng))
