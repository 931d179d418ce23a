"""Equilibrium results and the certificates every solver reports."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from tollsub.core.config import Settings, settings as default_settings
from tollsub.core.errors import NonMonotoneCostError, ParameterError
from tollsub.models.game import GameInstance
from tollsub.models.latency import Polynomial
from tollsub.models.network import Flow, RoutingProblem, total_latency

logger = logging.getLogger(__name__)

# positive-flow threshold for "used" paths and fully-utilized checks
USED_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    flow: Flow
    class_flows: Tuple[Flow, ...]
    vi_gap: float
    total_latency: float
    iterations: int
    kind: str = "nash"
    class_gaps: Tuple[float, ...] = ()
    potential_trace: Tuple[float, ...] = ()
    fully_utilized: bool = True
    negative_cost: bool = False
    restart_latencies: Tuple[float, ...] = ()
    eps: float = 1e-8

    @property
    def certified(self) -> bool:
        return self.vi_gap <= self.eps

    @property
    def edge_flows(self) -> np.ndarray:
        return self.flow.edge_flows


def edge_values(polys: Sequence[Polynomial], x: np.ndarray) -> np.ndarray:
    return np.array([p.value(float(v)) for p, v in zip(polys, x)])


def path_costs(problem: RoutingProblem, polys: Sequence[Polynomial], x: np.ndarray) -> np.ndarray:
    """Path costs at edge flows x for the per-edge cost polynomials."""
    return problem.incidence.T @ edge_values(polys, x)


def relative_gap(problem: RoutingProblem, path_flows: np.ndarray, costs: np.ndarray) -> float:
    """Mass-weighted excess of used-path cost over the cheapest path of each commodity,
    relative to the total weighted cost (floored at 1)."""
    excess = 0.0
    for ci in range(len(problem.commodities)):
        idx = problem.commodity_paths(ci)
        c = costs[idx]
        excess += float(path_flows[idx] @ (c - c.min()))
    scale = max(float(path_flows @ np.abs(costs)), 1.0)
    return max(excess, 0.0) / scale


def sensitivity_of(instance: GameInstance) -> float:
    if not instance.sensitivity.is_uniform:
        raise ParameterError("instance has several distinct sensitivities")
    return instance.sensitivity.classes[0].s


def class_vi_gaps(
    instance: GameInstance,
    flow: Flow,
    class_flows: Optional[Sequence[Flow]] = None,
) -> Tuple[float, ...]:
    """Per-class VI gap of class flows (each normalized to the full demand) at the aggregate flow."""
    classes = instance.sensitivity.classes
    if class_flows is None:
        class_flows = [flow] * len(classes)
    if len(class_flows) != len(classes):
        raise ParameterError(f"expected {len(classes)} class flows, got {len(class_flows)}")
    x = flow.edge_flows
    gaps = []
    for cls, cf in zip(classes, class_flows):
        costs = path_costs(instance.problem, instance.edge_costs(cls.s), x)
        gaps.append(relative_gap(instance.problem, cf.path_flows, costs))
    return tuple(gaps)


def vi_gap(instance: GameInstance, flow: Flow, class_flows: Optional[Sequence[Flow]] = None) -> float:
    """Largest per-class VI gap; 0 for an exact equilibrium."""
    gaps = class_vi_gaps(instance, flow, class_flows)
    return max(gaps) if gaps else 0.0


def optimality_gap(problem: RoutingProblem, flow: Flow) -> float:
    """VI gap of the marginal costs, i.e. the first-order optimality certificate."""
    polys = marginal_costs(problem)
    return relative_gap(problem, flow.path_flows, path_costs(problem, polys, flow.edge_flows))


def marginal_costs(problem: RoutingProblem) -> Tuple[Polynomial, ...]:
    """d/dx [x l(x)] per edge."""
    return tuple(e.latency.times_x().derivative() for e in problem.edges)


def beckmann_potential(instance: GameInstance, flow: Flow, s: Optional[float] = None) -> float:
    """Sum over edges of the integral from 0 to f_e of l_e + s tau_e."""
    s = sensitivity_of(instance) if s is None else s
    x = flow.edge_flows
    return float(sum(c.antiderivative().value(float(v)) for c, v in zip(instance.edge_costs(s), x)))


def check_monotone(polys: Sequence[Polynomial], problem: RoutingProblem, label: str, cfg: Settings) -> None:
    for e, c in zip(problem.edges, polys):
        if not c.is_non_decreasing(cfg.GRID_POINTS):
            raise NonMonotoneCostError(f"non-monotone cost on edge '{e.id}' ({label}): {c!r}")


def aggregate(problem: RoutingProblem, masses: Sequence[float], class_flows: Sequence[Flow]) -> Flow:
    path_flows = np.zeros(problem.n_paths)
    for m, cf in zip(masses, class_flows):
        path_flows += m * cf.path_flows
    return Flow(problem, path_flows)


def build_result(
    instance: GameInstance,
    class_flows: Sequence[Flow],
    iterations: int,
    cfg: Optional[Settings] = None,
    kind: str = "nash",
    potential_trace: Sequence[float] = (),
) -> EquilibriumResult:
    cfg = cfg or default_settings
    problem = instance.problem
    flow = aggregate(problem, instance.sensitivity.masses, class_flows)
    problem.check_feasible(flow)
    gaps = class_vi_gaps(instance, flow, class_flows)
    x = flow.edge_flows
    negative = False
    for cls, cf in zip(instance.sensitivity.classes, class_flows):
        costs = path_costs(problem, instance.edge_costs(cls.s), x)
        if np.any((cf.path_flows > USED_TOL) & (costs < 0)):
            negative = True
    if negative:
        logger.warning("%s: negative equilibrium path cost under %s", problem.name, instance.mechanism)
    return EquilibriumResult(
        flow=flow,
        class_flows=tuple(class_flows),
        vi_gap=max(gaps) if gaps else 0.0,
        total_latency=total_latency(problem, flow, check=False),
        iterations=iterations,
        kind=kind,
        class_gaps=gaps,
        potential_trace=tuple(potential_trace),
        fully_utilized=bool(np.all(x > USED_TOL)),
        negative_cost=negative,
        eps=cfg.EPS_EQ,
    )
