"""
Optimal flows, homogeneous Nash flows and worst-case equilibrium selection.

Both path-based problems minimize a separable convex potential with a pairwise
Frank-Wolfe method: per commodity, mass moves from the most expensive used
path to the cheapest path with an exact line search on the potential.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from tollsub.core.config import Settings, settings as default_settings
from tollsub.core.errors import ConvergenceError
from tollsub.models.game import GameInstance
from tollsub.models.latency import Polynomial
from tollsub.models.network import Flow, RoutingProblem, total_latency
from tollsub.usecase.certificate import (
    USED_TOL,
    EquilibriumResult,
    beckmann_potential,
    build_result,
    check_monotone,
    class_vi_gaps,
    marginal_costs,
    optimality_gap,
    path_costs,
    relative_gap,
    sensitivity_of,
    vi_gap,
)
from tollsub.usecase.heterogeneous import crossing_equilibrium, nash_flow_heterogeneous

logger = logging.getLogger(__name__)

__all__ = [
    "EquilibriumResult",
    "beckmann_potential",
    "class_vi_gaps",
    "crossing_equilibrium",
    "nash_flow",
    "nash_flow_heterogeneous",
    "nash_flow_homogeneous",
    "optimal_flow",
    "optimality_gap",
    "vi_gap",
    "worst_case_nash",
]


def uniform_start(problem: RoutingProblem) -> np.ndarray:
    f = np.zeros(problem.n_paths)
    for ci, c in enumerate(problem.commodities):
        idx = problem.commodity_paths(ci)
        f[idx] = c.demand / len(idx)
    return f


def _line_search(polys: Sequence[Polynomial], x: np.ndarray, d: np.ndarray, upper: float) -> float:
    """Step in [0, upper] minimizing the potential along x + t d."""
    nz = np.flatnonzero(d)

    def slope(t: float) -> float:
        return float(sum(d[e] * polys[e].value(float(x[e] + t * d[e])) for e in nz))

    if upper <= 0.0 or slope(0.0) >= 0.0:
        return 0.0
    if slope(upper) <= 0.0:
        return upper
    return brentq(slope, 0.0, upper, xtol=1e-16, maxiter=200)


def _pairwise_frank_wolfe(
    problem: RoutingProblem,
    polys: Sequence[Polynomial],
    start: np.ndarray,
    cfg: Settings,
    label: str,
) -> Tuple[np.ndarray, float, int, List[float]]:
    A = problem.incidence
    primitives = [p.antiderivative() for p in polys]
    groups = [problem.commodity_paths(ci) for ci in range(len(problem.commodities))]

    f = np.array(start, dtype=float)
    x = A @ f

    def potential(edge_flows: np.ndarray) -> float:
        return float(sum(F.value(float(v)) for F, v in zip(primitives, edge_flows)))

    trace = [potential(x)]
    gap = relative_gap(problem, f, path_costs(problem, polys, x))
    gap_trace = [gap]
    iterations = 0
    while gap > cfg.EPS_EQ:
        if iterations >= cfg.MAX_ITERS:
            raise ConvergenceError(
                f"{label}: no equilibrium within {cfg.MAX_ITERS} iterations (gap {gap:.3e})",
                best_iterate=Flow(problem, f),
                gap=gap,
                gap_trace=gap_trace,
            )
        iterations += 1
        for idx in groups:
            costs = path_costs(problem, polys, x)[idx]
            best = idx[int(np.argmin(costs))]
            order = np.argsort(-costs)
            for w in idx[order]:
                if w == best or f[w] <= 0.0:
                    continue
                d = A[:, best] - A[:, w]
                step = _line_search(polys, x, d, f[w])
                if step <= 0.0:
                    continue
                f[w] = max(f[w] - step, 0.0)
                f[best] += step
                x = A @ f
        trace.append(potential(x))
        gap = relative_gap(problem, f, path_costs(problem, polys, x))
        gap_trace.append(gap)

    logger.debug("%s: converged in %d iterations, gap %.3e", label, iterations, gap)
    return f, gap, iterations, trace


def optimal_flow(
    problem: RoutingProblem,
    cfg: Optional[Settings] = None,
    start: Optional[Sequence[float]] = None,
) -> EquilibriumResult:
    """Flow minimizing total latency, certified by the VI gap of marginal costs."""
    cfg = cfg or default_settings
    f0 = uniform_start(problem) if start is None else np.asarray(start, dtype=float)
    f, gap, iterations, trace = _pairwise_frank_wolfe(
        problem, marginal_costs(problem), f0, cfg, f"{problem.name}/optimal"
    )
    flow = Flow(problem, f)
    problem.check_feasible(flow)
    return EquilibriumResult(
        flow=flow,
        class_flows=(flow,),
        vi_gap=gap,
        total_latency=total_latency(problem, flow),
        iterations=iterations,
        kind="optimal",
        class_gaps=(gap,),
        potential_trace=tuple(trace),
        fully_utilized=bool(np.all(flow.edge_flows > USED_TOL)),
        eps=cfg.EPS_EQ,
    )


def nash_flow_homogeneous(
    instance: GameInstance,
    cfg: Optional[Settings] = None,
    start: Optional[Sequence[float]] = None,
) -> EquilibriumResult:
    """Nash flow of a population sharing one sensitivity, by potential minimization."""
    cfg = cfg or default_settings
    problem = instance.problem
    s = sensitivity_of(instance)
    polys = instance.edge_costs(s)
    check_monotone(polys, problem, "effective cost", cfg)
    f0 = uniform_start(problem) if start is None else np.asarray(start, dtype=float)
    f, _, iterations, trace = _pairwise_frank_wolfe(
        problem, polys, f0, cfg, f"{problem.name}/nash[{instance.mechanism}]"
    )
    flow = Flow(problem, f)
    return build_result(
        instance, [flow] * len(instance.sensitivity.classes), iterations, cfg, potential_trace=trace
    )


def nash_flow(instance: GameInstance, cfg: Optional[Settings] = None) -> EquilibriumResult:
    """Dispatch to the homogeneous or the multi-class solver."""
    if instance.sensitivity.is_uniform:
        return nash_flow_homogeneous(instance, cfg)
    return nash_flow_heterogeneous(instance, cfg)


def _random_start(problem: RoutingProblem, rng: np.random.Generator) -> np.ndarray:
    f = np.zeros(problem.n_paths)
    for ci, c in enumerate(problem.commodities):
        idx = problem.commodity_paths(ci)
        f[idx] = c.demand * rng.dirichlet(np.ones(len(idx)))
    return f


def worst_case_nash(
    instance: GameInstance,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
    cfg: Optional[Settings] = None,
) -> EquilibriumResult:
    """Highest-latency equilibrium found over restarts; a lower bound on the true worst case.

    Starts are the uniform split, `restarts` random splits and, on parallel
    networks with at most 4 edges and 3 classes, every class-to-edge assignment.
    Two-link parallel networks also contribute both extreme crossing equilibria.
    """
    cfg = cfg or default_settings
    restarts = cfg.RESTARTS if restarts is None else restarts
    seed = cfg.SEED if seed is None else seed
    rng = np.random.default_rng(seed)
    problem = instance.problem
    classes = instance.sensitivity.classes
    n_classes = len(classes)
    small = problem.is_parallel and problem.n_paths <= 4 and n_classes <= 3

    results: List[EquilibriumResult] = []
    if instance.sensitivity.is_uniform:
        results.append(nash_flow_homogeneous(instance, cfg))
        for _ in range(restarts):
            results.append(nash_flow_homogeneous(instance, cfg, start=_random_start(problem, rng)))
        if small:
            for k in range(problem.n_paths):
                results.append(nash_flow_homogeneous(instance, cfg, start=np.eye(problem.n_paths)[k]))
    else:
        results.append(nash_flow_heterogeneous(instance, cfg))
        if problem.n_paths > 2:
            n = problem.n_paths
            for _ in range(restarts):
                start = rng.dirichlet(np.ones(n), size=n_classes)
                results.append(nash_flow_heterogeneous(instance, cfg, start=start))
            if small:
                for assignment in product(range(n), repeat=n_classes):
                    start = np.eye(n)[list(assignment)]
                    results.append(nash_flow_heterogeneous(instance, cfg, start=start))
    if problem.is_parallel and problem.n_paths == 2:
        results.append(crossing_equilibrium(instance, cfg, side="low"))
        results.append(crossing_equilibrium(instance, cfg, side="high"))

    latencies = tuple(r.total_latency for r in results)
    worst = results[int(np.argmax(latencies))]
    logger.debug(
        "%s: %d equilibria, latency range [%.12g, %.12g]",
        problem.name, len(results), min(latencies), max(latencies),
    )
    return replace(worst, restart_latencies=latencies)
