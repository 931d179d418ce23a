"""
Multi-class equilibria on single-commodity parallel networks.

Class c observes l_e + s_c tau_e on every link. Two-link networks are solved
exactly by bisection on the flow of the first link; larger networks by damped
Gauss-Seidel best responses, each one an exact water-filling of a single class.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, root

from tollsub.core.config import Settings, settings as default_settings
from tollsub.core.errors import ConvergenceError, ParameterError, TopologyError
from tollsub.models.game import GameInstance
from tollsub.models.latency import Polynomial
from tollsub.models.network import Flow, RoutingProblem
from tollsub.models.sensitivity import SensitivityClass, SensitivityModel
from tollsub.usecase.certificate import EquilibriumResult, build_result, check_monotone

logger = logging.getLogger(__name__)

SUPPORT_TOL = 1e-10
POLISH_EVERY = 10
POLISH_BELOW = 1e-4


def _require_parallel(problem: RoutingProblem) -> None:
    if not problem.is_parallel:
        raise TopologyError(
            f"{problem.name}: multi-class equilibria need a single-commodity network of parallel links"
        )


def _path_polys(instance: GameInstance, s: float) -> List[Polynomial]:
    """Class cost per path (one link per path) for sensitivity s."""
    costs = instance.edge_costs(s)
    return [costs[p.edges[0]] for p in instance.problem.paths]


def _class_polys(instance: GameInstance, cfg: Settings) -> List[List[Polynomial]]:
    out = []
    for cls in instance.sensitivity.classes:
        polys = _path_polys(instance, cls.s)
        check_monotone(polys, instance.problem, f"class s={cls.s:g}", cfg)
        out.append(polys)
    return out


def _class_flows(problem: RoutingProblem, shares: np.ndarray) -> List[Flow]:
    return [Flow(problem, row) for row in shares]


# ── two links ───────────────────────────────────────────────
def crossing_equilibrium(
    instance: GameInstance,
    cfg: Optional[Settings] = None,
    side: str = "low",
) -> EquilibriumResult:
    """Exact equilibrium of a two-link parallel network by bisection on the first link's flow.

    side="low" returns the equilibrium with the least flow on the first link,
    side="high" the one with the most; every equilibrium lies between them.
    """
    cfg = cfg or default_settings
    problem = instance.problem
    _require_parallel(problem)
    if problem.n_paths != 2:
        raise TopologyError(f"{problem.name}: crossing oracle needs exactly two links, got {problem.n_paths}")
    if side not in ("low", "high"):
        raise ParameterError(f"side must be 'low' or 'high', got {side!r}")

    polys = _class_polys(instance, cfg)
    masses = instance.sensitivity.masses

    def diffs(F: float) -> np.ndarray:
        # cost of link 1 minus cost of link 2, per class
        return np.array([p[0].value(F) - p[1].value(1.0 - F) for p in polys])

    if side == "low":
        # least F with F >= mass strictly preferring link 1
        def feasible(F: float) -> bool:
            return F >= masses[diffs(F) < 0].sum()
        lo, hi = 0.0, 1.0
        if feasible(0.0):
            hi = 0.0
    else:
        # greatest F with F <= mass weakly preferring link 1
        def feasible(F: float) -> bool:
            return F <= masses[diffs(F) <= 0].sum()
        lo, hi = 0.0, 1.0
        if feasible(1.0):
            lo = 1.0

    for _ in range(200):
        if hi - lo <= 0.0:
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        ok = feasible(mid)
        if side == "low":
            hi, lo = (mid, lo) if ok else (hi, mid)
        else:
            lo, hi = (mid, hi) if ok else (lo, mid)
    F = hi if side == "low" else lo

    d = diffs(F)
    scale = max(1.0, float(np.max(np.abs([p[0].value(F) for p in polys]))))
    tol = 1e-9 * scale
    first = d < -tol
    tied = np.abs(d) <= tol
    need = F - masses[first].sum()
    tied_mass = masses[tied].sum()
    share = float(np.clip(need / tied_mass, 0.0, 1.0)) if tied_mass > 0 else 0.0
    if tied_mass <= 0 and abs(need) > 1e-12:
        logger.debug("%s: crossing allocation off by %.3e", problem.name, need)

    on_first = np.where(first, 1.0, np.where(tied, share, 0.0))
    shares = np.column_stack([on_first, 1.0 - on_first])
    return build_result(instance, _class_flows(problem, shares), iterations=1, cfg=cfg)


# ── water-filling best response ─────────────────────────────
def water_fill(
    polys: Sequence[Polynomial],
    others: np.ndarray,
    mass: float,
    current: np.ndarray,
    free_links: np.ndarray,
    tie_tol: float,
) -> np.ndarray:
    """Allocate `mass` over parallel links so the used links share the least cost.

    `others` is the flow already on each link. Links with constant cost absorb
    whatever the increasing links leave over; ties split in proportion to the
    current allocation, links with zero latency and zero incentive first.
    """
    n = len(polys)
    z = np.zeros(n)
    if mass <= 0.0:
        return z
    flat = np.array([p.is_constant() for p in polys])
    strict = np.flatnonzero(~flat)

    def amount(k: int, mu: float) -> float:
        c = polys[k]
        if c.value(float(others[k])) >= mu:
            return 0.0
        if c.value(float(others[k] + mass)) <= mu:
            return mass
        return brentq(lambda t: c.value(float(others[k] + t)) - mu, 0.0, mass, xtol=1e-16, maxiter=200)

    def filled(mu: float) -> float:
        return sum(amount(k, mu) for k in strict)

    flat_level = min((polys[k].value(0.0) for k in np.flatnonzero(flat)), default=np.inf)
    if np.isfinite(flat_level) and filled(flat_level) < mass:
        for k in strict:
            z[k] = amount(k, flat_level)
        rest = mass - z.sum()
        ties = np.flatnonzero(flat & (np.array([p.value(0.0) for p in polys]) <= flat_level + tie_tol))
        preferred = ties[free_links[ties]]
        if preferred.size:
            ties = preferred
        weights = current[ties].clip(min=0.0)
        if weights.sum() <= 0.0:
            weights = np.ones(ties.size)
        z[ties] += rest * weights / weights.sum()
        return z

    lo = min(polys[k].value(float(others[k])) for k in strict)
    hi = max(polys[k].value(float(others[k] + mass)) for k in strict)
    if np.isfinite(flat_level):
        hi = min(hi, flat_level)
    if hi <= lo:
        mu = lo
    else:
        mu = brentq(lambda m: filled(m) - mass, lo, hi, xtol=1e-16, maxiter=200)
    for k in strict:
        z[k] = amount(k, mu)
    total = z.sum()
    if total > 0:
        z *= mass / total
    return z


def _class_gap(costs: np.ndarray, shares: np.ndarray) -> float:
    excess = float(shares @ (costs - costs.min()))
    return max(excess, 0.0) / max(float(shares @ np.abs(costs)), 1.0)


def _gaps(polys: List[List[Polynomial]], z: np.ndarray, masses: np.ndarray) -> np.ndarray:
    F = z.sum(axis=0)
    out = np.zeros(len(polys))
    for c, pc in enumerate(polys):
        if masses[c] <= 0:
            continue
        costs = np.array([p.value(float(v)) for p, v in zip(pc, F)])
        out[c] = _class_gap(costs, z[c] / masses[c])
    return out


def _polish(polys: List[List[Polynomial]], z: np.ndarray, masses: np.ndarray) -> Optional[np.ndarray]:
    """Newton solve of the equal-cost conditions on the current support."""
    support = z > SUPPORT_TOL
    index = np.argwhere(support)
    if index.size == 0:
        return None

    def residual(v: np.ndarray) -> np.ndarray:
        trial = np.zeros_like(z)
        trial[support] = v
        F = trial.sum(axis=0)
        out = []
        for c in range(z.shape[0]):
            links = np.flatnonzero(support[c])
            if links.size == 0:
                continue
            out.append(trial[c, links].sum() - masses[c])
            base = polys[c][links[0]].value(float(F[links[0]]))
            for k in links[1:]:
                out.append(polys[c][k].value(float(F[k])) - base)
        return np.array(out)

    sol = root(residual, z[support], method="hybr", options={"xtol": 1e-15})
    if not sol.success or np.any(sol.x < -1e-12):
        return None
    polished = np.zeros_like(z)
    polished[support] = np.clip(sol.x, 0.0, None)
    return polished


def _damped_best_response(
    polys: List[List[Polynomial]],
    masses: np.ndarray,
    free_links: np.ndarray,
    start: np.ndarray,
    cfg: Settings,
    label: str,
    problem: RoutingProblem,
) -> Tuple[np.ndarray, int]:
    z = start * masses[:, None]
    n_classes = len(polys)
    alpha = 1.0 if n_classes == 1 else cfg.DAMPING
    gap_trace: List[float] = []
    best_gap, best_z = np.inf, z.copy()
    for it in range(1, cfg.HETERO_MAX_ITERS + 1):
        F = z.sum(axis=0)
        for c in range(n_classes):
            others = F - z[c]
            response = water_fill(polys[c], others, masses[c], z[c], free_links, cfg.TIE_TOL)
            z[c] = (1.0 - alpha) * z[c] + alpha * response
            F = others + z[c]
        gap = float(_gaps(polys, z, masses).max())
        gap_trace.append(gap)
        if gap < best_gap:
            best_gap, best_z = gap, z.copy()
        if gap <= cfg.EPS_EQ:
            logger.debug("%s: best responses converged in %d iterations, gap %.3e", label, it, gap)
            return z, it
        if len(gap_trace) > 1 and gap > gap_trace[-2]:
            alpha = max(alpha / 2.0, cfg.MIN_DAMPING)
        if gap < POLISH_BELOW and it % POLISH_EVERY == 0:
            polished = _polish(polys, z, masses)
            if polished is not None:
                polished_gap = float(_gaps(polys, polished, masses).max())
                if polished_gap <= cfg.EPS_EQ:
                    logger.debug("%s: polished support after %d iterations, gap %.3e", label, it, polished_gap)
                    return polished, it
    shares = best_z / np.where(masses > 0, masses, 1.0)[:, None]
    raise ConvergenceError(
        f"{label}: no multi-class equilibrium within {cfg.HETERO_MAX_ITERS} iterations (gap {best_gap:.3e})",
        best_iterate=[Flow(problem, row) for row in shares],
        gap=best_gap,
        gap_trace=gap_trace,
    )


# ── entry point ─────────────────────────────────────────────
def merge_equivalent_classes(instance: GameInstance, tol: float) -> Tuple[GameInstance, List[List[int]]]:
    """Collapse classes that observe identical costs: equal sensitivities, or every class when no incentive is set."""
    model = instance.sensitivity
    if all(t.is_zero() for t in instance.incentives):
        groups = [list(range(len(model.classes)))]
        merged = SensitivityModel((SensitivityClass(1.0, model.classes[0].s),), model.bounds)
        return instance.with_sensitivity(merged), groups
    merged, groups = model.merged(tol)
    return instance.with_sensitivity(merged), groups


def nash_flow_heterogeneous(
    instance: GameInstance,
    cfg: Optional[Settings] = None,
    start: Optional[np.ndarray] = None,
) -> EquilibriumResult:
    """Multi-class Nash flow on a parallel network, certified per class.

    `start` optionally gives one row of link shares per sensitivity class.
    """
    cfg = cfg or default_settings
    problem = instance.problem
    _require_parallel(problem)
    _class_polys(instance, cfg)

    merged, groups = merge_equivalent_classes(instance, cfg.TIE_TOL)
    n = problem.n_paths
    masses = merged.sensitivity.masses
    if start is None:
        if n == 2:
            result = crossing_equilibrium(merged, cfg)
            shares = np.array([cf.path_flows for cf in result.class_flows])
            return _expand(instance, groups, shares, result.iterations, cfg)
        merged_start = np.full((len(groups), n), 1.0 / n)
    else:
        start = np.asarray(start, dtype=float)
        if start.shape != (len(instance.sensitivity.classes), n):
            raise ParameterError(f"start must have shape ({len(instance.sensitivity.classes)}, {n})")
        orig = instance.sensitivity.masses
        merged_start = np.array(
            [(orig[g, None] * start[g]).sum(axis=0) / max(orig[g].sum(), 1e-300) for g in groups]
        )
        merged_start /= merged_start.sum(axis=1, keepdims=True)

    free_links = np.array(
        [problem.edges[p.edges[0]].latency.is_zero() and instance.incentives[p.edges[0]].is_zero() for p in problem.paths]
    )
    polys = _class_polys(merged, cfg)
    label = f"{problem.name}/nash[{instance.mechanism}]"
    z, iterations = _damped_best_response(polys, masses, free_links, merged_start, cfg, label, problem)
    shares = z / np.where(masses > 0, masses, 1.0)[:, None]
    return _expand(instance, groups, shares, iterations, cfg)


def _expand(
    instance: GameInstance,
    groups: List[List[int]],
    shares: np.ndarray,
    iterations: int,
    cfg: Settings,
) -> EquilibriumResult:
    out = np.zeros((len(instance.sensitivity.classes), instance.problem.n_paths))
    for g, row in zip(groups, shares):
        row = np.clip(row, 0.0, None)
        total = row.sum()
        out[g] = row / total if total > 0 else np.full(row.size, 1.0 / row.size)
    return build_result(instance, _class_flows(instance.problem, out), iterations, cfg)
