"""Price of anarchy of instances and families, plus the closed-form curves."""

from __future__ import annotations

import logging
import math
from typing import List, Optional, Sequence

from joblib import Parallel, delayed

from tollsub.core.config import Settings, settings as default_settings
from tollsub.core.errors import DegenerateInstanceError, DomainError, InvariantViolation, ParameterError
from tollsub.models.game import GameInstance
from tollsub.models.latency import LatencyFunction
from tollsub.models.network import RoutingProblem, parallel_network
from tollsub.models.sensitivity import SensitivityModel
from tollsub.schemas.report import PoAReport
from tollsub.usecase.certificate import EquilibriumResult
from tollsub.usecase.equilibrium import optimal_flow, worst_case_nash
from tollsub.usecase.incentives import IncentiveMechanism, subsidy_to_toll_bound

logger = logging.getLogger(__name__)

DEGENERATE_OPT = 1e-12


def poa_instance(
    instance: GameInstance,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
    cfg: Optional[Settings] = None,
) -> PoAReport:
    """Worst equilibrium latency found over the optimal latency."""
    cfg = cfg or default_settings
    restarts = cfg.RESTARTS if restarts is None else restarts
    seed = cfg.SEED if seed is None else seed
    opt = optimal_flow(instance.problem, cfg)
    if opt.total_latency <= DEGENERATE_OPT:
        raise DegenerateInstanceError(f"{instance.name}: optimal latency is zero, PoA undefined")
    nash = worst_case_nash(instance, restarts, seed, cfg)
    return report_from_results(instance, nash, opt, restarts, seed, cfg)


def report_from_results(
    instance: GameInstance,
    nash: EquilibriumResult,
    opt: EquilibriumResult,
    restarts: int,
    seed: int,
    cfg: Optional[Settings] = None,
) -> PoAReport:
    cfg = cfg or default_settings
    if opt.total_latency <= DEGENERATE_OPT:
        raise DegenerateInstanceError(f"{instance.name}: optimal latency is zero, PoA undefined")
    poa = nash.total_latency / opt.total_latency
    if poa < 1.0 - 10 * cfg.EPS_EQ:
        raise InvariantViolation(
            f"{instance.name}: Nash latency {nash.total_latency!r} below optimum {opt.total_latency!r}"
        )
    s_lower, s_upper = instance.sensitivity.bounds
    return PoAReport(
        instance_id=instance.name,
        nash_latency=nash.total_latency,
        opt_latency=opt.total_latency,
        poa=poa,
        mechanism=instance.mechanism,
        s_lower=s_lower,
        s_upper=s_upper,
        nash_gap=nash.vi_gap,
        opt_gap=opt.vi_gap,
        restarts=restarts,
        seed=seed,
        fully_utilized=nash.fully_utilized,
        certified=nash.certified and opt.certified,
        negative_cost=nash.negative_cost,
    )


def _family_member(instance, mechanism, restarts, seed, cfg):
    if mechanism is not None:
        instance = instance.with_mechanism(mechanism)
    try:
        return poa_instance(instance, restarts, seed, cfg)
    except DegenerateInstanceError as exc:
        logger.warning("excluded from family: %s", exc)
        return None


def poa_family(
    instances: Sequence[GameInstance],
    mechanism: Optional[IncentiveMechanism] = None,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
    cfg: Optional[Settings] = None,
    workers: int = 1,
) -> PoAReport:
    """Supremum of the instance PoA over a family; the report names the argmax member.

    `mechanism` is applied to every member; None keeps each member's own incentives.
    """
    cfg = cfg or default_settings
    if not instances:
        raise ParameterError("instance family is empty")
    reports: List[Optional[PoAReport]] = Parallel(n_jobs=workers)(
        delayed(_family_member)(inst, mechanism, restarts, seed, cfg) for inst in instances
    )
    kept = [r for r in reports if r is not None]
    excluded = len(reports) - len(kept)
    if not kept:
        raise DegenerateInstanceError("every family member has zero optimal latency")
    worst = max(kept, key=lambda r: r.poa)
    return worst.model_copy(
        update={
            "family_size": len(instances),
            "excluded": excluded,
            "certified": all(r.certified for r in kept),
            "note": f"argmax {worst.instance_id} over {len(kept)} members",
        }
    )


# ── closed forms ────────────────────────────────────────────
def affine_toll_poa_formula(beta: float) -> float:
    """4 / (3 + 2β - β²) below β = 1, and 1 from there on."""
    if beta < 0:
        raise DomainError(f"β must be non-negative, got {beta}")
    if beta >= 1.0:
        return 1.0
    return 4.0 / (3.0 + 2.0 * beta - beta * beta)


def affine_subsidy_poa_formula(beta: float) -> float:
    """Toll curve at β̂ = 1/(1-β) - 1 below β = 1/2, and 1 from there up to β < 1."""
    if beta < 0 or beta >= 1.0:
        raise DomainError(f"subsidy bound β must lie in [0, 1), got {beta}")
    if beta >= 0.5:
        return 1.0
    return affine_toll_poa_formula(subsidy_to_toll_bound(beta))


def smc_poa_formula(q: float) -> float:
    """(4/3)(1 - √q / (1 + √q)²)."""
    if not (0.0 < q <= 1.0):
        raise DomainError(f"heterogeneity q must lie in (0, 1], got {q}")
    r = math.sqrt(q)
    return 4.0 / 3.0 * (1.0 - r / (1.0 + r) ** 2)


def smc_single_class_poa(q: float) -> float:
    """(1 + t)² / (4t) with t = 1/√q: the scaled toll on a population sitting entirely at sL or sU.

    Each class then faces a marginal-cost toll off by the factor t (or 1/t),
    and the two-link grid search reaches this value, above smc_poa_formula for q < 1.
    """
    if not (0.0 < q <= 1.0):
        raise DomainError(f"heterogeneity q must lie in (0, 1], got {q}")
    t = 1.0 / math.sqrt(q)
    return (1.0 + t) ** 2 / (4.0 * t)


def nes_effective_heterogeneity(q: float, s_lower: float, s_upper: float) -> float:
    """q̂ = λq / (1 - q + λq) with λ = √(sL sU) / (1 + √(sL sU))."""
    root = math.sqrt(s_lower * s_upper)
    lam = root / (1.0 + root)
    return lam * q / (1.0 - q + lam * q)


def nes_poa_formula(q: float, s_lower: Optional[float] = None, s_upper: Optional[float] = None) -> float:
    """smc curve evaluated at the effective heterogeneity of the nominally equivalent subsidy.

    Without bounds, sL = 1 and sU = 1/q.
    """
    if not (0.0 < q <= 1.0):
        raise DomainError(f"heterogeneity q must lie in (0, 1], got {q}")
    if s_lower is None and s_upper is None:
        s_lower, s_upper = 1.0, 1.0 / q
    elif s_lower is None or s_upper is None:
        raise ParameterError("give both sL and sU or neither")
    if not (0 < s_lower <= s_upper):
        raise DomainError(f"sensitivity bounds must satisfy 0 < sL <= sU, got ({s_lower}, {s_upper})")
    if abs(s_lower / s_upper - q) > 1e-9 * max(1.0, q):
        raise ParameterError(f"q = {q} does not match sL/sU = {s_lower / s_upper}")
    q_hat = nes_effective_heterogeneity(q, s_lower, s_upper)
    if q_hat > q + 1e-15:
        raise InvariantViolation(f"effective heterogeneity {q_hat} exceeds q = {q}")
    return smc_poa_formula(q_hat)


# ── generators ──────────────────────────────────────────────
def pigou_generator(p: int) -> RoutingProblem:
    """Two parallel links with l1 = f^p and l2 = 1, unit demand."""
    if int(p) != p or p < 1:
        raise ParameterError(f"Pigou degree must be an integer >= 1, got {p}")
    p = int(p)
    return parallel_network(
        [LatencyFunction.monomial(p), LatencyFunction.constant(1.0)], name=f"pigou_p{p}"
    )


def pigou_instance(
    p: int,
    mechanism: Optional[IncentiveMechanism] = None,
    sensitivity: Optional[SensitivityModel] = None,
) -> GameInstance:
    instance = GameInstance.untolled(pigou_generator(p), sensitivity)
    return instance.with_mechanism(mechanism) if mechanism is not None else instance


def pigou_optimal_flow(p: int) -> float:
    """(1/(p+1))^(1/p), the optimal flow on the congestible link."""
    return (1.0 / (p + 1.0)) ** (1.0 / p)
