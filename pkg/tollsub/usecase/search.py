"""
Worst-case search over two-link affine instances.

Every grid point (a1, b1, a2, b2, mass split) is screened at once with numpy:
a mechanism that is linear on affine latencies turns each class cost into
A_e(s) F + B_e(s), so equilibria follow from a vectorized bisection on the
first link's flow and optima from the closed-form marginal-cost crossing.
The best grid point is then re-solved and certified with the full solvers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from tollsub.core.config import Settings, settings as default_settings
from tollsub.core.errors import DegenerateInstanceError, MechanismClassError, ParameterError
from tollsub.models.game import GameInstance
from tollsub.models.latency import LatencyFunction
from tollsub.models.network import parallel_network
from tollsub.models.sensitivity import SensitivityModel
from tollsub.schemas.report import PoAReport
from tollsub.usecase.incentives import IncentiveMechanism
from tollsub.usecase.poa import DEGENERATE_OPT, poa_instance

logger = logging.getLogger(__name__)

BISECTION_STEPS = 64
USED_TOL = 1e-9


@dataclass(frozen=True)
class AffineGrid:
    coef_points: int = 21
    coef_max: float = 2.0
    mass_splits: int = 11

    @classmethod
    def from_settings(cls, cfg: Settings) -> "AffineGrid":
        return cls(cfg.COEF_POINTS, cfg.COEF_MAX, cfg.MASS_SPLITS)

    @property
    def values(self) -> np.ndarray:
        return np.linspace(0.0, self.coef_max, self.coef_points)

    @property
    def splits(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.mass_splits) if self.mass_splits > 1 else np.array([0.5])

    def describe(self) -> str:
        return (
            f"{self.coef_points} points per coefficient in [0, {self.coef_max:g}], "
            f"{self.mass_splits} mass splits"
        )


@dataclass(frozen=True)
class ScreenResult:
    poa: float
    a1: float
    b1: float
    a2: float
    b2: float
    mass_lower: float
    evaluated: int
    excluded_degenerate: int
    excluded_non_monotone: int
    excluded_unused: int

    @property
    def excluded(self) -> int:
        return self.excluded_degenerate + self.excluded_non_monotone + self.excluded_unused

    @property
    def instance_id(self) -> str:
        return (
            f"a1={self.a1:g},b1={self.b1:g},a2={self.a2:g},b2={self.b2:g},m={self.mass_lower:g}"
        )


def mechanism_affine_map(mechanism: IncentiveMechanism) -> Tuple[float, float, float, float]:
    """(c0, c1, d0, d1) with T(af + b) = a (c0 + c1 f) + b (d0 + d1 f)."""

    def coeffs(lat: LatencyFunction) -> np.ndarray:
        tau = mechanism.apply(lat)
        if tau.degree > 1:
            raise MechanismClassError(f"{mechanism.spec()} is not affine on affine latencies")
        out = np.zeros(2)
        out[: min(2, len(tau.coefficients))] = tau.coefficients[:2]
        return out

    c = coeffs(LatencyFunction.affine(1.0, 0.0))
    d = coeffs(LatencyFunction.affine(0.0, 1.0))
    probe = coeffs(LatencyFunction.affine(2.0, 3.0))
    if not np.allclose(probe, 2.0 * c + 3.0 * d, rtol=1e-12, atol=1e-12):
        raise MechanismClassError(f"{mechanism.spec()} is not linear in the latency coefficients")
    return float(c[0]), float(c[1]), float(d[0]), float(d[1])


def _latency(F, a1, b1, a2, b2):
    return F * (a1 * F + b1) + (1.0 - F) * (a2 * (1.0 - F) + b2)


def _optimal_split(a1, b1, a2, b2):
    """Flow on link 1 minimizing total latency, where 2 a1 F + b1 = 2 a2 (1 - F) + b2."""
    slope = 2.0 * (a1 + a2)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(slope > 0, (2.0 * a2 + b2 - b1) / np.where(slope > 0, slope, 1.0), np.where(b1 <= b2, 1.0, 0.0))
    return np.clip(F, 0.0, 1.0)


def _crossing(A1, B1, A2, B2, masses, side):
    """Vectorized bisection for the extreme two-link equilibria; A*, B* have shape (classes, points)."""
    n = A1.shape[1]
    lo, hi = np.zeros(n), np.ones(n)

    def weight(F):
        D = A1 * F + B1 - A2 * (1.0 - F) - B2
        mask = D < 0 if side == "low" else D <= 0
        return masses @ mask.astype(float)

    if side == "low":
        done = 0.0 >= weight(lo)
        hi = np.where(done, 0.0, hi)
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            ok = mid >= weight(mid)
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        return hi
    done = 1.0 <= weight(hi)
    lo = np.where(done, 1.0, lo)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        ok = mid <= weight(mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def screen_two_link(
    mechanism: IncentiveMechanism,
    sensitivities: Sequence[float],
    grid: AffineGrid,
    fully_utilized: bool = False,
) -> ScreenResult:
    """Largest grid PoA with degenerate, non-monotone and (optionally) not fully-utilized points excluded."""
    c0, c1, d0, d1 = mechanism_affine_map(mechanism)
    s = np.asarray(sensitivities, dtype=float)
    if s.ndim != 1 or s.size not in (1, 2) or np.any(s <= 0):
        raise ParameterError(f"grid search takes one or two positive sensitivities, got {list(sensitivities)}")
    v = grid.values
    a1, b1, a2, b2 = (g.ravel() for g in np.meshgrid(v, v, v, v, indexing="ij"))

    L_opt = _latency(_optimal_split(a1, b1, a2, b2), a1, b1, a2, b2)
    degenerate = L_opt <= DEGENERATE_OPT

    # per-class slopes and intercepts, shape (classes, points)
    sig1, kap1 = c1 * a1 + d1 * b1, c0 * a1 + d0 * b1
    sig2, kap2 = c1 * a2 + d1 * b2, c0 * a2 + d0 * b2
    A1 = a1 + s[:, None] * sig1
    B1 = b1 + s[:, None] * kap1
    A2 = a2 + s[:, None] * sig2
    B2 = b2 + s[:, None] * kap2
    non_monotone = np.any((A1 < -1e-12) | (A2 < -1e-12), axis=0) & ~degenerate

    splits = grid.splits if s.size == 2 else np.array([1.0])
    best = (-np.inf, 0, 0.0)
    n_unused = 0
    for m in splits:
        masses = np.array([m, 1.0 - m]) if s.size == 2 else np.array([1.0])
        worst = np.full(a1.size, -np.inf)
        worst_used = np.ones(a1.size, dtype=bool)
        for side in ("low", "high"):
            F = _crossing(A1, B1, A2, B2, masses, side)
            L = _latency(F, a1, b1, a2, b2)
            used = (F > USED_TOL) & (F < 1.0 - USED_TOL)
            take = L > worst
            worst = np.where(take, L, worst)
            worst_used = np.where(take, used, worst_used)
        valid = ~degenerate & ~non_monotone
        if fully_utilized:
            n_unused += int(np.sum(valid & ~worst_used))
            valid &= worst_used
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(valid, worst / np.where(degenerate, 1.0, L_opt), -np.inf)
        i = int(np.argmax(ratio))
        if ratio[i] > best[0]:
            best = (float(ratio[i]), i, float(m))

    value, i, m = best
    n_deg = int(degenerate.sum()) * len(splits)
    n_mono = int(non_monotone.sum()) * len(splits)
    if not np.isfinite(value):
        raise DegenerateInstanceError("no admissible grid point")
    logger.debug(
        "%s: screened %d points, best %.12g at %s",
        mechanism.spec(), a1.size * len(splits), value, (a1[i], b1[i], a2[i], b2[i], m),
    )
    return ScreenResult(
        poa=value,
        a1=float(a1[i]),
        b1=float(b1[i]),
        a2=float(a2[i]),
        b2=float(b2[i]),
        mass_lower=m if s.size == 2 else 1.0,
        evaluated=a1.size * len(splits),
        excluded_degenerate=n_deg,
        excluded_non_monotone=n_mono,
        excluded_unused=n_unused,
    )


def grid_instance(
    screen: ScreenResult,
    mechanism: IncentiveMechanism,
    sensitivities: Sequence[float],
    bounds: Optional[Tuple[float, float]] = None,
) -> GameInstance:
    problem = parallel_network(
        [LatencyFunction.affine(screen.a1, screen.b1), LatencyFunction.affine(screen.a2, screen.b2)],
        name=screen.instance_id,
    )
    if len(sensitivities) == 2:
        s_lower, s_upper = sensitivities
        model = SensitivityModel.two_class(s_lower, s_upper, screen.mass_lower, bounds)
    else:
        s0 = float(sensitivities[0])
        model = SensitivityModel.uniform(s0) if bounds is None else SensitivityModel.from_pairs([(1.0, s0)], bounds)
    return GameInstance.untolled(problem, model).with_mechanism(mechanism)


def affine_worstcase_search(
    mechanism: IncentiveMechanism,
    sensitivities: Sequence[float] = (1.0,),
    grid: Optional[AffineGrid] = None,
    fully_utilized: bool = False,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
    cfg: Optional[Settings] = None,
) -> PoAReport:
    """Grid supremum of the two-link affine PoA, certified at the argmax."""
    cfg = cfg or default_settings
    grid = grid or AffineGrid.from_settings(cfg)
    screen = screen_two_link(mechanism, sensitivities, grid, fully_utilized)
    instance = grid_instance(screen, mechanism, sensitivities)
    report = poa_instance(instance, restarts, seed, cfg)
    if abs(report.poa - screen.poa) > 1e-6:
        logger.warning(
            "%s: certified PoA %.12g differs from grid value %.12g", screen.instance_id, report.poa, screen.poa
        )
    s = [float(x) for x in sensitivities]
    return report.model_copy(
        update={
            "s_lower": min(s),
            "s_upper": max(s),
            "family_size": screen.evaluated,
            "excluded": screen.excluded,
            "grid_poa": screen.poa,
            "note": f"grid lower bound; {grid.describe()}",
        }
    )
