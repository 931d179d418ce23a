"""
Incentive mechanisms: maps from an edge latency to the incentive charged on it.

Mechanisms act symbolically on polynomial latencies, so every realized
incentive is again a polynomial and transforms compose exactly.
"""

from __future__ import annotations

import logging
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from tollsub.core.config import settings
from tollsub.core.errors import (
    DomainError,
    InvariantViolation,
    MechanismClassError,
    MechanismSpecError,
    ParameterError,
    UnboundedIncentiveError,
)
from tollsub.models.latency import IncentiveFunction, LatencyFunction, Polynomial
from tollsub.models.sensitivity import SensitivityModel

logger = logging.getLogger(__name__)

SIGN_TOL = 1e-12
TIGHT_TOL = 1e-9


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def _require_affine(latency: LatencyFunction, mechanism: str) -> None:
    if not latency.is_affine:
        raise MechanismClassError(
            f"{mechanism} is defined on affine latencies only, got degree {latency.degree}"
        )


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not math.isfinite(beta) or beta < 0:
        raise ParameterError(f"bound β must be a finite non-negative number, got {beta}")
    return beta


def _check_bounds(s_lower: float, s_upper: float) -> Tuple[float, float]:
    s_lower, s_upper = float(s_lower), float(s_upper)
    if not (0 < s_lower <= s_upper) or not math.isfinite(s_upper):
        raise ParameterError(f"sensitivity bounds must satisfy 0 < sL <= sU, got ({s_lower}, {s_upper})")
    return s_lower, s_upper


class IncentiveMechanism(ABC):
    """Base class for all incentive mechanisms."""

    kind: ClassVar[str] = "abstract"
    # "toll", "subsidy", "none" or "mixed"
    sign: ClassVar[str] = "mixed"

    @abstractmethod
    def apply(self, latency: LatencyFunction) -> IncentiveFunction:
        """Incentive function charged on an edge with this latency."""

    @abstractmethod
    def spec(self) -> str:
        """Canonical mechanism string, accepted back by parse_mechanism."""

    @property
    def bound(self) -> Optional[float]:
        """Declared β of a bounded mechanism, None when unbounded."""
        return None

    def _within_bound(self, latency: LatencyFunction, tau: IncentiveFunction) -> IncentiveFunction:
        """Return tau after checking |tau| <= β l at f = 0 and f = 1; both are affine, so that covers [0, 1]."""
        beta = self.bound
        for f in (0.0, 1.0):
            limit = beta * latency.value(f)
            if abs(tau.value(f)) > limit + SIGN_TOL * max(1.0, limit):
                raise InvariantViolation(
                    f"{self.spec()} charges {tau.value(f)!r} at f={f:g}, beyond β·l = {limit!r}"
                )
        return tau

    def __str__(self) -> str:
        return self.spec()


@dataclass(frozen=True)
class NoIncentive(IncentiveMechanism):
    kind: ClassVar[str] = "none"
    sign: ClassVar[str] = "none"

    def apply(self, latency: LatencyFunction) -> IncentiveFunction:
        return IncentiveFunction.zero()

    def spec(self) -> str:
        return "none"

    @property
    def bound(self) -> Optional[float]:
        return 0.0


@dataclass(frozen=True)
class MarginalCost(IncentiveMechanism):
    """tau(f) = f * l'(f)."""

    kind: ClassVar[str] = "marginal_cost"
    sign: ClassVar[str] = "toll"

    def apply(self, latency: LatencyFunction) -> IncentiveFunction:
        return IncentiveFunction.from_polynomial(latency.derivative().times_x())

    def spec(self) -> str:
        return "mc"


@dataclass(frozen=True)
class OptBoundedToll(IncentiveMechanism):
    beta: float
    kind: ClassVar[str] = "opt_bounded_toll"
    sign: ClassVar[str] = "toll"

    def __post_init__(self):
        object.__setattr__(self, "beta", _check_beta(self.beta))

    def apply(self, latency: LatencyFunction) -> IncentiveFunction:
        _require_affine(latency, "opt_bounded_toll")
        factor = self.beta if self.beta < 1.0 else 1.0
        return self._within_bound(latency, IncentiveFunction((0.0, factor * latency.slope)))

    def spec(self) -> str:
        return f"toll:β={_fmt(self.beta)}"

    @property
    def bound(self) -> Optional[float]:
        return self.beta


@dataclass(frozen=True)
class OptBoundedSubsidy(IncentiveMechanism):
    beta: float
    kind: ClassVar[str] = "opt_bounded_subsidy"
    sign: ClassVar[str] = "subsidy"

    def __post_init__(self):
        object.__setattr__(self, "beta", _check_beta(self.beta))

    def apply(self, latency: LatencyFunction) -> IncentiveFunction:
        _require_affine(latency, "opt_bounded_subsidy")
        factor = self.beta if self.beta < 0.5 else 0.5
        return self._within_bound(latency, IncentiveFunction((-factor * latency.intercept,)))

    def spec(self) -> str:
        return f"subsidy:β={_fmt(self.beta)}"

    @property
    def bound(self) -> Optional[float]:
        return self.beta


@dataclass(frozen=True)
class ScaledMarginalCost(IncentiveMechanism):
    """tau(af + b) = af / sqrt(sL * sU)."""

    s_lower: float
    s_upper: float
    kind: ClassVar[str] = "scaled_marginal_cost"
    sign: ClassVar[str] = "toll"

    def __post_init__(self):
        s_lower, s_upper = _check_bounds(self.s_lower, self.s_upper)
        object.__setattr__(self, "s_lower", s_lower)
        object.__setattr__(self, "s_upper", s_upper)

    @property
    def k(self) -> float:
        return 1.0 / math.sqrt(self.s_lower * self.s_upper)

    def apply(self, latency: LatencyFunction) -> IncentiveFunction:
        _require_affine(latency, "scaled_marginal_cost")
        return IncentiveFunction((0.0, latency.slope * self.k))

    def spec(self) -> str:
        return f"smc:sL={_fmt(self.s_lower)},sU={_fmt(self.s_upper)}"


@dataclass(frozen=True)
class NominallyEquivalentSubsidy(IncentiveMechanism):
    """tau(af + b) = -b / (1 + sqrt(sL * sU))."""

    s_lower: float
    s_upper: float
    kind: ClassVar[str] = "nominally_equivalent_subsidy"
    sign: ClassVar[str] = "subsidy"

    def __post_init__(self):
        s_lower, s_upper = _check_bounds(self.s_lower, self.s_upper)
        object.__setattr__(self, "s_lower", s_lower)
        object.__setattr__(self, "s_upper", s_upper)

    def apply(self, latency: LatencyFunction) -> IncentiveFunction:
        _require_affine(latency, "nominally_equivalent_subsidy")
        return IncentiveFunction((-latency.intercept / (1.0 + math.sqrt(self.s_lower * self.s_upper)),))

    def spec(self) -> str:
        return f"nes:sL={_fmt(self.s_lower)},sU={_fmt(self.s_upper)}"


@dataclass(frozen=True)
class TightToll(IncentiveMechanism):
    """Tightly bounded toll on polynomials of degree <= p: sum_{i>=1} min(β, i) alpha_i f^i."""

    beta: float
    p: int
    kind: ClassVar[str] = "tight_toll"
    sign: ClassVar[str] = "toll"

    def __post_init__(self):
        object.__setattr__(self, "beta", _check_beta(self.beta))
        if int(self.p) != self.p or self.p < 1:
            raise ParameterError(f"degree p must be a positive integer, got {self.p}")
        object.__setattr__(self, "p", int(self.p))

    def apply(self, latency: LatencyFunction) -> IncentiveFunction:
        if latency.degree > self.p:
            raise MechanismClassError(f"ttoll with p={self.p} applied to degree {latency.degree}")
        coeffs = [0.0] + [min(self.beta, i) * a for i, a in enumerate(latency.coefficients) if i >= 1]
        return IncentiveFunction(tuple(coeffs))

    def spec(self) -> str:
        return f"ttoll:β={_fmt(self.beta)},p={self.p}"

    @property
    def bound(self) -> Optional[float]:
        return self.beta


@dataclass(frozen=True)
class TightSubsidy(IncentiveMechanism):
    """Tightly bounded subsidy on polynomials of degree <= p: -min(β, p/(p+1)) alpha_0."""

    beta: float
    p: int
    kind: ClassVar[str] = "tight_subsidy"
    sign: ClassVar[str] = "subsidy"

    def __post_init__(self):
        object.__setattr__(self, "beta", _check_beta(self.beta))
        if int(self.p) != self.p or self.p < 1:
            raise ParameterError(f"degree p must be a positive integer, got {self.p}")
        object.__setattr__(self, "p", int(self.p))

    def apply(self, latency: LatencyFunction) -> IncentiveFunction:
        if latency.degree > self.p:
            raise MechanismClassError(f"tsub with p={self.p} applied to degree {latency.degree}")
        return IncentiveFunction((-min(self.beta, self.p / (self.p + 1.0)) * latency.intercept,))

    def spec(self) -> str:
        return f"tsub:β={_fmt(self.beta)},p={self.p}"

    @property
    def bound(self) -> Optional[float]:
        return self.beta


@dataclass(frozen=True)
class AffineTransform(IncentiveMechanism):
    """lambda * T(l) + (lambda - 1) * l."""

    base: IncentiveMechanism
    lam: float
    kind: ClassVar[str] = "affine_transform"

    def __post_init__(self):
        lam = float(self.lam)
        if not math.isfinite(lam) or lam <= 0:
            raise ParameterError(f"transform parameter λ must be > 0, got {self.lam}")
        object.__setattr__(self, "lam", lam)

    def apply(self, latency: LatencyFunction) -> IncentiveFunction:
        tau = self.base.apply(latency)
        return IncentiveFunction.from_polynomial(tau.scale(self.lam) + latency.scale(self.lam - 1.0))

    def spec(self) -> str:
        return f"xform({self.base.spec()},λ={_fmt(self.lam)})"


# ── functional forms of the mechanisms ─────────────────────
def marginal_cost(latency: LatencyFunction) -> IncentiveFunction:
    return MarginalCost().apply(latency)


def opt_bounded_toll_affine(latency: LatencyFunction, beta: float) -> IncentiveFunction:
    return OptBoundedToll(beta).apply(latency)


def opt_bounded_subsidy_affine(latency: LatencyFunction, beta: float) -> IncentiveFunction:
    return OptBoundedSubsidy(beta).apply(latency)


def scaled_marginal_cost(latency: LatencyFunction, s_lower: float, s_upper: float) -> IncentiveFunction:
    return ScaledMarginalCost(s_lower, s_upper).apply(latency)


def nominally_equivalent_subsidy(latency: LatencyFunction, s_lower: float, s_upper: float) -> IncentiveFunction:
    return NominallyEquivalentSubsidy(s_lower, s_upper).apply(latency)


def affine_transform(mechanism: IncentiveMechanism, lam: float) -> IncentiveMechanism:
    """Nominally equivalent mechanism; nested transforms collapse to one with the product λ."""
    if isinstance(mechanism, AffineTransform):
        inner = AffineTransform(mechanism.base, lam)  # validates λ
        return AffineTransform(inner.base, mechanism.lam * inner.lam)
    return AffineTransform(mechanism, lam)


# ── sensitivity side of the transforms ─────────────────────
def sensitivity_map(s: float, lam: float) -> float:
    """g(s, λ) = s / (λ + s - sλ)."""
    if s < 0:
        raise DomainError(f"sensitivity must be non-negative, got {s}")
    if not (0 < lam <= 1):
        raise DomainError(f"λ must lie in (0, 1], got {lam}")
    denom = lam + s - s * lam
    if denom <= 0:
        raise DomainError(f"g({s}, {lam}) has non-positive denominator {denom}")
    return s / denom


def transform_sensitivity(model: SensitivityModel, lam: float) -> SensitivityModel:
    return model.mapped(lambda s: sensitivity_map(s, lam))


def toll_to_subsidy_bound(beta: float) -> float:
    """Subsidy bound nominally equivalent to a toll bound: β / (1 + β)."""
    beta = _check_beta(beta)
    return beta / (1.0 + beta)


def subsidy_to_toll_bound(beta: float) -> float:
    """β̂ = 1/(1 - β) - 1, the toll bound matching a subsidy bound β < 1."""
    beta = _check_beta(beta)
    if beta >= 1.0:
        raise DomainError(f"subsidy bound must be < 1, got {beta}")
    return 1.0 / (1.0 - beta) - 1.0


def nominal_pair(beta_toll: float) -> Tuple[float, float, float]:
    """(β⁺, β⁻, λ) with β⁻ = β⁺/(1+β⁺) and λ = 1/(1+β⁺)."""
    beta_toll = _check_beta(beta_toll)
    return beta_toll, toll_to_subsidy_bound(beta_toll), 1.0 / (1.0 + beta_toll)


def bound_preserving_lambda(beta: float) -> float:
    """λ that maps a toll bounded by β to effective costs between (1-β)l and l."""
    beta = _check_beta(beta)
    if beta == 0:
        raise DomainError("β must be positive")
    return 1.0 - beta if beta < 1.0 else 1.0 / (1.0 + beta)


# ── bound classification ────────────────────────────────────
@dataclass(frozen=True)
class BoundReport:
    is_toll: bool
    is_subsidy: bool
    tight_bound: float
    tight: bool

    @property
    def sign(self) -> str:
        if self.is_toll and self.is_subsidy:
            return "none"
        if self.is_toll:
            return "toll"
        if self.is_subsidy:
            return "subsidy"
        return "mixed sign"


def _ratio_critical_points(latency: Polynomial, tau: Polynomial) -> np.ndarray:
    """Roots in (0, 1] of d/df [tau / l] for affine latencies."""
    if not latency.is_affine:
        return np.empty(0)
    num = P.polysub(
        P.polymul(P.polyder(tau.coefficients) if len(tau.coefficients) > 1 else [0.0], latency.coefficients),
        P.polymul(tau.coefficients, P.polyder(latency.coefficients) if len(latency.coefficients) > 1 else [0.0]),
    )
    num = np.trim_zeros(np.asarray(num, dtype=float), "b")
    if num.size < 2:
        return np.empty(0)
    roots = P.polyroots(num)
    real = roots[np.abs(roots.imag) < 1e-12].real
    return real[(real > 0) & (real <= 1)]


def classify_bound(
    mechanism: IncentiveMechanism,
    latencies: Sequence[LatencyFunction],
    grid_points: Optional[int] = None,
) -> BoundReport:
    """Sign class and smallest β with |tau| <= β l on the sampled grid."""
    grid = np.linspace(0.0, 1.0, grid_points or settings.GRID_POINTS)
    is_toll = is_subsidy = True
    best = 0.0
    ratios_seen = []
    for lat in latencies:
        tau = mechanism.apply(lat)
        f = np.union1d(grid, _ratio_critical_points(lat, tau))
        lv, tv = lat(f), tau(f)
        is_toll &= bool(np.all(tv >= -SIGN_TOL))
        is_subsidy &= bool(np.all(tv <= SIGN_TOL))
        vanishing = lv <= 1e-15
        if np.any(np.abs(tv[vanishing]) > SIGN_TOL):
            raise UnboundedIncentiveError(
                f"{mechanism.spec()} charges a non-zero incentive where {lat!r} vanishes"
            )
        keep = ~vanishing
        if not np.any(keep):
            continue
        ratio = np.abs(tv[keep]) / lv[keep]
        ratios_seen.append((f[keep], ratio))
        i = int(np.argmax(ratio))
        if ratio[i] > best:
            best = float(ratio[i])
    tight = any(np.any((fs > 0) & (r >= best - TIGHT_TOL)) for fs, r in ratios_seen)
    return BoundReport(is_toll, is_subsidy, best, tight)


# ── mechanism strings ───────────────────────────────────────
_KEY_ALIASES = {"β": "beta", "beta": "beta", "λ": "lam", "lambda": "lam", "sL": "sL", "sU": "sU", "p": "p"}
_PARAMS = re.compile(r"\s*([^=,\s]+)\s*=\s*([^,]+?)\s*(?:,|$)")


def _parse_params(text: str, source: str) -> Dict[str, float]:
    out: Dict[str, float] = {}
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _PARAMS.match(text, pos)
        if not m:
            raise MechanismSpecError(f"cannot parse parameters in mechanism '{source}'")
        key = _KEY_ALIASES.get(m.group(1))
        if key is None:
            raise MechanismSpecError(f"unknown parameter '{m.group(1)}' in mechanism '{source}'")
        try:
            out[key] = float(m.group(2))
        except ValueError:
            raise MechanismSpecError(f"parameter '{m.group(1)}' is not a number in '{source}'") from None
        pos = m.end()
    return out


def _need(params: Dict[str, float], keys: Sequence[str], source: str) -> Tuple[float, ...]:
    if set(params) != set(keys):
        raise MechanismSpecError(f"mechanism '{source}' expects parameters {', '.join(keys)}")
    return tuple(params[k] for k in keys)


def parse_mechanism(text: str) -> IncentiveMechanism:
    """Parse `none`, `mc`, `toll:β=`, `subsidy:β=`, `smc:sL=,sU=`, `nes:sL=,sU=`,
    `ttoll:β=,p=`, `tsub:β=,p=` and `xform(<mech>,λ=)`."""
    source = text
    text = text.strip()
    if text.startswith("xform(") and text.endswith(")"):
        body = text[len("xform("):-1]
        if "," not in body:
            raise MechanismSpecError(f"xform needs a base mechanism and λ in '{source}'")
        inner, tail = body.rsplit(",", 1)
        (lam,) = _need(_parse_params(tail, source), ("lam",), source)
        return affine_transform(parse_mechanism(inner), lam)

    name, _, rest = text.partition(":")
    params = _parse_params(rest, source) if rest else {}
    if name == "none":
        _need(params, (), source)
        return NoIncentive()
    if name == "mc":
        _need(params, (), source)
        return MarginalCost()
    if name == "toll":
        return OptBoundedToll(*_need(params, ("beta",), source))
    if name == "subsidy":
        return OptBoundedSubsidy(*_need(params, ("beta",), source))
    if name == "smc":
        return ScaledMarginalCost(*_need(params, ("sL", "sU"), source))
    if name == "nes":
        return NominallyEquivalentSubsidy(*_need(params, ("sL", "sU"), source))
    if name in ("ttoll", "tsub"):
        beta, p = _need(params, ("beta", "p"), source)
        cls = TightToll if name == "ttoll" else TightSubsidy
        return cls(beta, int(p) if float(p).is_integer() else p)
    raise MechanismSpecError(f"unknown mechanism '{source}'")
