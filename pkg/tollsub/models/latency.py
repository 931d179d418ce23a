from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P

from tollsub.core.errors import ParameterError

ArrayLike = Union[float, np.ndarray]


def _as_coefficients(coefficients: Iterable[float]) -> Tuple[float, ...]:
    coeffs = tuple(float(c) for c in coefficients)
    if not coeffs:
        raise ParameterError("polynomial needs at least one coefficient")
    if not all(math.isfinite(c) for c in coeffs):
        raise ParameterError(f"non-finite coefficient in {coeffs}")
    return coeffs


@dataclass(frozen=True)
class Polynomial:
    """Polynomial in the edge mass, coefficients ordered from the constant term up."""

    coefficients: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _as_coefficients(self.coefficients))

    # evaluation
    def __call__(self, x: ArrayLike) -> ArrayLike:
        return P.polyval(x, self.coefficients)

    def value(self, x: float) -> float:
        """Scalar Horner evaluation; the hot path of the scalar solvers."""
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    # structure
    @property
    def degree(self) -> int:
        for i in range(len(self.coefficients) - 1, 0, -1):
            if self.coefficients[i] != 0.0:
                return i
        return 0

    @property
    def intercept(self) -> float:
        return self.coefficients[0]

    @property
    def slope(self) -> float:
        return self.coefficients[1] if len(self.coefficients) > 1 else 0.0

    @property
    def is_affine(self) -> bool:
        return self.degree <= 1

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.coefficients)

    def is_constant(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.coefficients[1:])

    # calculus
    def derivative(self) -> "Polynomial":
        if len(self.coefficients) == 1:
            return Polynomial((0.0,))
        return Polynomial(P.polyder(self.coefficients))

    def antiderivative(self) -> "Polynomial":
        """Integral from 0, so the result vanishes at x = 0."""
        return Polynomial(P.polyint(self.coefficients, lbnd=0.0))

    def times_x(self) -> "Polynomial":
        return Polynomial((0.0,) + self.coefficients)

    # arithmetic; results are plain polynomials because signs are no longer guaranteed
    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(P.polyadd(self.coefficients, other.coefficients))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(P.polysub(self.coefficients, other.coefficients))

    def scale(self, factor: float) -> "Polynomial":
        return Polynomial(tuple(factor * c for c in self.coefficients))

    def is_non_decreasing(self, points: int = 1001, tol: float = 1e-12) -> bool:
        """Sampled check of monotonicity on [0, 1]."""
        if self.is_constant():
            return True
        values = self(np.linspace(0.0, 1.0, points))
        return bool(np.all(np.diff(values) >= -tol * max(1.0, float(np.max(np.abs(values))))))

    def __repr__(self) -> str:
        terms = []
        for i, c in enumerate(self.coefficients):
            if c == 0.0 and len(self.coefficients) > 1:
                continue
            terms.append(f"{c:g}" if i == 0 else (f"{c:g}f" if i == 1 else f"{c:g}f^{i}"))
        return f"{type(self).__name__}({' + '.join(terms) or '0'})"


@dataclass(frozen=True, repr=False)
class LatencyFunction(Polynomial):
    """Edge latency with non-negative coefficients, hence non-decreasing on [0, inf)."""

    def __post_init__(self):
        super().__post_init__()
        for i, c in enumerate(self.coefficients):
            if c < 0.0:
                raise ParameterError(f"negative latency coefficient alpha_{i} = {c}")

    @classmethod
    def affine(cls, a: float, b: float) -> "LatencyFunction":
        return cls((b, a))

    @classmethod
    def monomial(cls, p: int, scale: float = 1.0) -> "LatencyFunction":
        return cls(tuple([0.0] * p + [scale]))

    @classmethod
    def constant(cls, b: float) -> "LatencyFunction":
        return cls((b,))


@dataclass(frozen=True, repr=False)
class IncentiveFunction(Polynomial):
    """Incentive tau_e on [0, 1]; tolls are >= 0, subsidies <= 0."""

    @classmethod
    def zero(cls) -> "IncentiveFunction":
        return cls((0.0,))

    @classmethod
    def from_polynomial(cls, poly: Polynomial) -> "IncentiveFunction":
        return cls(poly.coefficients)


def effective_cost(latency: Polynomial, incentive: Polynomial, sensitivity: float = 1.0) -> Polynomial:
    """Cost a user with the given sensitivity observes on an edge: l + s * tau."""
    return latency + incentive.scale(sensitivity)
