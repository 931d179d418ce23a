from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from tollsub.core.config import settings
from tollsub.core.errors import ParameterError


@dataclass(frozen=True)
class SensitivityClass:
    mass: float
    s: float


@dataclass(frozen=True)
class SensitivityModel:
    """Finitely many user classes, each with a population share and a sensitivity."""

    classes: Tuple[SensitivityClass, ...]
    bounds: Tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "bounds", (float(self.bounds[0]), float(self.bounds[1])))
        s_lower, s_upper = self.bounds
        if not (0.0 < s_lower <= s_upper):
            raise ParameterError(f"sensitivity bounds must satisfy 0 < sL <= sU, got {self.bounds}")
        if not self.classes:
            raise ParameterError("sensitivity model needs at least one class")
        tol = settings.EPS_FEAS
        for c in self.classes:
            if c.mass < 0.0:
                raise ParameterError(f"negative class mass {c.mass}")
            if c.s < 0.0:
                raise ParameterError(f"negative sensitivity {c.s}")
            if not (s_lower - tol <= c.s <= s_upper + tol):
                raise ParameterError(f"sensitivity {c.s} outside bounds [{s_lower}, {s_upper}]")
        total = sum(c.mass for c in self.classes)
        if abs(total - 1.0) > tol:
            raise ParameterError(f"sensitivity masses sum ≠ 1 (got {total!r})")

    @classmethod
    def homogeneous(cls) -> "SensitivityModel":
        return cls((SensitivityClass(1.0, 1.0),), (1.0, 1.0))

    @classmethod
    def uniform(cls, s: float) -> "SensitivityModel":
        return cls((SensitivityClass(1.0, s),), (s, s))

    @classmethod
    def two_class(
        cls, s_lower: float, s_upper: float, mass_lower: float, bounds: Optional[Tuple[float, float]] = None
    ) -> "SensitivityModel":
        classes = [SensitivityClass(mass_lower, s_lower), SensitivityClass(1.0 - mass_lower, s_upper)]
        return cls(tuple(c for c in classes if c.mass > 0.0), bounds or (s_lower, s_upper))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[float, float]], bounds: Tuple[float, float]) -> "SensitivityModel":
        return cls(tuple(SensitivityClass(float(m), float(s)) for m, s in pairs), bounds)

    @property
    def masses(self) -> np.ndarray:
        return np.array([c.mass for c in self.classes])

    @property
    def sensitivities(self) -> np.ndarray:
        return np.array([c.s for c in self.classes])

    @property
    def is_homogeneous(self) -> bool:
        return len(self.classes) == 1 and self.classes[0].s == 1.0

    @property
    def is_uniform(self) -> bool:
        """Every class shares one sensitivity value."""
        values = self.sensitivities
        return bool(np.all(np.abs(values - values[0]) <= settings.TIE_TOL))

    @property
    def heterogeneity(self) -> float:
        """q = sL / sU."""
        return self.bounds[0] / self.bounds[1]

    def merged(self, tol: Optional[float] = None) -> Tuple["SensitivityModel", List[List[int]]]:
        """Merge classes with equal sensitivity; also returns the member indices of each group."""
        tol = settings.TIE_TOL if tol is None else tol
        groups: List[List[int]] = []
        for i, c in enumerate(self.classes):
            for g in groups:
                if abs(self.classes[g[0]].s - c.s) <= tol:
                    g.append(i)
                    break
            else:
                groups.append([i])
        classes = tuple(
            SensitivityClass(sum(self.classes[i].mass for i in g), self.classes[g[0]].s) for g in groups
        )
        return SensitivityModel(classes, self.bounds), groups

    def mapped(self, fn, bounds: Optional[Sequence[float]] = None) -> "SensitivityModel":
        """Apply `fn` to every sensitivity (and to the bounds unless given)."""
        new_bounds = tuple(bounds) if bounds is not None else (fn(self.bounds[0]), fn(self.bounds[1]))
        return SensitivityModel(
            tuple(SensitivityClass(c.mass, fn(c.s)) for c in self.classes),
            (min(new_bounds), max(new_bounds)),
        )
