from __future__ import annotations

from typing import Any, Dict, List, Optional, Sequence


class TollSubError(Exception):
    """Base class for every error the package raises on purpose."""

    exit_code: int = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def __str__(self) -> str:
        return self.message


# ── usage / parameters (exit 1) ─────────────────────────────
class UsageError(TollSubError):
    exit_code = 1


class ParameterError(UsageError, ValueError):
    pass


class DomainError(ParameterError):
    pass


class MechanismClassError(ParameterError):
    """Mechanism applied to a latency outside its declared class."""


class MechanismSpecError(ParameterError):
    """Malformed mechanism string."""


class UnboundedIncentiveError(ParameterError):
    """Non-zero incentive where the latency vanishes."""


class TopologyError(ParameterError):
    pass


class PathLookupError(UsageError, KeyError):
    def __str__(self) -> str:
        return self.message


# ── instance files (exit 2) ─────────────────────────────────
class InstanceParseError(TollSubError):
    exit_code = 2

    def __init__(self, message: str, diagnostics: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []

    def __str__(self) -> str:
        if not self.diagnostics:
            return self.message
        located = "; ".join(
            f"{'.'.join(str(p) for p in d.get('loc', ()))}: {d.get('msg')}" for d in self.diagnostics
        )
        return f"{self.message}: {located}"


# ── solvers (exit 3) ────────────────────────────────────────
class ConvergenceError(TollSubError):
    exit_code = 3

    def __init__(
        self,
        message: str,
        best_iterate: Any = None,
        gap: float = float("inf"),
        gap_trace: Sequence[float] = (),
    ):
        super().__init__(message)
        self.best_iterate = best_iterate
        self.gap = gap
        self.gap_trace = list(gap_trace)


class NonMonotoneCostError(TollSubError):
    exit_code = 3


# ── invariants (exit 4) ─────────────────────────────────────
class FeasibilityError(TollSubError):
    exit_code = 4


class DegenerateInstanceError(TollSubError):
    exit_code = 4


class InvariantViolation(TollSubError):
    exit_code = 4


class TheoremViolation(InvariantViolation):
    pass
