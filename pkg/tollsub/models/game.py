from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

from tollsub.core.errors import ParameterError
from tollsub.models.latency import IncentiveFunction, Polynomial, effective_cost
from tollsub.models.network import Flow, RoutingProblem
from tollsub.models.sensitivity import SensitivityModel


@dataclass(frozen=True, eq=False)
class GameInstance:
    """A routing problem, its population, and one realized incentive per edge."""

    problem: RoutingProblem
    sensitivity: SensitivityModel = field(default_factory=SensitivityModel.homogeneous)
    incentives: Tuple[IncentiveFunction, ...] = ()
    mechanism: str = "none"

    def __post_init__(self):
        incentives = tuple(self.incentives) or tuple(IncentiveFunction.zero() for _ in self.problem.edges)
        if len(incentives) != self.problem.n_edges:
            raise ParameterError(
                f"expected one incentive per edge ({self.problem.n_edges}), got {len(incentives)}"
            )
        object.__setattr__(
            self,
            "incentives",
            tuple(t if isinstance(t, IncentiveFunction) else IncentiveFunction.from_polynomial(t) for t in incentives),
        )

    @classmethod
    def untolled(cls, problem: RoutingProblem, sensitivity: Optional[SensitivityModel] = None) -> "GameInstance":
        return cls(problem, sensitivity or SensitivityModel.homogeneous())

    @property
    def name(self) -> str:
        return self.problem.name

    def with_mechanism(self, mechanism) -> "GameInstance":
        """Realize `mechanism` (anything with apply(latency) and spec()) on every edge."""
        incentives = tuple(mechanism.apply(e.latency) for e in self.problem.edges)
        return replace(self, incentives=incentives, mechanism=mechanism.spec())

    def with_incentives(self, incentives: Sequence[Polynomial], mechanism: str = "custom") -> "GameInstance":
        return replace(self, incentives=tuple(incentives), mechanism=mechanism)

    def with_sensitivity(self, sensitivity: SensitivityModel) -> "GameInstance":
        return replace(self, sensitivity=sensitivity)

    def edge_costs(self, s: float = 1.0) -> Tuple[Polynomial, ...]:
        """Effective edge costs l_e + s * tau_e seen by a user with sensitivity s."""
        return tuple(effective_cost(e.latency, t, s) for e, t in zip(self.problem.edges, self.incentives))


def player_path_cost(instance: GameInstance, path_id: str, flow: Flow, s: float) -> float:
    """Cost observed on a path: sum over its edges of l_e(f_e) + s * tau_e(f_e)."""
    if s < 0:
        raise ParameterError(f"sensitivity must be non-negative, got {s}")
    problem = instance.problem
    path = problem.paths[problem.path_index(path_id)]
    x = flow.edge_flows
    return float(
        sum(
            problem.edges[i].latency.value(float(x[i])) + s * instance.incentives[i].value(float(x[i]))
            for i in path.edges
        )
    )
