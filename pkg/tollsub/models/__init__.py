from tollsub.models.game import GameInstance, player_path_cost
from tollsub.models.latency import IncentiveFunction, LatencyFunction, Polynomial, effective_cost
from tollsub.models.network import (
    Commodity,
    Edge,
    Flow,
    Path,
    RoutingProblem,
    parallel_network,
    total_latency,
)
from tollsub.models.sensitivity import SensitivityClass, SensitivityModel

__all__ = [
    "Commodity",
    "Edge",
    "Flow",
    "GameInstance",
    "IncentiveFunction",
    "LatencyFunction",
    "Path",
    "Polynomial",
    "RoutingProblem",
    "SensitivityClass",
    "SensitivityModel",
    "effective_cost",
    "parallel_network",
    "player_path_cost",
    "total_latency",
]
