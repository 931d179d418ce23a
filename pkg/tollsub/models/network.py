from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from tollsub.core.config import settings
from tollsub.core.errors import FeasibilityError, ParameterError, PathLookupError
from tollsub.models.latency import LatencyFunction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    latency: LatencyFunction


@dataclass(frozen=True)
class Commodity:
    origin: str
    destination: str
    demand: float


@dataclass(frozen=True)
class Path:
    id: str
    commodity: int
    edges: Tuple[int, ...]


def _path_id(commodity: int, edge_ids: Sequence[str]) -> str:
    return f"{commodity}:{'>'.join(edge_ids)}"


def enumerate_paths(
    vertices: Sequence[str],
    edges: Sequence[Edge],
    commodities: Sequence[Commodity],
    max_paths: int,
) -> Tuple[Path, ...]:
    """All simple paths per commodity, in networkx enumeration order."""
    graph = nx.MultiDiGraph()
    graph.add_nodes_from(vertices)
    for idx, e in enumerate(edges):
        graph.add_edge(e.tail, e.head, key=idx)

    paths: List[Path] = []
    for ci, com in enumerate(commodities):
        found = 0
        if com.origin == com.destination:
            raise ParameterError(f"commodity {ci} has identical origin and destination '{com.origin}'")
        for edge_path in nx.all_simple_edge_paths(graph, com.origin, com.destination):
            idxs = tuple(int(k) for (_, _, k) in edge_path)
            paths.append(Path(_path_id(ci, [edges[i].id for i in idxs]), ci, idxs))
            found += 1
            if len(paths) > max_paths:
                raise ParameterError(f"instance has more than {max_paths} simple paths")
        if found == 0:
            raise ParameterError(
                f"commodity {ci} ({com.origin}->{com.destination}) has no connecting path"
            )
    return tuple(paths)


@dataclass(frozen=True, eq=False)
class RoutingProblem:
    vertices: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    commodities: Tuple[Commodity, ...]
    paths: Tuple[Path, ...]
    name: str = "instance"
    incidence: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        known = set(self.vertices)
        seen = set()
        for e in self.edges:
            if e.id in seen:
                raise ParameterError(f"duplicate edge id '{e.id}'")
            seen.add(e.id)
            for node in (e.tail, e.head):
                if node not in known:
                    raise ParameterError(f"edge '{e.id}' references unknown node '{node}'")
        for ci, c in enumerate(self.commodities):
            if c.demand < 0:
                raise ParameterError(f"commodity {ci} has negative demand {c.demand}")
        total = sum(c.demand for c in self.commodities)
        if self.commodities and abs(total - 1.0) > settings.EPS_FEAS:
            raise ParameterError(f"commodity demands sum to {total!r}, expected 1")

        incidence = np.zeros((len(self.edges), len(self.paths)))
        for pi, p in enumerate(self.paths):
            if not 0 <= p.commodity < len(self.commodities):
                raise ParameterError(f"path '{p.id}' references unknown commodity {p.commodity}")
            if len(set(p.edges)) != len(p.edges):
                raise ParameterError(f"path '{p.id}' repeats an edge")
            nodes = [self.edges[p.edges[0]].tail] if p.edges else []
            for ei in p.edges:
                if not 0 <= ei < len(self.edges):
                    raise ParameterError(f"path '{p.id}' references unknown edge {ei}")
                if self.edges[ei].tail != nodes[-1]:
                    raise ParameterError(f"path '{p.id}' is not contiguous")
                nodes.append(self.edges[ei].head)
                incidence[ei, pi] = 1.0
            if len(set(nodes)) != len(nodes):
                raise ParameterError(f"path '{p.id}' is not simple")
            com = self.commodities[p.commodity]
            if nodes and (nodes[0] != com.origin or nodes[-1] != com.destination):
                raise ParameterError(f"path '{p.id}' does not connect its commodity")
        for ci in range(len(self.commodities)):
            if not any(p.commodity == ci for p in self.paths):
                raise ParameterError(f"commodity {ci} has no connecting path")
        incidence.setflags(write=False)
        object.__setattr__(self, "incidence", incidence)

    @classmethod
    def build(
        cls,
        vertices: Iterable[str],
        edges: Iterable[Edge],
        commodities: Iterable[Commodity],
        name: str = "instance",
        max_paths: Optional[int] = None,
    ) -> "RoutingProblem":
        """Drop zero-demand commodities, enumerate simple paths, validate."""
        vertices = tuple(vertices)
        edges = tuple(edges)
        kept = []
        for ci, c in enumerate(commodities):
            if c.demand == 0.0:
                logger.warning("dropping zero-demand commodity %d (%s->%s)", ci, c.origin, c.destination)
                continue
            kept.append(c)
        known = set(vertices)
        for c in kept:
            for node in (c.origin, c.destination):
                if node not in known:
                    raise ParameterError(f"commodity references unknown node '{node}'")
        paths = enumerate_paths(vertices, edges, kept, max_paths or settings.MAX_PATHS)
        return cls(vertices, edges, tuple(kept), paths, name)

    # lookups
    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    def edge_index(self, edge_id: str) -> int:
        for i, e in enumerate(self.edges):
            if e.id == edge_id:
                return i
        raise PathLookupError(f"unknown edge id '{edge_id}'")

    def path_index(self, path_id: str) -> int:
        for i, p in enumerate(self.paths):
            if p.id == path_id:
                return i
        raise PathLookupError(f"unknown path id '{path_id}'")

    def commodity_paths(self, commodity: int) -> np.ndarray:
        return np.array([i for i, p in enumerate(self.paths) if p.commodity == commodity], dtype=int)

    @property
    def latencies(self) -> Tuple[LatencyFunction, ...]:
        return tuple(e.latency for e in self.edges)

    @property
    def is_parallel(self) -> bool:
        """Single commodity whose paths are the single edges from origin to destination."""
        if len(self.commodities) != 1:
            return False
        return len(self.paths) == len(self.edges) and all(len(p.edges) == 1 for p in self.paths)

    # flows
    def flow(self, path_flows: Sequence[float]) -> "Flow":
        return Flow(self, np.asarray(path_flows, dtype=float))

    def flow_from_mapping(self, path_flows: Mapping[str, float]) -> "Flow":
        arr = np.zeros(self.n_paths)
        for pid, mass in path_flows.items():
            arr[self.path_index(pid)] = mass
        return Flow(self, arr)

    def check_feasible(self, flow: "Flow", tol: Optional[float] = None) -> None:
        tol = settings.EPS_FEAS if tol is None else tol
        if flow.problem is not self or flow.path_flows.shape != (self.n_paths,):
            raise FeasibilityError("flow does not belong to this problem")
        for ci, c in enumerate(self.commodities):
            mass = float(flow.path_flows[self.commodity_paths(ci)].sum())
            if abs(mass - c.demand) > tol:
                raise FeasibilityError(
                    f"commodity {ci} ({c.origin}->{c.destination}) carries {mass!r}, demand {c.demand!r}",
                    commodity=ci,
                )
        edge_flows = flow.edge_flows
        for ei, e in enumerate(self.edges):
            if edge_flows[ei] > 1.0 + tol:
                raise FeasibilityError(f"edge '{e.id}' carries {edge_flows[ei]!r} > 1", edge=e.id)

    def is_feasible(self, flow: "Flow", tol: Optional[float] = None) -> bool:
        try:
            self.check_feasible(flow, tol)
        except FeasibilityError:
            return False
        return True


@dataclass(frozen=True, eq=False)
class Flow:
    """Path masses; edge masses are derived on every access."""

    problem: RoutingProblem
    path_flows: np.ndarray

    def __post_init__(self):
        arr = np.array(self.path_flows, dtype=float)
        if arr.shape != (self.problem.n_paths,):
            raise FeasibilityError(f"expected {self.problem.n_paths} path masses, got shape {arr.shape}")
        tol = settings.EPS_FEAS
        bad = np.flatnonzero((arr < -tol) | (arr > 1.0 + tol) | ~np.isfinite(arr))
        if bad.size:
            p = self.problem.paths[bad[0]]
            raise FeasibilityError(f"path '{p.id}' has mass {arr[bad[0]]!r} outside [0, 1]")
        arr = np.clip(arr, 0.0, 1.0)
        arr.setflags(write=False)
        object.__setattr__(self, "path_flows", arr)

    @property
    def edge_flows(self) -> np.ndarray:
        return self.problem.incidence @ self.path_flows

    @property
    def mass(self) -> float:
        return float(self.path_flows.sum())

    def scaled(self, gamma: float) -> "Flow":
        return Flow(self.problem, gamma * self.path_flows)

    def as_dict(self) -> Dict[str, float]:
        return {p.id: float(m) for p, m in zip(self.problem.paths, self.path_flows)}

    def edge_dict(self) -> Dict[str, float]:
        return {e.id: float(m) for e, m in zip(self.problem.edges, self.edge_flows)}


def total_latency(problem: RoutingProblem, flow: Flow, check: bool = True) -> float:
    """Sum over edges of f_e * l_e(f_e)."""
    if check:
        problem.check_feasible(flow)
    x = flow.edge_flows
    return float(sum(x[i] * e.latency.value(float(x[i])) for i, e in enumerate(problem.edges)))


def parallel_network(
    latencies: Sequence[LatencyFunction],
    name: str = "parallel",
    origin: str = "o",
    destination: str = "d",
) -> RoutingProblem:
    """Single commodity of unit demand over parallel links e1..en."""
    edges = [Edge(f"e{i + 1}", origin, destination, lat) for i, lat in enumerate(latencies)]
    return RoutingProblem.build((origin, destination), edges, [Commodity(origin, destination, 1.0)], name)
