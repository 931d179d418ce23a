from typing import Annotated, List, Optional, Tuple

from pydantic import AfterValidator, BaseModel, ConfigDict, Field, model_validator

from tollsub.core.config import settings

FEAS_TOL = settings.EPS_FEAS


def _non_negative_coeffs(v: List[float]) -> List[float]:
    for i, c in enumerate(v):
        if c < 0:
            raise ValueError(f"negative latency coefficient alpha_{i} = {c:g}")
    return v


def _non_empty_name(v: str) -> str:
    v = v.strip()
    if not v:
        raise ValueError("identifier must not be empty")
    return v


Identifier = Annotated[str, AfterValidator(_non_empty_name)]
LatencyCoeffs = Annotated[List[float], Field(min_length=1), AfterValidator(_non_negative_coeffs)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EdgeIn(_Strict):
    id: Identifier
    tail: Identifier
    head: Identifier
    coeffs: LatencyCoeffs


class CommodityIn(_Strict):
    origin: Identifier
    destination: Identifier
    demand: float = Field(ge=0)


class SensitivityClassIn(_Strict):
    mass: float = Field(ge=0)
    s: float = Field(ge=0)


class SensitivityIn(_Strict):
    bounds: Tuple[float, float] = (1.0, 1.0)
    classes: List[SensitivityClassIn] = Field(default_factory=lambda: [SensitivityClassIn(mass=1.0, s=1.0)])

    @model_validator(mode="after")
    def _check(self):
        s_lower, s_upper = self.bounds
        if not (0 < s_lower <= s_upper):
            raise ValueError(f"sensitivity bounds must satisfy 0 < sL <= sU, got [{s_lower:g}, {s_upper:g}]")
        if not self.classes:
            raise ValueError("sensitivity needs at least one class")
        total = sum(c.mass for c in self.classes)
        if abs(total - 1.0) > FEAS_TOL:
            raise ValueError(f"sensitivity masses sum ≠ 1 (got {total:g})")
        for c in self.classes:
            if not (s_lower - FEAS_TOL <= c.s <= s_upper + FEAS_TOL):
                raise ValueError(f"sensitivity {c.s:g} outside bounds [{s_lower:g}, {s_upper:g}]")
        return self


class IncentiveIn(_Strict):
    edge: Identifier
    coeffs: List[float] = Field(min_length=1)


class InstanceDocument(_Strict):
    """On-disk instance file. See docs/instance_format.md."""

    name: Optional[str] = None
    nodes: List[Identifier] = Field(min_length=1)
    edges: List[EdgeIn]
    commodities: List[CommodityIn]
    sensitivity: SensitivityIn = Field(default_factory=SensitivityIn)
    mechanism: Optional[str] = None
    incentives: Optional[List[IncentiveIn]] = None

    @model_validator(mode="after")
    def _check_references(self):
        known = set(self.nodes)
        if len(known) != len(self.nodes):
            raise ValueError("duplicate node identifier")
        edge_ids = set()
        for e in self.edges:
            if e.id in edge_ids:
                raise ValueError(f"duplicate edge id '{e.id}'")
            edge_ids.add(e.id)
            for node in (e.tail, e.head):
                if node not in known:
                    raise ValueError(f"edge '{e.id}' references unknown node '{node}'")
        for c in self.commodities:
            for node in (c.origin, c.destination):
                if node not in known:
                    raise ValueError(f"commodity references unknown node '{node}'")
        total = sum(c.demand for c in self.commodities)
        if total > 0 and abs(total - 1.0) > FEAS_TOL:
            raise ValueError(f"commodity demands sum to {total:g}, expected 1")
        if self.incentives is not None:
            seen = set()
            for t in self.incentives:
                if t.edge not in edge_ids:
                    raise ValueError(f"incentive references unknown edge '{t.edge}'")
                if t.edge in seen:
                    raise ValueError(f"duplicate incentive for edge '{t.edge}'")
                seen.add(t.edge)
        return self
