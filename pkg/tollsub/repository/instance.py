import logging
from pathlib import Path
from typing import Union

from pydantic import ValidationError

from tollsub.core.error_handlers import instance_parse_error
from tollsub.core.errors import InstanceParseError, ParameterError
from tollsub.models.game import GameInstance
from tollsub.models.latency import IncentiveFunction, LatencyFunction
from tollsub.models.network import Commodity, Edge, RoutingProblem
from tollsub.models.sensitivity import SensitivityClass, SensitivityModel
from tollsub.schemas.instance import (
    CommodityIn,
    EdgeIn,
    IncentiveIn,
    InstanceDocument,
    SensitivityClassIn,
    SensitivityIn,
)

logger = logging.getLogger(__name__)


def _document_error(source: str, exc: Exception, loc=("document",)) -> InstanceParseError:
    return InstanceParseError(
        f"{source}: {exc}",
        diagnostics=[{"type": "invalid_input", "loc": list(loc), "msg": str(exc), "input": None, "ctx": None}],
    )


def to_instance(doc: InstanceDocument, source: str = "instance") -> GameInstance:
    try:
        edges = [Edge(e.id, e.tail, e.head, LatencyFunction(tuple(e.coeffs))) for e in doc.edges]
        commodities = [Commodity(c.origin, c.destination, c.demand) for c in doc.commodities]
        problem = RoutingProblem.build(doc.nodes, edges, commodities, name=doc.name or source)
        sensitivity = SensitivityModel(
            tuple(SensitivityClass(c.mass, c.s) for c in doc.sensitivity.classes),
            doc.sensitivity.bounds,
        )
    except ParameterError as exc:
        raise _document_error(source, exc) from exc

    instance = GameInstance(problem, sensitivity)
    if doc.incentives:
        by_edge = {t.edge: t.coeffs for t in doc.incentives}
        incentives = [IncentiveFunction(tuple(by_edge.get(e.id, (0.0,)))) for e in problem.edges]
        instance = instance.with_incentives(incentives, doc.mechanism or "custom")
    return instance


def parse_instance(text: Union[str, bytes], source: str = "instance") -> GameInstance:
    """Validate an instance document and build the GameInstance it describes."""
    try:
        doc = InstanceDocument.model_validate_json(text)
    except ValidationError as exc:
        raise instance_parse_error(exc, source) from exc
    instance = to_instance(doc, source)
    logger.debug(
        "parsed %s: %d edges, %d commodities, %d paths, %d classes",
        source,
        instance.problem.n_edges,
        len(instance.problem.commodities),
        instance.problem.n_paths,
        len(instance.sensitivity.classes),
    )
    return instance


def to_document(instance: GameInstance) -> InstanceDocument:
    problem = instance.problem
    doc = InstanceDocument(
        name=problem.name,
        nodes=list(problem.vertices),
        edges=[
            EdgeIn(id=e.id, tail=e.tail, head=e.head, coeffs=list(e.latency.coefficients))
            for e in problem.edges
        ],
        commodities=[
            CommodityIn(origin=c.origin, destination=c.destination, demand=c.demand)
            for c in problem.commodities
        ],
        sensitivity=SensitivityIn(
            bounds=instance.sensitivity.bounds,
            classes=[SensitivityClassIn(mass=c.mass, s=c.s) for c in instance.sensitivity.classes],
        ),
    )
    if not all(t.is_zero() for t in instance.incentives):
        doc.mechanism = instance.mechanism
        doc.incentives = [
            IncentiveIn(edge=e.id, coeffs=list(t.coefficients))
            for e, t in zip(problem.edges, instance.incentives)
        ]
    return doc


def serialize_instance(instance: GameInstance) -> str:
    return to_document(instance).model_dump_json(indent=2, exclude_none=True)


def load_instance(path: Union[str, Path]) -> GameInstance:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise _document_error(str(path), exc, loc=("file",)) from exc
    return parse_instance(text, source=path.stem)
