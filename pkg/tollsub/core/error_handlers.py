from __future__ import annotations

from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from tollsub.core.errors import InstanceParseError

_VALUE_ERROR_PREFIX = "Value error, "
_NODE_FIELDS = {"tail", "head", "origin", "destination", "nodes"}


def _safe_serialize_ctx(ctx: Any) -> Optional[Dict[str, Any]]:
    if ctx is None:
        return None
    if isinstance(ctx, dict):
        return {
            k: (v if isinstance(v, (str, int, float, bool, type(None))) else str(v))
            for k, v in ctx.items()
        }
    return {"detail": str(ctx)}


def _safe_input(input_val: Any) -> Any:
    if input_val is None:
        return None
    if isinstance(input_val, (str, int, float, bool)):
        return input_val
    if isinstance(input_val, (bytes, bytearray)):
        return input_val.decode("utf-8", errors="ignore")
    text = str(input_val)
    # whole documents end up here on syntax errors
    return text if len(text) <= 120 else text[:117] + "..."


def _field_from_loc(loc: List[Any]) -> Optional[str]:
    for p in reversed(loc):
        if not isinstance(p, int):
            return str(p)
    return None


def _contains(text: str, *needles: str) -> bool:
    t = text.lower()
    return any(n.lower() in t for n in needles)


def _map_value_error(field: Optional[str], raw_msg: str) -> str:
    if _contains(raw_msg, "negative latency coefficient") or field == "coeffs":
        return "negative_coefficient"
    if _contains(raw_msg, "masses sum") or field in {"mass", "classes"}:
        return "mass_mismatch"
    if _contains(raw_msg, "demands sum") or field == "demand":
        return "demand_mismatch"
    if _contains(raw_msg, "unknown node") or field in _NODE_FIELDS:
        return "dangling_node"
    if _contains(raw_msg, "sensitivity", "bounds"):
        return "sensitivity_bounds"
    return "invalid_input"


def _normalize_error(e: dict) -> dict:
    loc = list(e.get("loc", []))
    raw_type = e.get("type", "") or ""
    raw_msg = e.get("msg", "") or ""
    field = _field_from_loc(loc)

    # default passthrough
    typ = raw_type if raw_type else "invalid_input"
    msg = raw_msg if raw_msg else "Invalid input."

    if raw_type == "json_invalid":
        typ = "syntax"
    elif raw_type.startswith("value_error") or raw_type == "assertion_error":
        msg = msg[len(_VALUE_ERROR_PREFIX):] if msg.startswith(_VALUE_ERROR_PREFIX) else msg
        typ = _map_value_error(field, msg)
    elif raw_type == "missing":
        typ = "missing_field"

    return {
        "type": typ,
        "loc": loc or ["document"],
        "msg": msg,
        "input": _safe_input(e.get("input")),
        "ctx": _safe_serialize_ctx(e.get("ctx")),
    }


def normalize_validation_error(exc: ValidationError) -> List[dict]:
    return [_normalize_error(e) for e in exc.errors()]


def instance_parse_error(exc: ValidationError, source: str = "instance") -> InstanceParseError:
    """Wrap a pydantic ValidationError into a located InstanceParseError."""
    diagnostics = normalize_validation_error(exc)
    first = diagnostics[0]["msg"] if diagnostics else "invalid document"
    return InstanceParseError(f"{source}: {first}", diagnostics=diagnostics)
