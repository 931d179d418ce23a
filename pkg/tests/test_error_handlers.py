from typing import List

import pytest
from pydantic import BaseModel, ValidationError, field_validator

from tollsub.core.error_handlers import instance_parse_error, normalize_validation_error


class EdgeDoc(BaseModel):
    id: str
    tail: str
    coeffs: List[float]

    @field_validator("coeffs")
    @classmethod
    def _non_negative(cls, v):
        if any(c < 0 for c in v):
            raise ValueError("negative latency coefficient")
        return v

    @field_validator("tail")
    @classmethod
    def _known(cls, v):
        if v == "nowhere":
            raise ValueError(f"unknown node '{v}'")
        return v


def errors_of(payload):
    with pytest.raises(ValidationError) as exc_info:
        EdgeDoc.model_validate(payload)
    return normalize_validation_error(exc_info.value)


def test_value_errors_get_domain_types():
    (err,) = errors_of({"id": "e1", "tail": "s", "coeffs": [1.0, -1.0]})
    assert err["type"] == "negative_coefficient"
    assert err["loc"] == ["coeffs"]
    assert err["msg"] == "negative latency coefficient"

    (err,) = errors_of({"id": "e1", "tail": "nowhere", "coeffs": [1.0]})
    assert err["type"] == "dangling_node"


def test_missing_and_syntax_errors():
    (err,) = errors_of({"id": "e1", "coeffs": [1.0]})
    assert err["type"] == "missing_field"
    assert err["loc"] == ["tail"]

    with pytest.raises(ValidationError) as exc_info:
        EdgeDoc.model_validate_json("{")
    (err,) = normalize_validation_error(exc_info.value)
    assert err["type"] == "syntax"


def test_long_inputs_are_truncated():
    (err,) = errors_of({"id": "e1", "tail": "s", "coeffs": {"k": "x" * 500}})
    assert isinstance(err["input"], str)
    assert len(err["input"]) <= 120


def test_parse_error_carries_source_and_diagnostics():
    with pytest.raises(ValidationError) as exc_info:
        EdgeDoc.model_validate({"id": "e1", "tail": "s", "coeffs": [-2.0]})
    error = instance_parse_error(exc_info.value, source="net.json")
    assert error.exit_code == 2
    assert error.message == "net.json: negative latency coefficient"
    assert "coeffs: negative latency coefficient" in str(error)
