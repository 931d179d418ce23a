import json

import pytest

from tollsub.core.errors import InstanceParseError, ParameterError
from tollsub.models.sensitivity import SensitivityModel
from tollsub.repository.instance import load_instance, parse_instance, serialize_instance
from tollsub.usecase.incentives import MarginalCost
from tollsub.usecase.poa import pigou_instance


def document(**overrides):
    doc = {
        "name": "pigou",
        "nodes": ["o", "d"],
        "edges": [
            {"id": "e1", "tail": "o", "head": "d", "coeffs": [0.0, 1.0]},
            {"id": "e2", "tail": "o", "head": "d", "coeffs": [1.0]},
        ],
        "commodities": [{"origin": "o", "destination": "d", "demand": 1.0}],
    }
    doc.update(overrides)
    return json.dumps(doc)


def diagnostic_types(exc_info):
    return {d["type"] for d in exc_info.value.diagnostics}


def test_parse_minimal_document_defaults_to_homogeneous():
    instance = parse_instance(document())
    assert instance.name == "pigou"
    assert instance.problem.n_paths == 2
    assert instance.sensitivity.is_homogeneous
    assert all(t.is_zero() for t in instance.incentives)


def test_negative_coefficient_diagnostic():
    edges = [{"id": "e1", "tail": "o", "head": "d", "coeffs": [0.0, -1.0]}]
    with pytest.raises(InstanceParseError) as exc_info:
        parse_instance(document(edges=edges))
    assert "negative_coefficient" in diagnostic_types(exc_info)
    assert exc_info.value.diagnostics[0]["loc"] == ["edges", 0, "coeffs"]
    assert exc_info.value.exit_code == 2


def test_sensitivity_mass_mismatch_diagnostic():
    sensitivity = {"bounds": [1.0, 2.0], "classes": [{"mass": 0.5, "s": 1.0}, {"mass": 0.4, "s": 2.0}]}
    with pytest.raises(InstanceParseError) as exc_info:
        parse_instance(document(sensitivity=sensitivity))
    assert "mass_mismatch" in diagnostic_types(exc_info)
    assert "masses sum" in str(exc_info.value)


def test_demand_mismatch_diagnostic():
    commodities = [{"origin": "o", "destination": "d", "demand": 0.7}]
    with pytest.raises(InstanceParseError) as exc_info:
        parse_instance(document(commodities=commodities))
    assert "demand_mismatch" in diagnostic_types(exc_info)


def test_dangling_node_diagnostic():
    edges = [{"id": "e1", "tail": "o", "head": "x", "coeffs": [1.0]}]
    with pytest.raises(InstanceParseError) as exc_info:
        parse_instance(document(edges=edges))
    assert "dangling_node" in diagnostic_types(exc_info)


def test_syntax_error_diagnostic():
    with pytest.raises(InstanceParseError) as exc_info:
        parse_instance("{not json", source="broken")
    assert "syntax" in diagnostic_types(exc_info)
    assert str(exc_info.value).startswith("broken:")


def test_unknown_field_is_rejected():
    with pytest.raises(InstanceParseError):
        parse_instance(document(colour="blue"))


def test_missing_file(tmp_path):
    with pytest.raises(InstanceParseError, match="nothing.json"):
        load_instance(tmp_path / "nothing.json")


def test_serialized_instance_keeps_incentives_and_population(tmp_path):
    population = SensitivityModel.two_class(1.0, 4.0, mass_lower=0.25)
    instance = pigou_instance(1, MarginalCost(), population)
    path = tmp_path / "pigou_mc.json"
    path.write_text(serialize_instance(instance), encoding="utf-8")

    loaded = load_instance(path)
    assert loaded.mechanism == "mc"
    assert [t.coefficients for t in loaded.incentives] == [t.coefficients for t in instance.incentives]
    assert loaded.sensitivity == instance.sensitivity
    assert loaded.name == "pigou_p1"


def test_untolled_serialization_has_no_incentives():
    text = serialize_instance(pigou_instance(2))
    assert "incentives" not in json.loads(text)


def test_sensitivity_model_validation():
    with pytest.raises(ParameterError, match="masses sum"):
        SensitivityModel.from_pairs([(0.5, 1.0), (0.6, 2.0)], (1.0, 2.0))
    with pytest.raises(ParameterError, match="outside bounds"):
        SensitivityModel.from_pairs([(1.0, 3.0)], (1.0, 2.0))
    model = SensitivityModel.from_pairs([(0.3, 1.0), (0.2, 2.0), (0.5, 1.0)], (1.0, 2.0))
    merged, groups = model.merged()
    assert groups == [[0, 2], [1]]
    assert merged.masses == pytest.approx([0.8, 0.2])
    assert model.heterogeneity == 0.5
