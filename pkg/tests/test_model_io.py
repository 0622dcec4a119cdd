import json

import pytest

from npnconf.model_io import (ModelFormatError, ModelValidationError,
                              dumps_model, loads_model)
from npnconf.multiset import Multiset

from conftest import FIXTURES


def fixture_doc():
    return json.loads((FIXTURES / "assistant_model.json").read_text())


def test_load_fixture(assistant_model):
    np = assistant_model
    assert set(np.agents) == {"r1", "r2"}
    assert np.system_activity == {"s_a": "a", "s_b": "b", "s_c": "c"}
    assert np.system_sync == {"s_a": "s1", "s_c": "s2"}
    assert np.initial_marking.tokens_at("s_p0")[0].inner == Multiset(["c_i"])


def test_dump_load_roundtrip(assistant_model):
    data = dumps_model(assistant_model)
    again = loads_model(data)
    assert dumps_model(again) == data


def test_malformed_json_rejected():
    with pytest.raises(ModelFormatError) as exc:
        loads_model(b'{"schema": "npnet/1",')
    assert "line" in str(exc.value)


def test_wrong_schema_rejected():
    with pytest.raises(ModelFormatError):
        loads_model(json.dumps({"schema": "npnet/0"}))


def test_overlapping_id_spaces_fail_validation():
    doc = fixture_doc()
    # give the system net a place that reuses an element-net place id
    doc["system_net"]["places"].append(
        {"id": "c_i", "kind": "net", "type": ["customer"]})
    with pytest.raises(ModelValidationError) as exc:
        loads_model(json.dumps(doc))
    assert any("used by both" in v for v in exc.value.violations)


def test_unknown_element_reference_fails_validation():
    doc = fixture_doc()
    doc["agents"]["r3"] = "ghost"
    with pytest.raises(ModelValidationError) as exc:
        loads_model(json.dumps(doc))
    assert any("unknown class" in v for v in exc.value.violations)


def test_non_conservative_model_fails_validation():
    doc = fixture_doc()
    for arc in doc["system_net"]["arcs"]:
        if arc["from"] == "s_b":
            arc["expr"] = "x + x"
    with pytest.raises(ModelValidationError) as exc:
        loads_model(json.dumps(doc))
    assert any("net variables" in v for v in exc.value.violations)


def test_validation_can_be_deferred():
    doc = fixture_doc()
    doc["agents"]["r3"] = "ghost"
    np = loads_model(json.dumps(doc), validate=False)
    from npnconf.nested import validate_nested_net
    assert any("unknown class" in v for v in validate_nested_net(np))


def test_conflicting_variable_types_rejected():
    doc = fixture_doc()
    doc["system_net"]["transitions"][0]["variables"] = {"x": "other"}
    with pytest.raises(ModelFormatError) as exc:
        loads_model(json.dumps(doc))
    assert "conflicting types" in str(exc.value)


def test_bad_arc_expression_rejected():
    doc = fixture_doc()
    doc["system_net"]["arcs"][0]["expr"] = "x ++"
    with pytest.raises(ModelFormatError):
        loads_model(json.dumps(doc))


def test_empty_domain_rejected():
    doc = fixture_doc()
    doc["domains"]["D"] = []
    with pytest.raises(ModelFormatError):
        loads_model(json.dumps(doc))


def test_marking_with_unknown_agent_fails_validation():
    doc = fixture_doc()
    doc["initial_marking"]["net_places"]["s_p0"].append(
        {"agent": "r9", "marking": {"c_i": 1}})
    with pytest.raises(ModelValidationError) as exc:
        loads_model(json.dumps(doc))
    assert any("unknown agent" in v for v in exc.value.violations)
