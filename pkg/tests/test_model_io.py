import json

import pytest

from pomdpfsc import ModelParseError, ModelValidationError, SchemaError, emit_model, gen_paper_micro, parse_model
from pomdpfsc.specs import exact_probability, validate_model_document


def _doc(**overrides):
    doc = {
        "states": 3,
        "initial": 0,
        "actions": ["go", "wait"],
        "observations": ["start", "target"],
        "obs": [0, 0, 1],
        "target_obs": "target",
        "transitions": [
            {"from": 0, "action": "go", "to": [{"state": 1, "prob": "0.3"}, {"state": 2, "prob": "0.7"}]},
            {"from": 0, "action": "wait", "to": [{"state": 0, "prob": 1}]},
            {"from": 1, "action": "go", "to": [{"state": 2, "prob": "1"}]},
            {"from": 1, "action": "wait", "to": [{"state": 1, "prob": "1"}]},
            {"from": 2, "action": "go", "to": [{"state": 2, "prob": "1"}]},
            {"from": 2, "action": "wait", "to": [{"state": 2, "prob": "1"}]},
        ],
        "rewards": [
            {"from": 0, "action": "go", "value": 1},
            {"from": 1, "action": "go", "value": "2.5"},
        ],
    }
    doc.update(overrides)
    return doc


def test_parse_model_builds_pomdp_with_exact_decimals():
    pomdp = parse_model(json.dumps(_doc()))

    assert pomdp.num_states == 3
    assert pomdp.target_obs == 1
    assert pomdp.mdp.distribution(0, 0).get(1) == 0.3
    assert pomdp.mdp.reward(1, 0) == 2.5
    assert pomdp.mdp.reward(1, 1) == 0.0


def test_parse_model_accepts_bytes():
    assert parse_model(json.dumps(_doc()).encode("utf-8")).num_obs == 2


def test_parse_model_renormalizes_rows_within_tolerance():
    doc = _doc()
    doc["transitions"][0]["to"] = [
        {"state": 1, "prob": "0.3333333333"},
        {"state": 2, "prob": "0.6666666666"},
    ]

    pomdp = parse_model(json.dumps(doc))

    assert pomdp.mdp.distribution(0, 0).mass() == pytest.approx(1.0, abs=1e-15)


def test_parse_model_reports_location_of_malformed_json():
    with pytest.raises(ModelParseError) as info:
        parse_model('{"states": 3,\n  "initial": }')

    assert info.value.line == 2
    assert info.value.column > 1


def test_parse_model_rejects_unknown_fields_and_bad_references():
    doc = _doc(extra=True, target_obs="goal")

    with pytest.raises(SchemaError) as info:
        parse_model(json.dumps(doc))

    assert any("Unknown model fields" in p for p in info.value.problems)


def test_schema_errors_name_the_field():
    doc = _doc()
    doc["transitions"][0]["action"] = "jump"
    doc["obs"] = [0, 0, 5]

    errors = validate_model_document(doc)

    assert any("transitions[0].action" in e for e in errors)
    assert any("obs[2]" in e for e in errors)


def test_parse_model_rejects_mass_defect():
    doc = _doc()
    doc["transitions"][0]["to"][1]["prob"] = "0.6"

    with pytest.raises(ModelValidationError, match="mass"):
        parse_model(json.dumps(doc))


def test_parse_model_rejects_duplicate_rows():
    doc = _doc()
    doc["transitions"].append(doc["transitions"][0])

    with pytest.raises(SchemaError, match="duplicate row"):
        parse_model(json.dumps(doc))


def test_parse_model_rejects_non_absorbing_target():
    doc = _doc()
    doc["transitions"][4]["to"] = [{"state": 0, "prob": "1"}]

    with pytest.raises(ModelValidationError, match="target not absorbing"):
        parse_model(json.dumps(doc))


def test_exact_probability_keeps_decimal_digits():
    assert exact_probability("0.1") * 10 == 1
    with pytest.raises(ValueError):
        exact_probability(True)


def test_emit_then_parse_preserves_built_in_model():
    pomdp = gen_paper_micro("fig4a")

    again = parse_model(emit_model(pomdp))

    assert again.mdp.transitions == pomdp.mdp.transitions
    assert again.mdp.rewards == pomdp.mdp.rewards
    assert again.obs_labels == pomdp.obs_labels
