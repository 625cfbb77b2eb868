"""JSON model format: parsing with exact decimal arithmetic, and emission."""

from __future__ import annotations

import json
import logging
from typing import Any, Dict, List, Union

import sympy as sp

from .errors import ModelParseError, ModelValidationError, SchemaError
from .models import MASS_TOLERANCE, Distribution, Pomdp, make_pomdp, validate
from .specs import ModelDocument, exact_probability, validate_model_document

logger = logging.getLogger(__name__)

# Rows already summing to 1 within float resolution are kept verbatim so that
# emitted models parse back to identical floats.
_KEEP_SLACK = sp.Rational(1, 10**12)


def _decode(text: Union[bytes, str]) -> Any:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelParseError(f"model is not UTF-8: {exc.reason}", line=1, column=exc.start + 1, offset=exc.start)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(exc.msg, line=exc.lineno, column=exc.colno, offset=exc.pos) from exc


def _normalized_row(entries: List[Dict[str, Any]], where: str, violations: List[str]) -> Dict[int, float]:
    exact: Dict[int, sp.Rational] = {}
    for entry in entries:
        exact[entry["state"]] = exact_probability(entry["prob"])
    total = sum(exact.values(), sp.Integer(0))
    if abs(total - 1) > sp.Rational(MASS_TOLERANCE):
        violations.append(f"{where}: mass {float(total):.12g} != 1")
        return {}
    if abs(total - 1) > _KEEP_SLACK:
        exact = {s: q / total for s, q in exact.items()}
    return {s: float(q) for s, q in exact.items()}


def model_from_document(doc: ModelDocument) -> Pomdp:
    """Build a :class:`Pomdp` from an already decoded document."""
    problems = validate_model_document(doc)
    if problems:
        raise SchemaError(problems)
    actions = list(doc["actions"])
    action_index = {name: i for i, name in enumerate(actions)}
    observations = list(doc["observations"])
    target_obs = observations.index(doc["target_obs"])

    problems = []
    violations: List[str] = []
    transitions: Dict[tuple, Distribution] = {}
    for i, row in enumerate(doc["transitions"]):
        key = (row["from"], action_index[row["action"]])
        where = f"transitions[{i}]"
        if key in transitions:
            problems.append(f"{where}: duplicate row for state {key[0]} and action {row['action']!r}")
            continue
        states = [e["state"] for e in row["to"]]
        if len(set(states)) != len(states):
            problems.append(f"{where}.to: duplicate successor state")
            continue
        probs = _normalized_row(row["to"], where, violations)
        if probs:
            transitions[key] = Distribution.from_mapping(probs)

    rewards = None
    if "rewards" in doc:
        rewards = {}
        for i, row in enumerate(doc["rewards"]):
            key = (row["from"], action_index[row["action"]])
            if key in rewards:
                problems.append(f"rewards[{i}]: duplicate reward for state {key[0]} and action {row['action']!r}")
                continue
            rewards[key] = float(exact_probability(row["value"]))
    if problems:
        raise SchemaError(problems)
    if violations:
        raise ModelValidationError(violations)

    pomdp = make_pomdp(
        num_states=doc["states"],
        initial=doc["initial"],
        actions=actions,
        obs_labels=observations,
        obs_of=doc["obs"],
        target_obs=target_obs,
        transitions=transitions,
        rewards=rewards,
    )
    violations = validate(pomdp)
    if violations:
        raise ModelValidationError(violations)
    logger.debug("parsed model: %d states, %d observations", pomdp.num_states, pomdp.num_obs)
    return pomdp


def parse_model(text: Union[bytes, str]) -> Pomdp:
    """Parse the JSON model format.

    Raises :class:`ModelParseError` for malformed JSON, :class:`SchemaError`
    for documents that do not follow the schema and
    :class:`ModelValidationError` when the model breaks an invariant.
    """
    return model_from_document(_decode(text))


def model_to_document(pomdp: Pomdp) -> ModelDocument:
    mdp = pomdp.mdp
    doc: ModelDocument = {
        "states": mdp.num_states,
        "initial": mdp.initial,
        "actions": list(mdp.actions),
        "observations": list(pomdp.obs_labels),
        "obs": list(pomdp.obs_of),
        "target_obs": pomdp.obs_labels[pomdp.target_obs],
        "transitions": [
            {
                "from": s,
                "action": mdp.actions[a],
                "to": [{"state": t, "prob": p} for t, p in mdp.transitions[(s, a)]],
            }
            for s, a in sorted(mdp.transitions)
        ],
    }
    if mdp.rewards is not None:
        doc["rewards"] = [
            {"from": s, "action": mdp.actions[a], "value": float(r)} for (s, a), r in sorted(mdp.rewards.items())
        ]
    return doc


def emit_model(pomdp: Pomdp, *, indent: int = 1) -> bytes:
    """Serialize ``pomdp`` to the JSON model format (UTF-8)."""
    return json.dumps(model_to_document(pomdp), indent=indent).encode("utf-8")
