from __future__ import annotations

from numbers import Real
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, TypedDict, Union

import sympy as sp

ProbabilityValue = Union[str, float, int]

SuccessorSpec = TypedDict("SuccessorSpec", {"state": int, "prob": ProbabilityValue})
TransitionSpec = TypedDict("TransitionSpec", {"from": int, "action": str, "to": List[SuccessorSpec]})
RewardSpec = TypedDict("RewardSpec", {"from": int, "action": str, "value": ProbabilityValue})


class ModelDocument(TypedDict, total=False):
    """Dictionary schema of the JSON model format.

    ``obs`` holds one observation index per state; ``target_obs`` names the
    observation whose states are the targets. Probabilities may be decimal
    strings (parsed exactly) or numbers. ``rewards`` is optional.
    """

    states: int
    initial: int
    actions: List[str]
    observations: List[str]
    obs: List[int]
    target_obs: str
    transitions: List[TransitionSpec]
    rewards: List[RewardSpec]


class GammaEntry(TypedDict):
    node: int
    obs: int
    action: int


class DeltaEntry(TypedDict):
    node: int
    obs: int
    post_obs: int
    next: int


class FscDocument(TypedDict, total=False):
    """Dictionary schema of the JSON controller format.

    ``gamma`` and ``delta`` list only the defined rows. ``cutoff`` nests the
    controller applied at frontier beliefs of a belief-based FSC whose first
    ``explored`` nodes are beliefs.
    """

    nodes: int
    initial: int
    num_obs: int
    posterior_unaware: bool
    memory_model: List[int]
    gamma: List[GammaEntry]
    delta: List[DeltaEntry]
    explored: int
    cutoff: "FscDocument"


MODEL_FIELDS = frozenset(ModelDocument.__annotations__)
MODEL_REQUIRED = ("states", "initial", "actions", "observations", "obs", "target_obs", "transitions")
FSC_FIELDS = frozenset(FscDocument.__annotations__)
FSC_REQUIRED = ("nodes", "initial", "num_obs", "gamma", "delta")


def _filtered_fields(
    d: Any,
    *,
    spec_name: str,
    allowed: frozenset,
    required: Sequence[str],
    prefix: str = "",
) -> Tuple[Optional[Dict[str, Any]], List[str]]:
    if not isinstance(d, Mapping):
        return None, [f"{prefix or spec_name} must be a JSON object"]
    errors: List[str] = []
    extra = set(d.keys()) - set(allowed)
    if extra:
        errors.append(f"Unknown {spec_name} fields: {sorted(extra)}")
    for key in required:
        if key not in d:
            errors.append(f"{spec_name} requires '{prefix}{key}'")
    return {k: v for k, v in d.items() if k in allowed}, errors


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def exact_probability(value: Any) -> sp.Rational:
    """Parse a probability exactly; decimal strings keep every digit."""
    if isinstance(value, bool):
        raise ValueError("booleans are not probabilities")
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty probability string")
        q = sp.Rational(text)
    elif isinstance(value, Real):
        q = sp.Rational(float(value))
    else:
        raise ValueError(f"expected a decimal string or a number, got {type(value).__name__}")
    if not q.is_finite:
        raise ValueError(f"{value!r} is not finite")
    return q


def _check_int(value: Any, field: str, *, low: int = 0, high: Optional[int] = None) -> List[str]:
    if not _is_int(value):
        return [f"{field} must be an integer"]
    if value < low or (high is not None and value >= high):
        bound = f"[{low}, {high})" if high is not None else f">= {low}"
        return [f"{field}={value} outside {bound}"]
    return []


def _check_labels(value: Any, field: str) -> List[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        return [f"{field} must be a list of strings"]
    if len(set(value)) != len(value):
        return [f"{field} contains duplicate labels"]
    return []


def validate_model_document(doc: Any) -> List[str]:
    """Validate a parsed JSON model document and return field-named errors."""
    mapping, errors = _filtered_fields(doc, spec_name="model", allowed=MODEL_FIELDS, required=MODEL_REQUIRED)
    if mapping is None or errors:
        return errors
    errors.extend(_check_int(mapping["states"], "states", low=1))
    errors.extend(_check_labels(mapping["actions"], "actions"))
    errors.extend(_check_labels(mapping["observations"], "observations"))
    if errors:
        return errors
    n = mapping["states"]
    actions = set(mapping["actions"])
    observations = mapping["observations"]
    errors.extend(_check_int(mapping["initial"], "initial", high=n))
    obs = mapping["obs"]
    if not isinstance(obs, list) or len(obs) != n:
        errors.append(f"obs must be a list of {n} observation indices")
    else:
        for i, z in enumerate(obs):
            errors.extend(_check_int(z, f"obs[{i}]", high=len(observations)))
    if mapping["target_obs"] not in observations:
        errors.append(f"target_obs={mapping['target_obs']!r} is not one of observations")

    transitions = mapping["transitions"]
    if not isinstance(transitions, list):
        return errors + ["transitions must be a list"]
    for i, row in enumerate(transitions):
        where = f"transitions[{i}]"
        row_map, row_errors = _filtered_fields(
            row, spec_name=where, allowed=frozenset(("from", "action", "to")), required=("from", "action", "to")
        )
        errors.extend(row_errors)
        if row_map is None or row_errors:
            continue
        errors.extend(_check_int(row_map["from"], f"{where}.from", high=n))
        if row_map["action"] not in actions:
            errors.append(f"{where}.action={row_map['action']!r} is not one of actions")
        succ = row_map["to"]
        if not isinstance(succ, list) or not succ:
            errors.append(f"{where}.to must be a non-empty list")
            continue
        for j, entry in enumerate(succ):
            ewhere = f"{where}.to[{j}]"
            e_map, e_errors = _filtered_fields(
                entry, spec_name=ewhere, allowed=frozenset(("state", "prob")), required=("state", "prob")
            )
            errors.extend(e_errors)
            if e_map is None or e_errors:
                continue
            errors.extend(_check_int(e_map["state"], f"{ewhere}.state", high=n))
            try:
                q = exact_probability(e_map["prob"])
            except (ValueError, TypeError, sp.SympifyError) as exc:
                errors.append(f"{ewhere}.prob: {exc}")
                continue
            if not 0 < q <= 1:
                errors.append(f"{ewhere}.prob={e_map['prob']!r} outside (0, 1]")

    rewards = mapping.get("rewards")
    if rewards is not None:
        if not isinstance(rewards, list):
            return errors + ["rewards must be a list"]
        for i, row in enumerate(rewards):
            where = f"rewards[{i}]"
            row_map, row_errors = _filtered_fields(
                row,
                spec_name=where,
                allowed=frozenset(("from", "action", "value")),
                required=("from", "action", "value"),
            )
            errors.extend(row_errors)
            if row_map is None or row_errors:
                continue
            errors.extend(_check_int(row_map["from"], f"{where}.from", high=n))
            if row_map["action"] not in actions:
                errors.append(f"{where}.action={row_map['action']!r} is not one of actions")
            try:
                value = exact_probability(row_map["value"])
            except (ValueError, TypeError, sp.SympifyError) as exc:
                errors.append(f"{where}.value: {exc}")
                continue
            if value < 0:
                errors.append(f"{where}.value must be non-negative")
    return errors


def validate_fsc_document(doc: Any, *, prefix: str = "") -> List[str]:
    """Validate a parsed JSON controller document and return field-named errors."""
    mapping, errors = _filtered_fields(doc, spec_name="fsc", allowed=FSC_FIELDS, required=FSC_REQUIRED, prefix=prefix)
    if mapping is None or errors:
        return errors
    errors.extend(_check_int(mapping["nodes"], f"{prefix}nodes", low=1))
    errors.extend(_check_int(mapping["num_obs"], f"{prefix}num_obs", low=1))
    if errors:
        return errors
    k = mapping["nodes"]
    z_count = mapping["num_obs"]
    errors.extend(_check_int(mapping["initial"], f"{prefix}initial", high=k))
    flag = mapping.get("posterior_unaware", False)
    if not isinstance(flag, bool):
        errors.append(f"{prefix}posterior_unaware must be a boolean")
    mu = mapping.get("memory_model")
    if mu is not None:
        if not isinstance(mu, list) or len(mu) != z_count:
            errors.append(f"{prefix}memory_model must list {z_count} node counts")
        else:
            for z, m in enumerate(mu):
                errors.extend(_check_int(m, f"{prefix}memory_model[{z}]", low=1, high=k + 1))
    gamma = mapping["gamma"]
    if not isinstance(gamma, list):
        errors.append(f"{prefix}gamma must be a list")
    else:
        for i, row in enumerate(gamma):
            where = f"{prefix}gamma[{i}]"
            if not isinstance(row, Mapping) or set(row) != {"node", "obs", "action"}:
                errors.append(f"{where} must have exactly the fields node, obs, action")
                continue
            errors.extend(_check_int(row["node"], f"{where}.node", high=k))
            errors.extend(_check_int(row["obs"], f"{where}.obs", high=z_count))
            errors.extend(_check_int(row["action"], f"{where}.action"))
    delta = mapping["delta"]
    if not isinstance(delta, list):
        errors.append(f"{prefix}delta must be a list")
    else:
        for i, row in enumerate(delta):
            where = f"{prefix}delta[{i}]"
            if not isinstance(row, Mapping) or set(row) != {"node", "obs", "post_obs", "next"}:
                errors.append(f"{where} must have exactly the fields node, obs, post_obs, next")
                continue
            errors.extend(_check_int(row["node"], f"{where}.node", high=k))
            errors.extend(_check_int(row["obs"], f"{where}.obs", high=z_count))
            errors.extend(_check_int(row["post_obs"], f"{where}.post_obs", high=z_count))
            errors.extend(_check_int(row["next"], f"{where}.next", high=k))
    explored = mapping.get("explored")
    cutoff = mapping.get("cutoff")
    if (explored is None) != (cutoff is None):
        errors.append(f"{prefix}explored and {prefix}cutoff must be given together")
    elif explored is not None:
        errors.extend(_check_int(explored, f"{prefix}explored", high=k + 1))
        errors.extend(validate_fsc_document(cutoff, prefix=f"{prefix}cutoff."))
    return errors
