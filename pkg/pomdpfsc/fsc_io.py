"""JSON and DOT serialization of controllers."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from .errors import ConfigurationError, ModelParseError, SchemaError
from .fsc import UNDEFINED, Fsc
from .jinja_env import render_template
from .models import Pomdp
from .specs import DeltaEntry, FscDocument, GammaEntry, validate_fsc_document

logger = logging.getLogger(__name__)


def fsc_to_document(fsc: Fsc, *, pomdp: Optional[Pomdp] = None) -> FscDocument:
    """Document listing the defined rows of ``fsc``.

    With ``pomdp``, update rows for posteriors that can never follow their
    prior observation are left out.
    """
    z_count = fsc.num_obs
    gamma: List[GammaEntry] = []
    delta: List[DeltaEntry] = []
    for n in range(fsc.num_nodes):
        for z in range(z_count):
            a = fsc.gamma[n][z]
            if a != UNDEFINED:
                gamma.append({"node": n, "obs": z, "action": a})
            possible = pomdp.posteriors(z) if pomdp is not None else range(z_count)
            for z2 in sorted(possible):
                m = fsc.delta[n][z][z2]
                if m != UNDEFINED:
                    delta.append({"node": n, "obs": z, "post_obs": z2, "next": m})
    doc: FscDocument = {
        "nodes": fsc.num_nodes,
        "initial": fsc.initial,
        "num_obs": z_count,
        "posterior_unaware": fsc.posterior_unaware,
        "gamma": gamma,
        "delta": delta,
    }
    if fsc.memory_model is not None:
        doc["memory_model"] = list(fsc.memory_model)
    if fsc.cutoff is not None and fsc.explored is not None:
        doc["explored"] = fsc.explored
        doc["cutoff"] = fsc_to_document(fsc.cutoff, pomdp=pomdp)
    return doc


def export_fsc(fsc: Fsc, *, pomdp: Optional[Pomdp] = None, indent: Optional[int] = None) -> bytes:
    return json.dumps(fsc_to_document(fsc, pomdp=pomdp), indent=indent).encode("utf-8")


def fsc_from_document(doc: Any) -> Fsc:
    problems = validate_fsc_document(doc)
    if problems:
        raise SchemaError(problems)
    k, z_count = doc["nodes"], doc["num_obs"]
    unaware = bool(doc.get("posterior_unaware", False))
    gamma = [[UNDEFINED] * z_count for _ in range(k)]
    delta = [[[UNDEFINED] * z_count for _ in range(z_count)] for _ in range(k)]
    for row in doc["gamma"]:
        gamma[row["node"]][row["obs"]] = row["action"]
    for row in doc["delta"]:
        delta[row["node"]][row["obs"]][row["post_obs"]] = row["next"]
    cutoff = fsc_from_document(doc["cutoff"]) if "cutoff" in doc else None
    mu = doc.get("memory_model")
    try:
        return Fsc(
            num_nodes=k,
            initial=doc["initial"],
            gamma=tuple(tuple(r) for r in gamma),
            delta=tuple(tuple(tuple(r) for r in rows) for rows in delta),
            posterior_unaware=unaware,
            memory_model=None if mu is None else tuple(mu),
            explored=doc.get("explored"),
            cutoff=cutoff,
        )
    except ConfigurationError as exc:
        raise SchemaError([str(exc)]) from exc


def import_fsc(data: Union[bytes, str]) -> Fsc:
    """Parse the JSON controller format; schema problems raise :class:`SchemaError`."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelParseError(f"controller is not UTF-8: {exc.reason}", line=1, column=exc.start + 1) from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelParseError(exc.msg, line=exc.lineno, column=exc.colno, offset=exc.pos) from exc
    return fsc_from_document(doc)


def _name(labels: Optional[Tuple[str, ...]], i: int) -> str:
    if labels is not None and 0 <= i < len(labels):
        return labels[i]
    return str(i)


def export_dot(
    fsc: Fsc,
    *,
    pomdp: Optional[Pomdp] = None,
    node_labels: Optional[Mapping[int, str]] = None,
    name: str = "fsc",
) -> str:
    """DOT digraph of ``fsc``; edges are labelled ``z/action, z2->next``.

    ``node_labels`` overrides vertex captions (belief-based controllers pass
    the belief of each explored node).
    """
    obs_labels = pomdp.obs_labels if pomdp is not None else None
    act_labels = pomdp.actions if pomdp is not None else None
    explored = fsc.explored or 0
    nodes = []
    for n in range(fsc.num_nodes):
        if fsc.cutoff is not None and n < explored:
            kind, caption = "belief", f"b{n}"
        elif fsc.cutoff is not None:
            kind, caption = "cutoff", f"n{n - explored}"
        else:
            kind, caption = "node", str(n)
        if node_labels is not None and n in node_labels:
            caption = node_labels[n]
        nodes.append({"id": n, "label": caption, "kind": kind})
    grouped: Dict[Tuple[int, int], List[str]] = defaultdict(list)
    for n in range(fsc.num_nodes):
        for z in range(fsc.num_obs):
            a = fsc.action(n, z)
            if a == UNDEFINED:
                continue
            for z2 in range(fsc.num_obs):
                m = fsc.update(n, z, z2)
                if m == UNDEFINED:
                    continue
                if pomdp is not None and z2 not in pomdp.posteriors(z):
                    continue
                grouped[(n, m)].append(f"{_name(obs_labels, z)}/{_name(act_labels, a)}, {_name(obs_labels, z2)}->{m}")
    edges = [{"src": src, "dst": dst, "label": "\\n".join(labels)} for (src, dst), labels in sorted(grouped.items())]
    logger.debug("DOT export: %d nodes, %d edges", len(nodes), len(edges))
    return render_template("fsc.dot.j2", {"name": name, "initial": fsc.initial, "nodes": nodes, "edges": edges})


__all__ = ["fsc_to_document", "fsc_from_document", "export_fsc", "import_fsc", "export_dot"]
