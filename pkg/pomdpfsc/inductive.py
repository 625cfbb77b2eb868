"""Abstraction-refinement search over FSC families.

Subfamilies are kept on a LIFO worklist. Each one is abstracted and checked;
it is pruned when its optimistic bound cannot beat the incumbent, resolved
when the optimistic policy picks one option per hole (that member attains the
bound), and split otherwise. A search interrupted by its deadline returns the
unexplored subfamilies so it can be resumed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .abstraction import build_abstraction, candidate_assignment, check_abstraction, split
from .budget import Deadline, Stopwatch
from .formatting import json_safe
from .fsc import Fsc, evaluate
from .models import Pomdp, Specification
from .family import FamilySpace

logger = logging.getLogger(__name__)

IMPROVEMENT_EPS = 1e-9

TraceSink = Callable[[Dict[str, object]], None]


def improves(spec: Specification, candidate: float, incumbent: Optional[float]) -> bool:
    """``candidate`` beats ``incumbent`` by more than ``IMPROVEMENT_EPS`` (any value beats ``None``)."""
    if incumbent is None:
        return True
    if math.isnan(candidate):
        return False
    if spec.maximize:
        return candidate > incumbent + IMPROVEMENT_EPS
    return candidate < incumbent - IMPROVEMENT_EPS


@dataclass
class SearchStats:
    queries: int = 0
    splits: int = 0
    pruned: int = 0
    improved: int = 0
    queries_to_best: int = 0
    memory_history: List[Tuple[int, ...]] = field(default_factory=list)

    def as_dict(self) -> Dict[str, object]:
        return {
            "queries": self.queries,
            "splits": self.splits,
            "pruned": self.pruned,
            "improved": self.improved,
            "queries_to_best": self.queries_to_best,
            "memory_history": [list(mu) for mu in self.memory_history],
        }


@dataclass
class SearchResult:
    best: Optional[Fsc]
    value: Optional[float]
    remaining: List[FamilySpace]
    stats: SearchStats

    @property
    def exhausted(self) -> bool:
        return not self.remaining


def synthesize(
    pomdp: Pomdp,
    family: FamilySpace,
    spec: Specification,
    incumbent_value: Optional[float] = None,
    deadline: Optional[Deadline] = None,
    *,
    worklist: Optional[List[FamilySpace]] = None,
    stats: Optional[SearchStats] = None,
    trace: Optional[TraceSink] = None,
) -> SearchResult:
    """Search ``family`` (or a resumed ``worklist``) for a controller better than ``incumbent_value``.

    ``best`` is ``None`` when nothing beat the incumbent.
    """
    deadline = deadline or Deadline.never()
    stats = stats or SearchStats()
    stack: List[FamilySpace] = list(worklist) if worklist is not None else [family]
    watch = Stopwatch()
    best: Optional[Fsc] = None
    value = incumbent_value

    def emit(event: str, sub: FamilySpace, lower: float, upper: float) -> None:
        if trace is not None:
            trace(
                json_safe(
                    {
                        "event": event,
                        "family_size": sub.size(),
                        "restricted": sub.restricted,
                        "bounds": [lower, upper],
                        "incumbent": value,
                        "wall_ms": round(watch.elapsed_ms(), 3),
                    }
                )
            )

    while stack:
        if deadline.expired():
            logger.debug("inductive search stopped by deadline with %d open subfamilies", len(stack))
            break
        sub = stack.pop()
        abstraction = build_abstraction(sub)
        result = check_abstraction(abstraction, spec)
        stats.queries += 1
        emit("checked", sub, result.lower, result.upper)
        if value is not None and not improves(spec, result.optimistic, value):
            stats.pruned += 1
            emit("pruned", sub, result.lower, result.upper)
            continue
        if result.consistent:
            candidate = sub.realize(candidate_assignment(abstraction, result))
            candidate_value = evaluate(pomdp, candidate, spec, all_pairs=False).value
            if improves(spec, candidate_value, value):
                best, value = candidate, candidate_value
                stats.improved += 1
                stats.queries_to_best = stats.queries
                logger.info("inductive: new incumbent %.10g (%s)", candidate_value, sub.describe())
                emit("improved", sub, result.lower, result.upper)
            continue
        left, right = split(sub, result)
        stats.splits += 1
        emit("split", sub, result.lower, result.upper)
        stack.append(right)
        stack.append(left)
    return SearchResult(best=best, value=value if best is not None else incumbent_value, remaining=stack, stats=stats)


def memory_model_from(action_sets: Sequence[frozenset]) -> Tuple[int, ...]:
    """``mu[z] = max(1, |actions used on z|)``."""
    return tuple(max(1, len(s)) for s in action_sets)


def brute_force_family_optimum(pomdp: Pomdp, family: FamilySpace, spec: Specification) -> Tuple[float, Fsc]:
    """Best member by exhaustive enumeration (small families only)."""
    best: Optional[Tuple[float, Fsc]] = None
    for member in family.members():
        v = evaluate(pomdp, member, spec, all_pairs=False).value
        if best is None or improves(spec, v, best[0]) or (math.isnan(best[0]) and not math.isnan(v)):
            best = (v, member)
    assert best is not None
    return best


__all__ = [
    "IMPROVEMENT_EPS",
    "SearchStats",
    "SearchResult",
    "improves",
    "synthesize",
    "memory_model_from",
    "brute_force_family_optimum",
]
