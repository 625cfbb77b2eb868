"""Design spaces of memory-model FSCs.

A family fixes a memory model ``mu`` (nodes per observation) and offers a set
of options per hole:

* action hole ``(z, n)``: the action node ``n`` plays on observation ``z``;
* update hole ``(z, n, z2)``: the next node when ``z2`` follows ``z``, one per
  non-target posterior ``z2`` of ``z``, with options ``range(mu[z2])``;
  posterior-unaware families have a single update hole per ``(z, n)`` with
  options ``range(max mu[z2])``.

The target observation has no holes and one node. Subfamilies share the hole
layout and differ only in their option sets.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import ConfigurationError
from .fsc import UNDEFINED, Fsc
from .models import Pomdp

logger = logging.getLogger(__name__)

ActionRestriction = Union[Mapping[int, Iterable[int]], Sequence[Optional[Iterable[int]]]]


@dataclass(frozen=True)
class Hole:
    kind: str
    obs: int
    node: int
    post: Optional[int] = None

    def describe(self, pomdp: Pomdp) -> str:
        z = pomdp.obs_labels[self.obs]
        if self.kind == "action":
            return f"gamma[{self.node}, {z}]"
        if self.post is None:
            return f"delta[{self.node}, {z}]"
        return f"delta[{self.node}, {z}, {pomdp.obs_labels[self.post]}]"


@dataclass(frozen=True, eq=False)
class HoleLayout:
    """Holes of every family built from one (model, memory model, awareness) triple."""

    pomdp: Pomdp
    memory_model: Tuple[int, ...]
    posterior_unaware: bool
    holes: Tuple[Hole, ...]
    action_hole: Mapping[Tuple[int, int], int]
    update_hole: Mapping[Tuple[int, int, int], int]
    default_options: Tuple[Tuple[int, ...], ...]

    @property
    def num_nodes(self) -> int:
        return max(self.memory_model)


def _normalize_memory_model(pomdp: Pomdp, memory_model: Sequence[int]) -> Tuple[int, ...]:
    mu = [int(m) for m in memory_model]
    if len(mu) != pomdp.num_obs:
        raise ConfigurationError(f"memory model lists {len(mu)} observations, model has {pomdp.num_obs}")
    if any(m < 1 for m in mu):
        raise ConfigurationError("memory model needs at least one node per observation")
    mu[pomdp.target_obs] = 1
    return tuple(mu)


def _build_layout(pomdp: Pomdp, mu: Tuple[int, ...], posterior_unaware: bool) -> HoleLayout:
    holes: List[Hole] = []
    options: List[Tuple[int, ...]] = []
    action_hole: Dict[Tuple[int, int], int] = {}
    update_hole: Dict[Tuple[int, int, int], int] = {}
    target = pomdp.target_obs
    for z in range(pomdp.num_obs):
        if z == target or not pomdp.states_by_obs[z]:
            continue
        posts = sorted(z2 for z2 in pomdp.posteriors(z) if z2 != target)
        for n in range(mu[z]):
            action_hole[(z, n)] = len(holes)
            holes.append(Hole("action", z, n))
            options.append(tuple(pomdp.obs_actions(z)))
            if not posts:
                continue
            if posterior_unaware:
                h = len(holes)
                holes.append(Hole("update", z, n))
                options.append(tuple(range(max(mu[z2] for z2 in posts))))
                for z2 in posts:
                    update_hole[(z, n, z2)] = h
            else:
                for z2 in posts:
                    update_hole[(z, n, z2)] = len(holes)
                    holes.append(Hole("update", z, n, z2))
                    options.append(tuple(range(mu[z2])))
    return HoleLayout(
        pomdp=pomdp,
        memory_model=mu,
        posterior_unaware=posterior_unaware,
        holes=tuple(holes),
        action_hole=action_hole,
        update_hole=update_hole,
        default_options=tuple(options),
    )


@dataclass(frozen=True, eq=False)
class FamilySpace:
    layout: HoleLayout
    options: Tuple[Tuple[int, ...], ...]
    restricted: bool = False

    @property
    def pomdp(self) -> Pomdp:
        return self.layout.pomdp

    @property
    def memory_model(self) -> Tuple[int, ...]:
        return self.layout.memory_model

    @property
    def posterior_unaware(self) -> bool:
        return self.layout.posterior_unaware

    @property
    def num_holes(self) -> int:
        return len(self.options)

    def size(self) -> int:
        return math.prod(len(o) for o in self.options)

    def log10_size(self) -> float:
        return sum(math.log10(len(o)) for o in self.options)

    def is_singleton(self) -> bool:
        return all(len(o) == 1 for o in self.options)

    def with_options(self, hole: int, options: Sequence[int]) -> "FamilySpace":
        if not options:
            raise ConfigurationError(f"hole {hole} would have no options")
        updated = list(self.options)
        updated[hole] = tuple(options)
        return FamilySpace(self.layout, tuple(updated), self.restricted)

    def assignments(self) -> Iterator[Tuple[int, ...]]:
        return itertools.product(*self.options)

    def members(self) -> Iterator[Fsc]:
        """Every controller of the family (exponential; for small families)."""
        for assignment in self.assignments():
            yield self.realize(assignment)

    def realize(self, assignment: Union[Sequence[int], Mapping[int, int]]) -> Fsc:
        """The member with the given hole values; holes missing from a mapping take their first option."""
        if isinstance(assignment, Mapping):
            values = [assignment.get(h, opts[0]) for h, opts in enumerate(self.options)]
        else:
            values = list(assignment)
        if len(values) != self.num_holes:
            raise ConfigurationError(f"assignment covers {len(values)} holes, family has {self.num_holes}")
        layout = self.layout
        pomdp = layout.pomdp
        mu = layout.memory_model
        k = layout.num_nodes
        z_count = pomdp.num_obs
        target_actions = pomdp.obs_actions(pomdp.target_obs)
        gamma = [[UNDEFINED] * z_count for _ in range(k)]
        delta = [[[0] * z_count for _ in range(z_count)] for _ in range(k)]
        for z in range(z_count):
            if z == pomdp.target_obs:
                for n in range(k):
                    gamma[n][z] = target_actions[0] if target_actions else UNDEFINED
                continue
            for n in range(k):
                src = n if n < mu[z] else 0
                h = layout.action_hole.get((z, src))
                if h is None:
                    continue
                gamma[n][z] = values[h]
                for z2 in range(z_count):
                    uh = layout.update_hole.get((z, src, z2))
                    if uh is not None:
                        delta[n][z][z2] = values[uh]
                if layout.posterior_unaware:
                    shared = {delta[n][z][z2] for z2 in range(z_count) if (z, src, z2) in layout.update_hole}
                    fill = shared.pop() if shared else 0
                    delta[n][z] = [fill] * z_count
        return Fsc(
            num_nodes=k,
            initial=0,
            gamma=tuple(tuple(r) for r in gamma),
            delta=tuple(tuple(tuple(r) for r in rows) for rows in delta),
            posterior_unaware=layout.posterior_unaware,
            memory_model=mu,
        )

    def assignment_of(self, fsc: Fsc) -> Tuple[int, ...]:
        """Hole values read off a controller with this family's layout."""
        values: List[int] = [UNDEFINED] * self.num_holes
        for (z, n), h in self.layout.action_hole.items():
            values[h] = fsc.action(n, z)
        for (z, n, z2), h in self.layout.update_hole.items():
            values[h] = fsc.update(n, z, z2)
        return tuple(values)

    def contains(self, fsc: Fsc) -> bool:
        return all(v in opts for v, opts in zip(self.assignment_of(fsc), self.options))

    def describe(self) -> str:
        return f"{self.size()} members over {self.num_holes} holes, mu={list(self.memory_model)}"


def full_family(
    pomdp: Pomdp,
    memory_model: Sequence[int],
    posterior_unaware: bool = True,
    action_restriction: Optional[ActionRestriction] = None,
) -> FamilySpace:
    """Every ``mu``-FSC, optionally with action holes limited to ``action_restriction[z]``.

    Observations absent from the restriction (or mapped to ``None``) keep
    their full action set; an empty set is a :class:`ConfigurationError`.
    """
    mu = _normalize_memory_model(pomdp, memory_model)
    layout = _build_layout(pomdp, mu, posterior_unaware)
    options = list(layout.default_options)
    if action_restriction is not None:
        if isinstance(action_restriction, Mapping):
            allowed = dict(action_restriction)
        else:
            allowed = dict(enumerate(action_restriction))
        for (z, _n), h in layout.action_hole.items():
            subset = allowed.get(z)
            if subset is None:
                continue
            subset = frozenset(subset)
            if not subset:
                raise ConfigurationError(f"action restriction for observation {pomdp.obs_labels[z]!r} is empty")
            kept = tuple(a for a in options[h] if a in subset)
            if not kept:
                raise ConfigurationError(
                    f"action restriction for observation {pomdp.obs_labels[z]!r} names no enabled action"
                )
            options[h] = kept
    family = FamilySpace(layout, tuple(options), restricted=action_restriction is not None)
    logger.debug("family: %s", family.describe())
    return family


__all__ = ["Hole", "HoleLayout", "FamilySpace", "full_family", "ActionRestriction"]
