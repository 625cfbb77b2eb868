"""Quotient MDP of a family and its bound computation.

The abstraction has one state per (state, node) pair with ``node <
mu[obs(state)]``. At a pair, every choice fixes an action option and the
update options of the holes relevant to that action, i.e. the non-target
posteriors the action can produce. Any member of the family is then a
memoryless policy of the abstraction, so the abstraction's minimum and
maximum bound every member's value.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, FrozenSet, List, Mapping, Optional, Set, Tuple

from .checker import MemorylessPolicy, check_mdp
from .errors import CannotSplitError
from .family import FamilySpace
from .models import Distribution, Mdp, Objective, Specification

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]
HoleValue = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class Abstraction:
    """``choice_holes[(i, c)]`` lists the ``(hole, option)`` pairs fixed by choice ``c`` of state ``i``."""

    family: FamilySpace
    mdp: Mdp
    pairs: Tuple[Pair, ...]
    choice_holes: Mapping[Tuple[int, int], Tuple[HoleValue, ...]]


def _successor_node(family: FamilySpace, obs: int, node: int) -> int:
    return node if node < family.memory_model[obs] else 0


def build_abstraction(family: FamilySpace) -> Abstraction:
    pomdp = family.pomdp
    layout = family.layout
    options = family.options
    start = (pomdp.initial, 0)
    index: Dict[Pair, int] = {start: 0}
    pairs: List[Pair] = [start]
    queue: Deque[Pair] = deque([start])
    rows: List[List[Tuple[Dict[Pair, float], float, Tuple[HoleValue, ...]]]] = []
    while queue:
        s, n = queue.popleft()
        z = pomdp.obs_of[s]
        choices: List[Tuple[Dict[Pair, float], float, Tuple[HoleValue, ...]]] = []
        if pomdp.is_target(s):
            choices.append(({(s, 0): 1.0}, 0.0, ()))
        else:
            action_hole = layout.action_hole[(z, n)]
            for a in options[action_hole]:
                dist = pomdp.mdp.distribution(s, a)
                relevant: List[int] = []
                for t in dist.support:
                    h = layout.update_hole.get((z, n, pomdp.obs_of[t]))
                    if h is not None and h not in relevant:
                        relevant.append(h)
                for combo in itertools.product(*(options[h] for h in relevant)):
                    chosen = dict(zip(relevant, combo))
                    succ: Dict[Pair, float] = {}
                    for t, p in dist:
                        z2 = pomdp.obs_of[t]
                        if pomdp.is_target(t):
                            nxt = (t, 0)
                        else:
                            h = layout.update_hole.get((z, n, z2))
                            nxt = (t, _successor_node(family, z2, chosen[h] if h is not None else 0))
                        succ[nxt] = succ.get(nxt, 0.0) + p
                    holes = ((action_hole, a),) + tuple(sorted(chosen.items()))
                    choices.append((succ, pomdp.mdp.reward(s, a), holes))
        rows.append(choices)
        for succ, _r, _h in choices:
            for pair in succ:
                if pair not in index:
                    index[pair] = len(pairs)
                    pairs.append(pair)
                    queue.append(pair)

    width = max(len(c) for c in rows)
    transitions: Dict[Tuple[int, int], Distribution] = {}
    rewards: Optional[Dict[Tuple[int, int], float]] = {} if pomdp.has_rewards else None
    choice_holes: Dict[Tuple[int, int], Tuple[HoleValue, ...]] = {}
    targets = set()
    for i, choices in enumerate(rows):
        if pomdp.is_target(pairs[i][0]):
            targets.add(i)
        for c, (succ, r, holes) in enumerate(choices):
            transitions[(i, c)] = Distribution.from_mapping({index[p]: q for p, q in succ.items()})
            if rewards is not None:
                rewards[(i, c)] = r
            choice_holes[(i, c)] = holes
    labels = tuple(f"c{c}" for c in range(width))
    mdp = Mdp(len(pairs), 0, labels, transitions, rewards, frozenset(targets))
    logger.debug("abstraction: %d pairs, %d choices", len(pairs), len(transitions))
    return Abstraction(family=family, mdp=mdp, pairs=tuple(pairs), choice_holes=choice_holes)


@dataclass(frozen=True)
class AbstractionResult:
    """Bounds over the family and the hole options used by the optimistic policy."""

    lower: float
    upper: float
    policy: MemorylessPolicy
    used: Mapping[int, FrozenSet[int]]
    maximize: bool

    @property
    def optimistic(self) -> float:
        return self.upper if self.maximize else self.lower

    @property
    def pessimistic(self) -> float:
        return self.lower if self.maximize else self.upper

    @property
    def consistent(self) -> bool:
        return all(len(v) <= 1 for v in self.used.values())

    def inconsistent_holes(self) -> List[int]:
        return sorted(h for h, v in self.used.items() if len(v) > 1)


def _reachable_under(mdp: Mdp, policy: MemorylessPolicy) -> List[int]:
    seen: Set[int] = {mdp.initial}
    order = [mdp.initial]
    stack = [mdp.initial]
    while stack:
        i = stack.pop()
        for j in mdp.distribution(i, policy[i]).support:
            if j not in seen:
                seen.add(j)
                order.append(j)
                stack.append(j)
    return sorted(order)


def check_abstraction(abstraction: Abstraction, spec: Specification) -> AbstractionResult:
    """Min and max values at the initial pair and the hole usage of the optimistic policy."""
    mdp = abstraction.mdp
    maximize = spec.maximize
    high = spec.with_objective(Objective.MAX_REWARD if spec.is_reward else Objective.MAX_PROB)
    low = spec.with_objective(high.objective.flipped())
    upper_values, upper_policy = check_mdp(mdp, high)
    lower_values, lower_policy = check_mdp(mdp, low)
    policy = upper_policy if maximize else lower_policy
    used: Dict[int, Set[int]] = {}
    for i in _reachable_under(mdp, policy):
        for h, option in abstraction.choice_holes[(i, policy[i])]:
            used.setdefault(h, set()).add(option)
    lower = lower_values[mdp.initial]
    upper = upper_values[mdp.initial]
    return AbstractionResult(
        lower=min(lower, upper),
        upper=max(lower, upper),
        policy=policy,
        used={h: frozenset(v) for h, v in used.items()},
        maximize=maximize,
    )


def candidate_assignment(abstraction: Abstraction, result: AbstractionResult) -> Dict[int, int]:
    """Hole values of a consistent optimistic policy.

    Holes unused on the reachable part take the policy's choice elsewhere
    (lowest pair first) and otherwise stay unset (first option on realize).
    """
    assignment = {h: next(iter(v)) for h, v in result.used.items() if len(v) == 1}
    for i in range(abstraction.mdp.num_states):
        for h, option in abstraction.choice_holes[(i, result.policy[i])]:
            assignment.setdefault(h, option)
    return assignment


def split(family: FamilySpace, result: AbstractionResult) -> Tuple[FamilySpace, FamilySpace]:
    """Split on the hole the optimistic policy uses most inconsistently.

    Ties go to the hole with more options, then to the lower hole id. Options
    are ordered used-first and dealt alternately into the two halves, which
    spreads the used options over both sides.
    """
    candidates = [h for h, opts in enumerate(family.options) if len(opts) > 1]
    if not candidates:
        raise CannotSplitError("every hole has a single option")
    hole = min(candidates, key=lambda h: (-len(result.used.get(h, ())), -len(family.options[h]), h))
    used = result.used.get(hole, frozenset())
    ordered = [o for o in family.options[hole] if o in used] + [o for o in family.options[hole] if o not in used]
    left = sorted(ordered[0::2])
    right = sorted(ordered[1::2])
    logger.debug(
        "split %s into %s | %s", family.layout.holes[hole].describe(family.pomdp), left, right
    )
    return family.with_options(hole, left), family.with_options(hole, right)


__all__ = [
    "Abstraction",
    "AbstractionResult",
    "build_abstraction",
    "check_abstraction",
    "candidate_assignment",
    "split",
]
