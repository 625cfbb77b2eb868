"""Belief-MDP exploration with FSC cut-offs.

Beliefs are unfolded breadth-first from the initial point belief. Every
one-step successor of the explored set that is not explored itself is on the
frontier, where the remaining behaviour is fixed to a cut-off controller: the
frontier belief moves to the sink ``top`` with its cut-off value (probability
objectives) or pays the cut-off value once and stops (reward objectives).

Fragments are resumable: passing a fragment back to :func:`unfold` continues
the stored queue and never drops explored beliefs.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from .budget import Deadline
from .checker import check_mdp
from .errors import BeliefError
from .formatting import json_safe, rational_label
from .fsc import UNDEFINED, Fsc, FscValue, default_cutoff_fsc, evaluate
from .models import Distribution, Mdp, Pomdp, Specification

logger = logging.getLogger(__name__)

BELIEF_DIGITS = 12
EXPANSION_BATCH = 256

BeliefKey = Tuple[int, Tuple[int, ...], Tuple[float, ...]]


@dataclass(frozen=True)
class Belief:
    """Distribution over the states carrying observation ``obs``."""

    obs: int
    dist: Distribution

    @staticmethod
    def point(pomdp: Pomdp, state: int) -> "Belief":
        return Belief(pomdp.obs_of[state], Distribution.point(state))

    @property
    def key(self) -> BeliefKey:
        return (
            self.obs,
            self.dist.support,
            tuple(round(p, BELIEF_DIGITS) for _, p in self.dist),
        )


def _joint(pomdp: Pomdp, b: Belief, action: int) -> Dict[int, Dict[int, float]]:
    """Unnormalized successor mass grouped by posterior observation."""
    out: Dict[int, Dict[int, float]] = {}
    for s, p in b.dist:
        if action not in pomdp.mdp.enabled(s):
            raise BeliefError(f"action {pomdp.actions[action]!r} is disabled in state {s}")
        for t, q in pomdp.mdp.distribution(s, action):
            bucket = out.setdefault(pomdp.obs_of[t], {})
            bucket[t] = bucket.get(t, 0.0) + p * q
    return out


def obs_prob(pomdp: Pomdp, b: Belief, action: int, post: int) -> float:
    """Probability of observing ``post`` after playing ``action`` in ``b``."""
    return float(sum(_joint(pomdp, b, action).get(post, {}).values()))


def belief_successor(pomdp: Pomdp, b: Belief, action: int, post: int) -> Belief:
    """Bayes update of ``b`` after ``action`` and observation ``post``."""
    mass = _joint(pomdp, b, action).get(post)
    total = sum(mass.values()) if mass else 0.0
    if not mass or total <= 0.0:
        raise BeliefError(f"observation {post} has probability zero after action {pomdp.actions[action]!r}")
    return Belief(post, Distribution.from_mapping({t: q / total for t, q in mass.items()}))


def cutoff_value(b: Belief, fsc_values: FscValue) -> Tuple[float, int]:
    """Best node for belief ``b``: ``max_n sum_s b(s) p[s, n]`` (min for minimising objectives).

    Nodes with undefined (nan) entries on the support lose every comparison;
    ties go to the lowest node id.
    """
    states = np.fromiter(b.dist.support, dtype=np.int64)
    weights = np.fromiter((p for _, p in b.dist), dtype=float)
    block = fsc_values.table[states, :]
    with np.errstate(invalid="ignore"):
        scores = np.where(weights[:, None] > 0.0, block * weights[:, None], 0.0).sum(axis=0)
    spec = fsc_values.spec
    best_node, best = 0, spec.worst()
    found = False
    for n, v in enumerate(scores):
        if np.isnan(v):
            continue
        if not found or (v > best if spec.maximize else v < best):
            best_node, best, found = n, float(v), True
    return best, best_node


@dataclass
class BeliefFragment:
    """Explored beliefs, their one-step rows and the frontier with cut-off data.

    ``beliefs[i]`` is belief id ``i``; ``explored`` lists belief ids in
    exploration order (target beliefs included, at no budget cost);
    ``queue`` holds the frontier in BFS order.
    """

    pomdp: Pomdp
    beliefs: List[Belief] = field(default_factory=list)
    index: Dict[BeliefKey, int] = field(default_factory=dict)
    explored: List[int] = field(default_factory=list)
    rows: Dict[int, Dict[int, Dict[int, float]]] = field(default_factory=dict)
    rewards: Dict[int, Dict[int, float]] = field(default_factory=dict)
    queue: Deque[int] = field(default_factory=deque)
    targets: set = field(default_factory=set)
    cutoffs: Dict[int, Tuple[float, int]] = field(default_factory=dict)
    cutoff_fsc: Optional[Fsc] = None
    cutoff_values: Optional[FscValue] = None
    cutoff_spec: Optional[Specification] = None

    @property
    def frontier(self) -> List[int]:
        return list(self.queue)

    @property
    def num_explored(self) -> int:
        return len(self.explored)

    def is_explored(self, belief_id: int) -> bool:
        return belief_id in self.rows

    def _discover(self, b: Belief) -> int:
        key = b.key
        found = self.index.get(key)
        if found is not None:
            return found
        i = len(self.beliefs)
        self.beliefs.append(b)
        self.index[key] = i
        if b.obs == self.pomdp.target_obs:
            self._close_target(i)
        else:
            self.queue.append(i)
        return i

    def _close_target(self, i: int) -> None:
        acts = self.pomdp.obs_actions(self.pomdp.target_obs)
        self.rows[i] = {a: {i: 1.0} for a in acts}
        self.rewards[i] = {a: 0.0 for a in acts}
        self.targets.add(i)
        self.explored.append(i)

    def _expand(self, i: int) -> None:
        b = self.beliefs[i]
        pomdp = self.pomdp
        rows: Dict[int, Dict[int, float]] = {}
        rewards: Dict[int, float] = {}
        for a in pomdp.obs_actions(b.obs):
            row: Dict[int, float] = {}
            for post, mass in sorted(_joint(pomdp, b, a).items()):
                total = sum(mass.values())
                if total <= 0.0:
                    continue
                succ = Belief(post, Distribution.from_mapping({t: q / total for t, q in mass.items()}))
                j = self._discover(succ)
                row[j] = row.get(j, 0.0) + total
            rows[a] = row
            rewards[a] = sum(p * pomdp.mdp.reward(s, a) for s, p in b.dist)
        self.rows[i] = rows
        self.rewards[i] = rewards
        self.explored.append(i)


def new_fragment(pomdp: Pomdp) -> BeliefFragment:
    fragment = BeliefFragment(pomdp=pomdp)
    fragment._discover(Belief.point(pomdp, pomdp.initial))
    return fragment


def attach_cutoffs(fragment: BeliefFragment, spec: Specification, cutoff_fsc: Optional[Fsc] = None) -> None:
    """Compute per-pair values of the cut-off controller and the frontier cut-offs."""
    fsc = cutoff_fsc or default_cutoff_fsc(fragment.pomdp)
    values = evaluate(fragment.pomdp, fsc, spec, all_pairs=True)
    fragment.cutoff_fsc = fsc
    fragment.cutoff_values = values
    fragment.cutoff_spec = spec
    fragment.cutoffs = {i: cutoff_value(fragment.beliefs[i], values) for i in fragment.queue}


def unfold(
    pomdp: Pomdp,
    spec: Specification,
    cutoff_fsc: Optional[Fsc] = None,
    *,
    max_beliefs: int,
    deadline: Optional[Deadline] = None,
    fragment: Optional[BeliefFragment] = None,
) -> BeliefFragment:
    """Explore up to ``max_beliefs`` more beliefs and attach cut-offs from ``cutoff_fsc``.

    ``cutoff_fsc=None`` uses :func:`default_cutoff_fsc`. The deadline is polled
    every ``EXPANSION_BATCH`` expansions.
    """
    deadline = deadline or Deadline.never()
    if fragment is None:
        fragment = new_fragment(pomdp)
    elif fragment.pomdp is not pomdp:
        raise BeliefError("fragment belongs to a different model")
    expanded = 0
    while fragment.queue and expanded < max_beliefs:
        if expanded % EXPANSION_BATCH == 0 and deadline.expired():
            logger.debug("belief exploration stopped by deadline after %d expansions", expanded)
            break
        fragment._expand(fragment.queue.popleft())
        expanded += 1
    attach_cutoffs(fragment, spec, cutoff_fsc)
    logger.debug(
        "unfolded %d beliefs (%d explored, %d frontier)", expanded, fragment.num_explored, len(fragment.queue)
    )
    return fragment


@dataclass(frozen=True)
class FragmentMdp:
    """Finite approximation: explored beliefs, frontier beliefs, then ``top`` and ``bottom``."""

    mdp: Mdp
    state_of: Dict[int, int]
    top: int
    bottom: int


def fragment_mdp(fragment: BeliefFragment, spec: Specification) -> FragmentMdp:
    pomdp = fragment.pomdp
    order = list(fragment.explored) + list(fragment.queue)
    state_of = {b: i for i, b in enumerate(order)}
    top, bottom = len(order), len(order) + 1
    transitions: Dict[Tuple[int, int], Distribution] = {}
    rewards: Optional[Dict[Tuple[int, int], float]] = {} if spec.is_reward else None
    for b in fragment.explored:
        i = state_of[b]
        for a, row in fragment.rows[b].items():
            transitions[(i, a)] = Distribution.from_mapping({state_of[j]: p for j, p in row.items()})
            if rewards is not None:
                rewards[(i, a)] = fragment.rewards[b][a]
    for b in fragment.queue:
        i = state_of[b]
        value, _node = fragment.cutoffs[b]
        if spec.is_reward:
            finite = bool(np.isfinite(value))
            transitions[(i, 0)] = Distribution.point(top if finite else bottom)
            rewards[(i, 0)] = float(value) if finite else 0.0  # type: ignore[index]
        else:
            v = min(1.0, max(0.0, float(value)))
            transitions[(i, 0)] = Distribution.from_mapping({top: v, bottom: 1.0 - v})
    for sink in (top, bottom):
        transitions[(sink, 0)] = Distribution.point(sink)
        if rewards is not None:
            rewards[(sink, 0)] = 0.0
    targets = frozenset([top] + [state_of[b] for b in fragment.targets])
    mdp = Mdp(len(order) + 2, state_of[0], pomdp.actions, transitions, rewards, targets)
    return FragmentMdp(mdp=mdp, state_of=state_of, top=top, bottom=bottom)


def check_fragment(fragment: BeliefFragment, spec: Specification) -> Tuple[float, Dict[int, int]]:
    """Optimal value of the finite approximation and the belief policy on explored beliefs."""
    if fragment.cutoff_values is None or fragment.cutoff_spec != spec:
        attach_cutoffs(fragment, spec, fragment.cutoff_fsc)
    approx = fragment_mdp(fragment, spec)
    values, policy = check_mdp(approx.mdp, spec)
    sigma = {b: policy[approx.state_of[b]] for b in fragment.explored}
    return values[approx.mdp.initial], sigma


def extract_belief_fsc(fragment: BeliefFragment, sigma: Dict[int, int]) -> Fsc:
    """Belief-based FSC: one node per explored belief, then the cut-off controller's nodes.

    Updates into an explored belief go to its node; updates into a frontier
    belief go to the cut-off node chosen for it.
    """
    pomdp = fragment.pomdp
    cutoff = fragment.cutoff_fsc
    if cutoff is None:
        raise BeliefError("fragment has no cut-off controller; run unfold or attach_cutoffs first")
    inner = cutoff.quotient()
    z_count = pomdp.num_obs
    offset = len(fragment.explored)
    node_of = {b: p for p, b in enumerate(fragment.explored)}
    k = offset + inner.num_nodes

    def target_node(j: int) -> int:
        if j in node_of:
            return node_of[j]
        return offset + fragment.cutoffs[j][1]

    gamma = [[UNDEFINED] * z_count for _ in range(k)]
    delta = [[[UNDEFINED] * z_count for _ in range(z_count)] for _ in range(k)]
    for p, b in enumerate(fragment.explored):
        belief = fragment.beliefs[b]
        z = belief.obs
        a = sigma[b]
        gamma[p][z] = a
        for j in fragment.rows[b][a]:
            delta[p][z][fragment.beliefs[j].obs] = target_node(j)
    for n in range(inner.num_nodes):
        for z in range(z_count):
            gamma[offset + n][z] = inner.gamma[n][z]
            for z2 in range(z_count):
                m = inner.delta[n][z][z2]
                delta[offset + n][z][z2] = m if m == UNDEFINED else offset + m
    return Fsc(
        num_nodes=k,
        initial=target_node(0),
        gamma=tuple(tuple(r) for r in gamma),
        delta=tuple(tuple(tuple(r) for r in rows) for rows in delta),
        explored=offset,
        cutoff=cutoff,
    )


def action_sets(sigma: Dict[int, int], fragment: BeliefFragment) -> List[FrozenSet[int]]:
    """Per observation, the actions the belief policy uses on explored non-target beliefs."""
    sets: List[set] = [set() for _ in range(fragment.pomdp.num_obs)]
    for b in fragment.explored:
        if b in fragment.targets:
            continue
        sets[fragment.beliefs[b].obs].add(sigma[b])
    return [frozenset(s) for s in sets]


def belief_label(pomdp: Pomdp, b: Belief) -> str:
    """``obs {s1: 1/2, s2: 1/2}`` with rational probabilities."""
    body = ", ".join(f"s{s}: {rational_label(p)}" for s, p in b.dist)
    return f"{pomdp.obs_labels[b.obs]} {{{body}}}"


def fragment_stats(fragment: BeliefFragment, value: float, wall_ms: float) -> Dict[str, object]:
    cutoff_value_ = fragment.cutoff_values.value if fragment.cutoff_values is not None else None
    return json_safe(
        {
            "explored": fragment.num_explored,
            "frontier": len(fragment.queue),
            "value": value,
            "cutoff_fsc_value": cutoff_value_,
            "wall_ms": round(wall_ms, 3),
        }
    )


__all__ = [
    "BELIEF_DIGITS",
    "EXPANSION_BATCH",
    "Belief",
    "BeliefFragment",
    "FragmentMdp",
    "obs_prob",
    "belief_successor",
    "cutoff_value",
    "new_fragment",
    "attach_cutoffs",
    "unfold",
    "fragment_mdp",
    "check_fragment",
    "extract_belief_fsc",
    "action_sets",
    "belief_label",
    "fragment_stats",
]
