"""Finite-state controllers: representation, induced Markov chains, evaluation and size.

An :class:`Fsc` is a deterministic Mealy machine. ``gamma[n][z]`` is the
action taken in node ``n`` after observing ``z`` and ``delta[n][z][z2]`` the
next node when ``z2`` is observed after that step. ``UNDEFINED`` marks rows a
controller never needs; reaching one is a :class:`ControllerError`.

With a memory model ``mu``, node ``i >= mu[z]`` acts exactly like the initial
node on prior observation ``z``.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, FrozenSet, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .checker import check_mc
from .errors import ConfigurationError, ControllerError
from .models import Distribution, Mdp, Pomdp, Specification

logger = logging.getLogger(__name__)

UNDEFINED = -1

Pair = Tuple[int, int]


@dataclass(frozen=True)
class Fsc:
    num_nodes: int
    initial: int
    gamma: Tuple[Tuple[int, ...], ...]
    delta: Tuple[Tuple[Tuple[int, ...], ...], ...]
    posterior_unaware: bool = False
    memory_model: Optional[Tuple[int, ...]] = None
    explored: Optional[int] = None
    cutoff: Optional["Fsc"] = None

    def __post_init__(self) -> None:
        k = self.num_nodes
        if k < 1:
            raise ConfigurationError("an FSC needs at least one node")
        if not 0 <= self.initial < k:
            raise ConfigurationError(f"initial node {self.initial} out of range")
        if len(self.gamma) != k or len(self.delta) != k:
            raise ConfigurationError(f"gamma and delta must have one row per node ({k})")
        z_count = self.num_obs
        for n in range(k):
            if len(self.gamma[n]) != z_count or len(self.delta[n]) != z_count:
                raise ConfigurationError(f"node {n}: expected {z_count} observation entries")
            for z in range(z_count):
                row = self.delta[n][z]
                if len(row) != z_count:
                    raise ConfigurationError(f"node {n}, obs {z}: expected {z_count} posterior entries")
                if any(not UNDEFINED <= m < k for m in row):
                    raise ConfigurationError(f"node {n}, obs {z}: update target out of range")
                if self.posterior_unaware and len({m for m in row if m != UNDEFINED}) > 1:
                    raise ConfigurationError(f"node {n}, obs {z}: posterior-unaware update depends on the posterior")
        if self.memory_model is not None:
            if len(self.memory_model) != z_count or any(not 1 <= m <= k for m in self.memory_model):
                raise ConfigurationError("memory model must give 1..k nodes per observation")
        if (self.explored is None) != (self.cutoff is None):
            raise ConfigurationError("explored and cutoff are set together")

    @property
    def num_obs(self) -> int:
        return len(self.gamma[0])

    def _node_for(self, node: int, obs: int) -> int:
        mu = self.memory_model
        if mu is not None and node >= mu[obs]:
            return self.initial
        return node

    def action(self, node: int, obs: int) -> int:
        return self.gamma[self._node_for(node, obs)][obs]

    def update(self, node: int, obs: int, post: int) -> int:
        return self.delta[self._node_for(node, obs)][obs][post]

    @staticmethod
    def build(
        num_nodes: int,
        num_obs: int,
        gamma: Mapping[Tuple[int, int], int],
        delta: Mapping[Tuple[int, ...], int],
        *,
        initial: int = 0,
        posterior_unaware: bool = False,
        memory_model: Optional[Sequence[int]] = None,
    ) -> "Fsc":
        """Tabulate sparse rows; missing entries are ``UNDEFINED``.

        Posterior-unaware controllers take ``(node, obs)`` keys in ``delta``.
        """
        g = [[UNDEFINED] * num_obs for _ in range(num_nodes)]
        d = [[[UNDEFINED] * num_obs for _ in range(num_obs)] for _ in range(num_nodes)]
        for (n, z), a in gamma.items():
            g[n][z] = a
        for key, m in delta.items():
            if posterior_unaware:
                n, z = key[0], key[1]
                d[n][z] = [m] * num_obs
            else:
                n, z, z2 = key
                d[n][z][z2] = m
        return Fsc(
            num_nodes=num_nodes,
            initial=initial,
            gamma=tuple(tuple(row) for row in g),
            delta=tuple(tuple(tuple(r) for r in rows) for rows in d),
            posterior_unaware=posterior_unaware,
            memory_model=None if memory_model is None else tuple(int(m) for m in memory_model),
        )

    @staticmethod
    def memoryless(actions: Sequence[int]) -> "Fsc":
        """One-node controller playing ``actions[z]`` on observation ``z``."""
        z_count = len(actions)
        return Fsc(
            num_nodes=1,
            initial=0,
            gamma=(tuple(int(a) for a in actions),),
            delta=(tuple(tuple([0] * z_count) for _ in range(z_count)),),
            posterior_unaware=True,
            memory_model=(1,) * z_count,
        )

    def quotient(self) -> "Fsc":
        """Same controller with the memory model applied to the tables."""
        if self.memory_model is None:
            return self
        k, z_count = self.num_nodes, self.num_obs
        gamma = tuple(tuple(self.action(n, z) for z in range(z_count)) for n in range(k))
        delta = tuple(
            tuple(tuple(self.update(n, z, z2) for z2 in range(z_count)) for z in range(z_count)) for n in range(k)
        )
        return Fsc(k, self.initial, gamma, delta, self.posterior_unaware, None, self.explored, self.cutoff)

    def check_against(self, pomdp: Pomdp) -> None:
        if self.num_obs != pomdp.num_obs:
            raise ConfigurationError(f"FSC covers {self.num_obs} observations, model has {pomdp.num_obs}")
        for n in range(self.num_nodes):
            for a in self.gamma[n]:
                if not UNDEFINED <= a < len(pomdp.actions):
                    raise ConfigurationError(f"node {n}: action id {a} out of range")


def default_cutoff_fsc(pomdp: Pomdp) -> Fsc:
    """Memoryless FSC choosing the lowest enabled action on every observation."""
    acts = pomdp.obs_actions
    return Fsc.memoryless([acts(z)[0] if acts(z) else UNDEFINED for z in range(pomdp.num_obs)])


@dataclass(frozen=True)
class InducedMc:
    """Product chain over (state, node) pairs; ``pairs[i]`` is product state ``i``."""

    mc: Mdp
    pairs: Tuple[Pair, ...]
    index: Mapping[Pair, int]
    broken: FrozenSet[int] = frozenset()

    def state_of(self, pair: Pair) -> int:
        return self.index[pair]


@dataclass(frozen=True)
class FscValue:
    """Overall value ``value`` at the initial pair and ``table[s, n]`` per pair (nan when undefined)."""

    value: float
    table: np.ndarray
    spec: Specification

    def at(self, state: int, node: int) -> float:
        return float(self.table[state, node])


def _pair_row(pomdp: Pomdp, fsc: Fsc, pair: Pair) -> Tuple[int, List[Tuple[Pair, float]], Optional[str]]:
    """Chosen action and successor pairs of ``pair``, or an error message."""
    s, n = pair
    z = pomdp.obs_of[s]
    enabled = pomdp.mdp.enabled(s)
    if pomdp.is_target(s):
        a = fsc.action(n, z)
        return (a if a in enabled else enabled[0]), [(pair, 1.0)], None
    a = fsc.action(n, z)
    if a == UNDEFINED:
        return UNDEFINED, [], f"action undefined for node {n} on observation {z} (state {s}, node {n})"
    if a not in enabled:
        return a, [], f"action {pomdp.actions[a]!r} is disabled in state {s} (state {s}, node {n})"
    succ: List[Tuple[Pair, float]] = []
    for t, p in pomdp.mdp.distribution(s, a):
        m = fsc.update(n, z, pomdp.obs_of[t])
        if m == UNDEFINED:
            return a, [], f"update undefined for node {n} on {z} -> {pomdp.obs_of[t]} (state {s}, node {n})"
        succ.append(((t, m), p))
    return a, succ, None


def _product(pomdp: Pomdp, fsc: Fsc, extra_seeds: Sequence[Pair] = ()) -> InducedMc:
    """Explore pairs from the initial pair (strict), then from ``extra_seeds`` (undefined rows break)."""
    fsc.check_against(pomdp)
    start = (pomdp.initial, fsc.initial)
    index: Dict[Pair, int] = {start: 0}
    pairs: List[Pair] = [start]
    rows: List[Tuple[int, List[Tuple[Pair, float]]]] = []
    broken: Set[int] = set()
    queue: Deque[Pair] = deque([start])
    strict = True
    seeds = iter(extra_seeds)
    while True:
        if not queue:
            strict = False
            for seed in seeds:
                if seed not in index:
                    index[seed] = len(pairs)
                    pairs.append(seed)
                    queue.append(seed)
                    break
            if not queue:
                break
        pair = queue.popleft()
        a, succ, problem = _pair_row(pomdp, fsc, pair)
        if problem is not None:
            if strict:
                raise ControllerError(problem, state=pair[0], node=pair[1])
            broken.add(index[pair])
        rows.append((a, succ))
        for nxt, _p in succ:
            if nxt not in index:
                index[nxt] = len(pairs)
                pairs.append(nxt)
                queue.append(nxt)

    n_pairs = len(pairs)
    sink = n_pairs
    transitions: Dict[Tuple[int, int], Distribution] = {}
    rewards: Optional[Dict[Tuple[int, int], float]] = {} if pomdp.has_rewards else None
    targets = set()
    for i, ((s, _n), (a, succ)) in enumerate(zip(pairs, rows)):
        if pomdp.is_target(s):
            targets.add(i)
        if i in broken:
            transitions[(i, 0)] = Distribution.point(sink)
            if rewards is not None:
                rewards[(i, 0)] = 0.0
            continue
        probs: Dict[int, float] = {}
        for nxt, p in succ:
            j = index[nxt]
            probs[j] = probs.get(j, 0.0) + p
        transitions[(i, a)] = Distribution.from_mapping(probs)
        if rewards is not None and not pomdp.is_target(s):
            rewards[(i, a)] = pomdp.mdp.reward(s, a)
        elif rewards is not None:
            rewards[(i, a)] = 0.0
    num_states = n_pairs
    if broken:
        num_states += 1
        transitions[(sink, 0)] = Distribution.point(sink)
        if rewards is not None:
            rewards[(sink, 0)] = 0.0
    mc = Mdp(num_states, 0, pomdp.actions, transitions, rewards, frozenset(targets))
    return InducedMc(mc=mc, pairs=tuple(pairs), index=index, broken=frozenset(broken))


def induced_mc(pomdp: Pomdp, fsc: Fsc) -> InducedMc:
    """Markov chain of the pairs reachable from ``(initial state, initial node)``."""
    return _product(pomdp, fsc)


def _reaches(product: InducedMc, sources: FrozenSet[int]) -> np.ndarray:
    n = product.mc.num_states
    preds: List[List[int]] = [[] for _ in range(n)]
    for (i, _a), dist in product.mc.transitions.items():
        for j in dist.support:
            preds[j].append(i)
    seen = np.zeros(n, dtype=bool)
    stack = list(sources)
    seen[stack] = True
    while stack:
        j = stack.pop()
        for i in preds[j]:
            if not seen[i]:
                seen[i] = True
                stack.append(i)
    return seen


def evaluate(pomdp: Pomdp, fsc: Fsc, spec: Specification, *, all_pairs: bool = True) -> FscValue:
    """Value of ``fsc`` on ``pomdp`` plus per-pair values.

    With ``all_pairs`` every (state, node) pair whose rows are defined is
    evaluated, not only those reachable from the initial pair; pairs that can
    reach an undefined row get ``nan``.
    """
    spec.check(pomdp)
    seeds: Sequence[Pair] = ()
    if all_pairs:
        seeds = [
            (s, n)
            for n in range(fsc.num_nodes)
            for s in range(pomdp.num_states)
            if pomdp.is_target(s) or fsc.action(n, pomdp.obs_of[s]) != UNDEFINED
        ]
    product = _product(pomdp, fsc, seeds)
    values = check_mc(product.mc, spec).values
    if product.broken:
        values = np.where(_reaches(product, product.broken), np.nan, values)
    table = np.full((pomdp.num_states, fsc.num_nodes), np.nan)
    for i, (s, n) in enumerate(product.pairs):
        table[s, n] = values[i]
    value = float(values[0])
    logger.debug("evaluated %d-node FSC on %d pairs: %.10g", fsc.num_nodes, len(product.pairs), value)
    return FscValue(value=value, table=table, spec=spec)


@dataclass(frozen=True)
class FscSize:
    gamma: int
    delta: int

    @property
    def total(self) -> int:
        return self.gamma + self.delta


def posterior_sets(pomdp: Pomdp, fsc: Fsc) -> Dict[Tuple[int, int], FrozenSet[int]]:
    """``post(n, z)``: observations seen right after node ``n`` acts on ``z`` in the reachable induced MC."""
    product = induced_mc(pomdp, fsc)
    post: Dict[Tuple[int, int], Set[int]] = {}
    for (i, _a), dist in product.mc.transitions.items():
        s, n = product.pairs[i]
        if pomdp.is_target(s):
            continue
        key = (fsc._node_for(n, pomdp.obs_of[s]), pomdp.obs_of[s])
        bucket = post.setdefault(key, set())
        bucket.update(pomdp.obs_of[product.pairs[j][0]] for j in dist.support)
    return {key: frozenset(v) for key, v in post.items()}


def fsc_size(pomdp: Pomdp, fsc: Fsc) -> FscSize:
    """Memory footprint of ``fsc``: number of gamma entries and of delta adjacency entries.

    A belief-based controller adds one action and its posterior list per
    explored belief (target beliefs included) to the size of its cut-off
    controller, whether or not the belief is reached under its own policy.
    """
    z_count = pomdp.num_obs
    if fsc.cutoff is not None and fsc.explored is not None:
        base = fsc_size(pomdp, fsc.cutoff)
        explored_post = 0
        for p in range(fsc.explored):
            for z in range(z_count):
                if fsc.gamma[p][z] != UNDEFINED:
                    explored_post += sum(1 for m in fsc.delta[p][z] if m != UNDEFINED)
        return FscSize(base.gamma + fsc.explored, base.delta + 2 * explored_post)
    mu = fsc.memory_model
    if fsc.posterior_unaware:
        nodes = sum(mu) if mu is not None else fsc.num_nodes * z_count
        return FscSize(nodes, nodes)
    post = posterior_sets(pomdp, fsc)
    if mu is None:
        return FscSize(fsc.num_nodes * z_count, 2 * sum(len(v) for v in post.values()))
    delta = sum(len(v) for (n, z), v in post.items() if n < mu[z])
    return FscSize(sum(mu), 2 * delta)


__all__ = [
    "UNDEFINED",
    "Fsc",
    "FscValue",
    "FscSize",
    "InducedMc",
    "default_cutoff_fsc",
    "induced_mc",
    "evaluate",
    "posterior_sets",
    "fsc_size",
]
