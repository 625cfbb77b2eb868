"""Built-in models: Lanes, Lanes+, the small motivating POMDPs and random POMDPs.

The small models are readings of figures that are only partly described in
prose. Each builder states the topology it encodes; omitted actions are
self-loops and every non-target step costs one unit unless noted.
"""

from __future__ import annotations

from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError
from .models import Distribution, Pomdp, make_pomdp

ALPHA, BETA, GAMMA, DELTA = "alpha", "beta", "gamma", "delta"
LANE_NAMES = ("slow", "moderate", "fast")
DEFAULT_SPEEDS = (5.0, 3.0, 1.0)

MicroName = Literal["fig2a", "fig2b", "fig4a"]


class _ModelBuilder:
    """Incremental state/observation bookkeeping shared by the generators."""

    def __init__(self, actions: Sequence[str]) -> None:
        self.actions = list(actions)
        self.obs_labels: List[str] = []
        self.obs_of: List[int] = []
        self.transitions: Dict[Tuple[int, int], Distribution] = {}
        self.rewards: Dict[Tuple[int, int], float] = {}

    def observation(self, label: str) -> int:
        if label not in self.obs_labels:
            self.obs_labels.append(label)
        return self.obs_labels.index(label)

    def state(self, obs_label: str) -> int:
        self.obs_of.append(self.observation(obs_label))
        return len(self.obs_of) - 1

    def move(self, state: int, action: str, probs: Mapping[int, float], reward: float = 1.0) -> None:
        merged: Dict[int, float] = {}
        for t, p in probs.items():
            merged[t] = merged.get(t, 0.0) + p
        a = self.actions.index(action)
        self.transitions[(state, a)] = Distribution.from_mapping(merged)
        self.rewards[(state, a)] = float(reward)

    def self_loops(self, state: int, actions: Sequence[str], reward: float = 1.0) -> None:
        for action in actions:
            a = self.actions.index(action)
            if (state, a) not in self.transitions:
                self.move(state, action, {state: 1.0}, reward)

    def target(self, label: str = "target", actions: Optional[Sequence[str]] = None) -> int:
        s = self.state(label)
        self.self_loops(s, actions or self.actions, reward=0.0)
        return s

    def build(self, initial: int, target_label: str = "target") -> Pomdp:
        return make_pomdp(
            num_states=len(self.obs_of),
            initial=initial,
            actions=self.actions,
            obs_labels=self.obs_labels,
            obs_of=self.obs_of,
            target_obs=self.obs_labels.index(target_label),
            transitions=self.transitions,
            rewards=self.rewards,
        )


def _alpha_upgrades(lane: int, position: int) -> bool:
    if lane == 0:
        return position % 2 == 0
    if lane == 1:
        return position % 4 in (1, 2)
    return position % 8 < 4


def _lanes_stage(
    b: _ModelBuilder, exit_state: int, *, p_u: float, lane_len: int, speeds: Sequence[float], prefix: str = ""
) -> int:
    lanes = [[b.state(prefix + name) for _ in range(lane_len)] for name in LANE_NAMES]
    # Zero-cost entry: slow-observed start, then a moderate-observed fork to the two faster lanes.
    start = b.state(prefix + LANE_NAMES[0])
    fork = b.state(prefix + LANE_NAMES[1])
    for action in (ALPHA, BETA):
        b.move(start, action, {lanes[0][0]: 1.0 / 3.0, fork: 2.0 / 3.0}, reward=0.0)
        b.move(fork, action, {lanes[1][0]: 0.5, lanes[2][0]: 0.5}, reward=0.0)
    for lane in range(3):
        upgrade_to = lanes[lane + 1][0] if lane < 2 else exit_state
        for i, s in enumerate(lanes[lane]):
            advance = lanes[lane][(i + 1) % lane_len]
            upgrade, stall = (ALPHA, BETA) if _alpha_upgrades(lane, i) else (BETA, ALPHA)
            probs = {upgrade_to: p_u}
            if p_u < 1.0:
                probs[advance] = probs.get(advance, 0.0) + (1.0 - p_u)
            b.move(s, upgrade, probs, reward=speeds[lane])
            b.move(s, stall, {advance: 1.0}, reward=speeds[lane])
    return start


def _check_lanes_args(p_u: float, lane_len: int, speeds: Sequence[float]) -> None:
    if not 0.0 < p_u <= 1.0:
        raise ConfigurationError(f"p_u={p_u} must lie in (0, 1]")
    if lane_len < 1:
        raise ConfigurationError(f"lane_len={lane_len} must be at least 1")
    if len(speeds) != 3 or any(v < 0 for v in speeds):
        raise ConfigurationError("speeds must be three non-negative step costs")


def gen_lanes(p_u: float = 0.5, lane_len: int = 8, speeds: Sequence[float] = DEFAULT_SPEEDS) -> Pomdp:
    """Three circular lanes (slow, moderate, fast) that must be crossed to reach the target.

    Position 0 of a uniformly chosen lane is reached through two zero-cost
    entry states observed as the slow and the moderate lane, so the lanes and
    the target are the only observations. In every lane state one of
    ``alpha``/``beta`` upgrades to position 0 of the next lane (the target
    after the fast lane) with probability ``p_u`` and otherwise advances; the
    other action advances. The last position wraps around. ``alpha``
    upgrades at even positions of the slow lane, at positions ``i mod 4 in
    {1, 2}`` of the moderate lane and at positions ``i mod 8 < 4`` of the fast
    lane. Every action in a lane costs that lane's speed.
    """
    _check_lanes_args(p_u, lane_len, speeds)
    b = _ModelBuilder([ALPHA, BETA])
    target = b.target()
    start = _lanes_stage(b, target, p_u=p_u, lane_len=lane_len, speeds=speeds)
    return b.build(start)


def _chain_stage(b: _ModelBuilder, exit_state: int, *, yellow: int, prefix: str = "") -> int:
    branches = [b.state(prefix + "yellow") for _ in range(yellow)]
    for j, y in enumerate(branches):
        success = 0.5 if j % 2 == 0 else 0.25
        b.move(y, ALPHA, {exit_state: success, y: 1.0 - success})
        b.self_loops(y, [BETA])
    start = b.state(prefix + "start")
    b.move(start, ALPHA, {y: 1.0 / yellow for y in branches})
    b.self_loops(start, [BETA])
    return start


def _maze_stage(b: _ModelBuilder, exit_state: int, *, prefix: str = "") -> int:
    blue, yellow = prefix + "blue", prefix + "yellow"
    b2 = b.state(blue)
    b3 = b.state(blue)
    b1 = b.state(blue)
    b4 = b.state(blue)
    y = b.state(yellow)
    start = b.state(blue)
    b.move(start, GAMMA, {y: 0.5, b3: 0.5})
    b.move(start, ALPHA, {b4: 1.0})
    b.move(y, BETA, {b1: 1.0})
    b.move(b1, BETA, {b2: 1.0})
    b.move(b1, DELTA, {b4: 1.0})
    b.move(b2, ALPHA, {exit_state: 1.0})
    b.move(b3, ALPHA, {exit_state: 1.0})
    b.move(b4, ALPHA, {b1: 1.0})
    for s in (start, y, b1, b2, b3, b4):
        b.self_loops(s, [ALPHA, BETA, GAMMA, DELTA])
    return start


def _aware_stage(b: _ModelBuilder, exit_state: int) -> int:
    y1, y2 = b.state("yellow"), b.state("yellow")
    c1, c2 = b.state("blue"), b.state("blue")
    hub = b.state("start")
    start = b.state("start")
    b.move(start, ALPHA, {hub: 1.0})
    b.move(hub, ALPHA, {y1: 0.5, c1: 0.5})
    b.move(y1, ALPHA, {y2: 0.5, c2: 0.5})
    b.move(y2, BETA, {y1: 0.5, c2: 0.5})
    b.move(c1, ALPHA, {y2: 0.5, c1: 0.5})
    b.move(c2, BETA, {exit_state: 0.5, start: 0.5})
    for s in (start, hub, y1, y2, c1, c2):
        b.self_loops(s, [ALPHA, BETA])
    return start


def gen_paper_micro(name: MicroName) -> Pomdp:
    """Small POMDPs used as micro-benchmarks; all minimise expected steps.

    ``fig2a``: ``S --alpha--> {L: 1/2, R: 1/2}`` (yellow), ``L --alpha-->``
    target with 1/2, ``R --alpha-->`` target with 1/4, ``beta`` idles.
    Always-alpha needs 4 expected steps and the belief MDP is infinite.

    ``fig2b``: blue start ``I`` with ``gamma -> {Y: 1/2, B3: 1/2}`` and
    ``alpha -> B4``; ``Y --beta--> B1 --beta--> B2 --alpha--> T``,
    ``B3 --alpha--> T``, ``B4 --alpha--> B1``, ``B1 --delta--> B4``. The
    optimum (3 steps) uses a different action in each visited blue state.

    ``fig4a``: ``S --alpha--> I --alpha--> {Y1, B1}`` (both start-labelled),
    ``Y1 --alpha--> {Y2, B2}``, ``Y2 --beta--> {Y1, B2}``,
    ``B1 --alpha--> {Y2, B1}``, ``B2 --beta--> {G, S}``; wrong actions idle.
    The optimal posterior-aware 2-FSC needs 12 steps, the best
    posterior-unaware 2-FSC 14.
    """
    if name == "fig2a":
        b = _ModelBuilder([ALPHA, BETA])
        target = b.target()
        start = _chain_stage(b, target, yellow=2)
    elif name == "fig2b":
        b = _ModelBuilder([ALPHA, BETA, GAMMA, DELTA])
        target = b.target()
        start = _maze_stage(b, target)
    elif name == "fig4a":
        b = _ModelBuilder([ALPHA, BETA])
        target = b.target()
        start = _aware_stage(b, target)
    else:
        raise ConfigurationError(f"unknown micro-benchmark {name!r}; expected fig2a, fig2b or fig4a")
    return b.build(start)


def gen_lanes_plus(
    reps: int,
    *,
    p_u: float = 0.5,
    lane_len: int = 8,
    chain_states: int = 100,
    stub_tail: bool = False,
) -> Pomdp:
    """Sequential composition: ``reps`` Lanes copies, a fig2a-style chain, then fig2b.

    The chain stage has ``chain_states`` states counting its start and its
    exit. With ``stub_tail`` the chain and the fig2b stage are each replaced
    by one state with a single unit-cost step.
    """
    if reps < 1:
        raise ConfigurationError(f"reps={reps} must be at least 1")
    if chain_states < 4 or chain_states % 2:
        raise ConfigurationError(f"chain_states={chain_states} must be an even number >= 4")
    _check_lanes_args(p_u, lane_len, DEFAULT_SPEEDS)
    b = _ModelBuilder([ALPHA, BETA, GAMMA, DELTA])
    entry = b.target()
    if stub_tail:
        for label in ("tail/maze", "tail/chain"):
            s = b.state(label)
            b.move(s, ALPHA, {entry: 1.0})
            entry = s
    else:
        entry = _maze_stage(b, entry, prefix="maze/")
        entry = _chain_stage(b, entry, yellow=chain_states - 2, prefix="chain/")
    for _ in range(reps):
        entry = _lanes_stage(b, entry, p_u=p_u, lane_len=lane_len, speeds=DEFAULT_SPEEDS, prefix="lanes/")
    return b.build(entry)


def gen_random_pomdp(
    seed: int,
    *,
    num_states: int = 6,
    num_obs: int = 3,
    num_actions: int = 2,
    acyclic: bool = False,
    max_support: int = 3,
) -> Pomdp:
    """Seeded random POMDP; the last state is the only target, state 0 is initial.

    Probabilities are multiples of 1/12 and rewards are integers in [1, 3].
    With ``acyclic`` every non-target transition moves to a higher state id.
    """
    if num_states < 2 or num_obs < 2 or num_actions < 1:
        raise ConfigurationError("random POMDPs need >= 2 states, >= 2 observations and >= 1 action")
    rng = np.random.default_rng(seed)
    actions = [f"a{i}" for i in range(num_actions)]
    b = _ModelBuilder(actions)
    labels = [f"z{i}" for i in range(num_obs - 1)]
    for s in range(num_states - 1):
        b.state(labels[0] if s == 0 else labels[int(rng.integers(0, num_obs - 1))])
    target = b.target()
    for s in range(num_states - 1):
        pool = np.arange(s + 1, num_states) if acyclic else np.arange(num_states)
        for action in actions:
            size = int(rng.integers(1, min(max_support, len(pool)) + 1))
            succ = rng.choice(pool, size=size, replace=False)
            weights = rng.integers(1, 4, size=size)
            if 12 % int(weights.sum()):
                weights = np.ones(size, dtype=int)
            probs = {int(t): float(w) / float(weights.sum()) for t, w in zip(succ, weights)}
            b.move(s, action, probs, reward=float(rng.integers(1, 4)))
    return b.build(0, target_label=b.obs_labels[b.obs_of[target]])
