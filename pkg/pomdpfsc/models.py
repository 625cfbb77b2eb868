"""Explicit-state probabilistic models.

An :class:`Mdp` stores one optional :class:`Distribution` per (state, action)
pair; a Markov chain is an ``Mdp`` with exactly one enabled action per state.
A :class:`Pomdp` adds a deterministic observation per state. Targets are the
states labelled with the target observation and must be absorbing.

Models are immutable once built. The sparse choice matrix used by the checker
is compiled lazily and cached on the instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError

MASS_TOLERANCE = 1e-9

StateAction = Tuple[int, int]


@dataclass(frozen=True)
class Distribution:
    """Finite distribution as ``(state, probability)`` entries sorted by state."""

    entries: Tuple[Tuple[int, float], ...]

    @staticmethod
    def point(state: int) -> "Distribution":
        return Distribution(((int(state), 1.0),))

    @staticmethod
    def from_mapping(probs: Mapping[int, float]) -> "Distribution":
        return Distribution(tuple(sorted((int(s), float(p)) for s, p in probs.items() if p > 0.0)))

    def __iter__(self) -> Iterator[Tuple[int, float]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(s for s, _ in self.entries)

    def mass(self) -> float:
        return float(sum(p for _, p in self.entries))

    def get(self, state: int, default: float = 0.0) -> float:
        for s, p in self.entries:
            if s == state:
                return p
        return default


@dataclass(frozen=True)
class ChoiceMatrix:
    """Row-grouped sparse encoding of an MDP.

    Row ``r`` is the choice ``(state, actions[r])``; the rows of state ``s``
    are ``group_start[s]:group_start[s + 1]``, ordered by action id.
    """

    group_start: np.ndarray
    actions: np.ndarray
    rows_state: np.ndarray
    matrix: sp.csr_matrix
    rewards: np.ndarray

    @property
    def num_choices(self) -> int:
        return int(self.actions.shape[0])

    def rows_of(self, state: int) -> range:
        return range(int(self.group_start[state]), int(self.group_start[state + 1]))


@dataclass(frozen=True)
class Mdp:
    """Explicit MDP; ``transitions`` maps enabled (state, action) pairs to distributions."""

    num_states: int
    initial: int
    actions: Tuple[str, ...]
    transitions: Mapping[StateAction, Distribution]
    rewards: Optional[Mapping[StateAction, float]] = None
    targets: FrozenSet[int] = field(default_factory=frozenset)

    __hash__ = None  # type: ignore[assignment]

    @property
    def has_rewards(self) -> bool:
        return self.rewards is not None

    @cached_property
    def _enabled(self) -> Tuple[Tuple[int, ...], ...]:
        table: List[List[int]] = [[] for _ in range(self.num_states)]
        for s, a in self.transitions:
            if 0 <= s < self.num_states:
                table[s].append(a)
        return tuple(tuple(sorted(row)) for row in table)

    def enabled(self, state: int) -> Tuple[int, ...]:
        """Enabled action ids of ``state`` in ascending order."""
        return self._enabled[state]

    def distribution(self, state: int, action: int) -> Distribution:
        return self.transitions[(state, action)]

    def reward(self, state: int, action: int) -> float:
        if self.rewards is None:
            return 0.0
        return float(self.rewards.get((state, action), 0.0))

    @cached_property
    def choices(self) -> ChoiceMatrix:
        group_start = np.zeros(self.num_states + 1, dtype=np.int64)
        row_actions: List[int] = []
        row_states: List[int] = []
        row_rewards: List[float] = []
        indptr = [0]
        indices: List[int] = []
        data: List[float] = []
        for s in range(self.num_states):
            for a in self.enabled(s):
                dist = self.transitions[(s, a)]
                for t, p in dist:
                    indices.append(t)
                    data.append(p)
                indptr.append(len(indices))
                row_actions.append(a)
                row_states.append(s)
                row_rewards.append(self.reward(s, a))
            group_start[s + 1] = len(row_actions)
        matrix = sp.csr_matrix(
            (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
            shape=(len(row_actions), self.num_states),
        )
        return ChoiceMatrix(
            group_start=group_start,
            actions=np.asarray(row_actions, dtype=np.int64),
            rows_state=np.asarray(row_states, dtype=np.int64),
            matrix=matrix,
            rewards=np.asarray(row_rewards, dtype=float),
        )

    def is_mc(self) -> bool:
        return all(len(self.enabled(s)) == 1 for s in range(self.num_states))


Mc = Mdp


@dataclass(frozen=True)
class Pomdp:
    """MDP with a deterministic observation per state and a target observation."""

    mdp: Mdp
    obs_of: Tuple[int, ...]
    target_obs: int
    obs_labels: Tuple[str, ...]

    __hash__ = None  # type: ignore[assignment]

    @property
    def num_states(self) -> int:
        return self.mdp.num_states

    @property
    def num_obs(self) -> int:
        return len(self.obs_labels)

    @property
    def initial(self) -> int:
        return self.mdp.initial

    @property
    def actions(self) -> Tuple[str, ...]:
        return self.mdp.actions

    @property
    def has_rewards(self) -> bool:
        return self.mdp.has_rewards

    def is_target(self, state: int) -> bool:
        return self.obs_of[state] == self.target_obs

    @cached_property
    def states_by_obs(self) -> Tuple[Tuple[int, ...], ...]:
        groups: List[List[int]] = [[] for _ in range(self.num_obs)]
        for s, z in enumerate(self.obs_of):
            groups[z].append(s)
        return tuple(tuple(g) for g in groups)

    def obs_actions(self, obs: int) -> Tuple[int, ...]:
        """Act(z): the actions enabled in the states labelled ``obs``."""
        states = self.states_by_obs[obs]
        if not states:
            return ()
        return self.mdp.enabled(states[0])

    @cached_property
    def _posteriors(self) -> Tuple[FrozenSet[int], ...]:
        post: List[set] = [set() for _ in range(self.num_obs)]
        for (s, _a), dist in self.mdp.transitions.items():
            z = self.obs_of[s]
            post[z].update(self.obs_of[t] for t in dist.support)
        return tuple(frozenset(p) for p in post)

    def posteriors(self, obs: int) -> FrozenSet[int]:
        """Observations reachable in one step from any state labelled ``obs``."""
        return self._posteriors[obs]


class Objective(str, Enum):
    MAX_PROB = "max-prob"
    MIN_PROB = "min-prob"
    MAX_REWARD = "max-reward"
    MIN_REWARD = "min-reward"

    @property
    def maximize(self) -> bool:
        return self in (Objective.MAX_PROB, Objective.MAX_REWARD)

    @property
    def is_reward(self) -> bool:
        return self in (Objective.MAX_REWARD, Objective.MIN_REWARD)

    def flipped(self) -> "Objective":
        return {
            Objective.MAX_PROB: Objective.MIN_PROB,
            Objective.MIN_PROB: Objective.MAX_PROB,
            Objective.MAX_REWARD: Objective.MIN_REWARD,
            Objective.MIN_REWARD: Objective.MAX_REWARD,
        }[self]


@dataclass(frozen=True)
class Specification:
    """Indefinite-horizon reachability or expected total reward towards ``target``."""

    objective: Objective
    target: int

    @staticmethod
    def parse(name: Union[str, Objective], target: int) -> "Specification":
        try:
            return Specification(Objective(name), int(target))
        except ValueError as exc:
            choices = ", ".join(o.value for o in Objective)
            raise ConfigurationError(f"unknown objective {name!r}; expected one of: {choices}") from exc

    @staticmethod
    def for_pomdp(pomdp: Pomdp, objective: Union[str, Objective]) -> "Specification":
        spec = Specification.parse(objective, pomdp.target_obs)
        spec.check(pomdp)
        return spec

    @property
    def maximize(self) -> bool:
        return self.objective.maximize

    @property
    def is_reward(self) -> bool:
        return self.objective.is_reward

    def better(self, a: float, b: float) -> bool:
        """``a`` is at least as good as ``b`` under this objective's direction."""
        return a >= b if self.maximize else a <= b

    def worst(self) -> float:
        if self.maximize:
            return 0.0
        return float("inf") if self.is_reward else 1.0

    def with_objective(self, objective: Objective) -> "Specification":
        return Specification(objective, self.target)

    def check(self, model: Union[Pomdp, Mdp]) -> None:
        """Raise :class:`ConfigurationError` if the specification cannot apply to ``model``."""
        if self.is_reward and not model.has_rewards:
            raise ConfigurationError(f"{self.objective.value} requires a reward structure on the model")
        if isinstance(model, Pomdp) and self.target != model.target_obs:
            raise ConfigurationError(
                f"specification targets observation {self.target}, model target observation is {model.target_obs}"
            )


def make_pomdp(
    *,
    num_states: int,
    initial: int,
    actions: Sequence[str],
    obs_labels: Sequence[str],
    obs_of: Sequence[int],
    target_obs: int,
    transitions: Mapping[StateAction, Distribution],
    rewards: Optional[Mapping[StateAction, float]] = None,
) -> Pomdp:
    """Build a :class:`Pomdp`, deriving the MDP target set from ``target_obs``."""
    targets = frozenset(s for s, z in enumerate(obs_of) if z == target_obs)
    mdp = Mdp(
        num_states=int(num_states),
        initial=int(initial),
        actions=tuple(actions),
        transitions=dict(transitions),
        rewards=None if rewards is None else dict(rewards),
        targets=targets,
    )
    return Pomdp(mdp=mdp, obs_of=tuple(int(z) for z in obs_of), target_obs=int(target_obs), obs_labels=tuple(obs_labels))


def _validate_mdp(mdp: Mdp) -> List[str]:
    errors: List[str] = []
    n = mdp.num_states
    if n < 1:
        errors.append("model must have at least one state")
    if not 0 <= mdp.initial < n:
        errors.append(f"initial state {mdp.initial} out of range")
    enabled: Dict[int, int] = {}
    for (s, a), dist in mdp.transitions.items():
        where = f"transition ({s}, {a})"
        if not 0 <= s < n:
            errors.append(f"{where}: state out of range")
            continue
        if not 0 <= a < len(mdp.actions):
            errors.append(f"{where}: action out of range")
            continue
        enabled[s] = enabled.get(s, 0) + 1
        seen: set = set()
        for t, p in dist:
            if not 0 <= t < n:
                errors.append(f"{where}: successor {t} out of range")
            if t in seen:
                errors.append(f"{where}: duplicate successor {t}")
            seen.add(t)
            if not 0.0 < p <= 1.0 + MASS_TOLERANCE:
                errors.append(f"{where}: probability {p} outside (0, 1]")
        mass = dist.mass()
        if abs(mass - 1.0) > MASS_TOLERANCE:
            errors.append(f"{where}: mass {mass:.12g} != 1")
    for s in range(n):
        if s not in enabled:
            errors.append(f"state {s}: no enabled action")
    if mdp.rewards is not None:
        for (s, a), r in mdp.rewards.items():
            if (s, a) not in mdp.transitions:
                errors.append(f"reward ({s}, {a}): action not enabled")
            if r < 0 or r != r:
                errors.append(f"reward ({s}, {a}): value {r} is not a non-negative real")
    for t in sorted(mdp.targets):
        if not 0 <= t < n:
            errors.append(f"target {t} out of range")
            continue
        for a in mdp.enabled(t):
            if mdp.transitions[(t, a)].support != (t,):
                errors.append(f"state {t}: target not absorbing under action {a}")
            if mdp.reward(t, a) != 0.0:
                errors.append(f"state {t}: target reward under action {a} is not zero")
    return errors


def validate(model: Union[Pomdp, Mdp]) -> List[str]:
    """Return every broken model invariant; an empty list means the model is well formed."""
    if isinstance(model, Mdp):
        return _validate_mdp(model)
    errors = _validate_mdp(model.mdp)
    n = model.num_states
    if len(model.obs_of) != n:
        errors.append(f"obs: expected {n} labels, got {len(model.obs_of)}")
        return errors
    if not 0 <= model.target_obs < model.num_obs:
        errors.append(f"target observation {model.target_obs} out of range")
    for s, z in enumerate(model.obs_of):
        if not 0 <= z < model.num_obs:
            errors.append(f"state {s}: observation {z} out of range")
    if errors:
        return errors
    expected = frozenset(s for s, z in enumerate(model.obs_of) if z == model.target_obs)
    if expected != model.mdp.targets:
        errors.append("targets: target set differs from the states labelled with the target observation")
    for z, states in enumerate(model.states_by_obs):
        if not states:
            continue
        first = model.mdp.enabled(states[0])
        for s in states[1:]:
            if model.mdp.enabled(s) != first:
                errors.append(f"observation {z}: states {states[0]} and {s} enable different actions")
                break
    return errors


def reachable_states(mdp: Mdp, sources: Optional[Iterable[int]] = None) -> FrozenSet[int]:
    """States reachable from ``sources`` (default: the initial state) under any action."""
    stack = [mdp.initial] if sources is None else list(sources)
    seen = set(stack)
    while stack:
        s = stack.pop()
        for a in mdp.enabled(s):
            for t in mdp.transitions[(s, a)].support:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
    return frozenset(seen)
