"""Reachability probabilities and expected total rewards for MCs and MDPs.

Markov chains are solved exactly with a sparse linear solve after a
graph-based pre-pass. MDPs go through the same pre-pass, then value iteration
(sup-norm precision ``VI_PRECISION``), extraction of a memoryless policy and a
policy-iteration polish whose evaluations are exact sparse solves. The
reported values are therefore the values of the reported policy.

Expected rewards are ``+inf`` wherever the target is reached with probability
below one (under every policy for ``min-reward``, under some policy for
``max-reward``). Ties between actions go to the lowest action id.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import ConfigurationError
from .models import ChoiceMatrix, Mdp, Objective, Specification

logger = logging.getLogger(__name__)

VI_PRECISION = 1e-8
VI_MAX_ITERATIONS = 10**6
_NEAR_OPTIMAL = 1e-6
_STRICT_GAIN = 1e-12


@dataclass(frozen=True)
class ValueVector:
    """Per-state values for one objective; ``residual`` is the final Bellman residual."""

    values: np.ndarray
    objective: Objective
    residual: float = 0.0

    def __getitem__(self, state: int) -> float:
        return float(self.values[state])

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class MemorylessPolicy:
    """Chosen action id per state."""

    actions: Tuple[int, ...]

    def __getitem__(self, state: int) -> int:
        return self.actions[state]

    def __len__(self) -> int:
        return len(self.actions)


# -- graph pre-pass ---------------------------------------------------------


def _per_state_any(cm: ChoiceMatrix, rows: np.ndarray) -> np.ndarray:
    return np.logical_or.reduceat(rows, cm.group_start[:-1])


def _per_state_all(cm: ChoiceMatrix, rows: np.ndarray) -> np.ndarray:
    return np.logical_and.reduceat(rows, cm.group_start[:-1])


def _hits(matrix: sp.csr_matrix, mask: np.ndarray) -> np.ndarray:
    """Rows with a positive-probability successor inside ``mask``."""
    return (matrix @ mask.astype(float)) > 0.0


def _exists_reach(
    cm: ChoiceMatrix,
    seed: np.ndarray,
    *,
    rows_ok: Optional[np.ndarray] = None,
    blocked: Optional[np.ndarray] = None,
) -> np.ndarray:
    """States from which ``seed`` is reached with positive probability under some choice."""
    reach = seed.copy()
    while True:
        rows = _hits(cm.matrix, reach)
        if rows_ok is not None:
            rows &= rows_ok
        grown = reach | _per_state_any(cm, rows)
        if blocked is not None:
            grown &= ~blocked | seed
        if np.array_equal(grown, reach):
            return reach
        reach = grown


def _forall_reach(cm: ChoiceMatrix, targets: np.ndarray) -> np.ndarray:
    """States from which every choice sequence reaches ``targets`` with positive probability."""
    forced = targets.copy()
    while True:
        grown = forced | _per_state_all(cm, _hits(cm.matrix, forced))
        if np.array_equal(grown, forced):
            return forced
        forced = grown


def _rows_inside(cm: ChoiceMatrix, mask: np.ndarray) -> np.ndarray:
    return ~_hits(cm.matrix, ~mask)


def _almost_sure_max(cm: ChoiceMatrix, targets: np.ndarray) -> np.ndarray:
    """States with maximal reachability probability one."""
    keep = np.ones_like(targets)
    while True:
        rows_ok = _rows_inside(cm, keep)
        reach = _exists_reach(cm, targets & keep, rows_ok=rows_ok) & keep
        if np.array_equal(reach, keep):
            return keep
        keep = reach


def _almost_sure_min(cm: ChoiceMatrix, targets: np.ndarray) -> np.ndarray:
    """States with minimal reachability probability one."""
    avoidable = ~_forall_reach(cm, targets)
    return ~_exists_reach(cm, avoidable, blocked=targets)


def _lowest_rows(cm: ChoiceMatrix, rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """For each state owning a selected row, its lowest selected row."""
    idx = np.flatnonzero(rows)
    states, first = np.unique(cm.rows_state[idx], return_index=True)
    return states, idx[first]


def _attractor_rows(cm: ChoiceMatrix, goal: np.ndarray, candidates: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Rows that move each of ``states`` towards ``goal`` using ``candidates``.

    Returns a per-state row index (-1 where no candidate row makes progress).
    """
    chosen = np.full(goal.shape[0], -1, dtype=np.int64)
    ranked = goal.copy()
    pending = states & ~goal
    while pending.any():
        rows = candidates & _hits(cm.matrix, ranked) & pending[cm.rows_state]
        if not rows.any():
            break
        owners, first = _lowest_rows(cm, rows)
        chosen[owners] = first
        ranked[owners] = True
        pending[owners] = False
    return chosen


# -- exact evaluation -------------------------------------------------------


def _solve(
    cm: ChoiceMatrix,
    rows: np.ndarray,
    values: np.ndarray,
    unknown: np.ndarray,
    rewards: np.ndarray,
) -> np.ndarray:
    """Solve ``x = r + P x`` on ``unknown`` for the chain that uses ``rows``; others stay fixed."""
    out = values.copy()
    idx = np.flatnonzero(unknown)
    if idx.size == 0:
        return out
    sub = cm.matrix[rows[idx]]
    known = np.flatnonzero(~unknown)
    rhs = rewards[rows[idx]].astype(float)
    if known.size:
        fixed = values[known]
        finite = np.isfinite(fixed)
        rhs = rhs + sub[:, known[finite]] @ fixed[finite]
        if not finite.all():
            leak = np.asarray(sub[:, known[~finite]].sum(axis=1)).ravel() > 0.0
            rhs[leak] = np.inf
    system = (sp.identity(idx.size, format="csr") - sub[:, idx]).tocsc()
    out[idx] = np.atleast_1d(spsolve(system, rhs))
    return out


def _chain_values(mdp: Mdp, rows: np.ndarray, objective: Objective) -> np.ndarray:
    cm = mdp.choices
    n = mdp.num_states
    targets = np.zeros(n, dtype=bool)
    targets[list(mdp.targets)] = True
    sub = cm.matrix[rows]
    reach = targets.copy()
    while True:
        grown = reach | _hits(sub, reach)
        if np.array_equal(grown, reach):
            break
        reach = grown
    values = np.zeros(n)
    if objective.is_reward:
        failing = ~reach
        while True:
            grown = failing | (_hits(sub, failing) & ~targets)
            if np.array_equal(grown, failing):
                break
            failing = grown
        values[failing] = np.inf
        unknown = ~failing & ~targets
        rewards = cm.rewards
    else:
        values[targets] = 1.0
        unknown = reach & ~targets
        rewards = np.zeros(cm.num_choices)
    return _solve(cm, rows, values, unknown, rewards)


def _compatible(model: Mdp, spec: Specification) -> None:
    if spec.is_reward and not model.has_rewards:
        raise ConfigurationError(f"{spec.objective.value} requires a reward structure on the model")


def check_mc(mc: Mdp, spec: Specification) -> ValueVector:
    """Exact reachability probabilities or expected total rewards of a Markov chain."""
    _compatible(mc, spec)
    if not mc.is_mc():
        raise ConfigurationError("check_mc requires exactly one enabled action per state")
    rows = mc.choices.group_start[:-1].copy()
    return ValueVector(_chain_values(mc, rows, spec.objective), spec.objective)


def _policy_rows(mdp: Mdp, policy: MemorylessPolicy) -> np.ndarray:
    if len(policy) != mdp.num_states:
        raise ConfigurationError(f"policy covers {len(policy)} states, model has {mdp.num_states}")
    cm = mdp.choices
    rows = np.empty(mdp.num_states, dtype=np.int64)
    for s in range(mdp.num_states):
        enabled = mdp.enabled(s)
        a = policy[s]
        if a not in enabled:
            raise ConfigurationError(f"policy chooses action {a} which is not enabled in state {s}")
        rows[s] = cm.group_start[s] + enabled.index(a)
    return rows


def induced_values(mdp: Mdp, policy: MemorylessPolicy, spec: Specification) -> ValueVector:
    """Values of the Markov chain induced by a memoryless policy."""
    _compatible(mdp, spec)
    return ValueVector(_chain_values(mdp, _policy_rows(mdp, policy), spec.objective), spec.objective)


def policy_mc(mdp: Mdp, policy: MemorylessPolicy) -> Mdp:
    """The Markov chain induced by ``policy`` as a one-action-per-state ``Mdp``."""
    transitions = {}
    rewards = None if mdp.rewards is None else {}
    for s in range(mdp.num_states):
        a = policy[s]
        transitions[(s, a)] = mdp.transitions[(s, a)]
        if rewards is not None:
            rewards[(s, a)] = mdp.reward(s, a)
    return Mdp(mdp.num_states, mdp.initial, mdp.actions, transitions, rewards, mdp.targets)


# -- MDP solver -------------------------------------------------------------


def _group_best(cm: ChoiceMatrix, q: np.ndarray, maximize: bool) -> np.ndarray:
    reducer = np.maximum if maximize else np.minimum
    return reducer.reduceat(q, cm.group_start[:-1])


def _q_values(cm: ChoiceMatrix, values: np.ndarray, rewards: np.ndarray, allowed: np.ndarray, maximize: bool) -> np.ndarray:
    finite = np.isfinite(values)
    q = rewards + cm.matrix @ np.where(finite, values, 0.0)
    if not finite.all():
        leak = _hits(cm.matrix, ~finite)
        q[leak] = np.inf
    q[~allowed] = -np.inf if maximize else np.inf
    return q


def _gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    both_inf = np.isinf(a) & np.isinf(b) & (np.sign(a) == np.sign(b))
    with np.errstate(invalid="ignore"):
        diff = a - b
    gap = np.abs(np.where(both_inf, 0.0, diff))
    return np.nan_to_num(gap, nan=np.inf)


def bellman_residual(mdp: Mdp, spec: Specification, values: np.ndarray) -> float:
    """Sup-norm of ``T(v) - v`` over non-target states (``T`` the optimal Bellman operator)."""
    cm = mdp.choices
    rewards = cm.rewards if spec.is_reward else np.zeros(cm.num_choices)
    allowed = np.ones(cm.num_choices, dtype=bool)
    best = _group_best(cm, _q_values(cm, values, rewards, allowed, spec.maximize), spec.maximize)
    mask = np.ones(mdp.num_states, dtype=bool)
    mask[list(mdp.targets)] = False
    if not mask.any():
        return 0.0
    return float(_gap(best[mask], values[mask]).max())


def check_mdp(mdp: Mdp, spec: Specification) -> Tuple[ValueVector, MemorylessPolicy]:
    """Optimal values and an optimal memoryless policy for ``spec`` on ``mdp``."""
    _compatible(mdp, spec)
    cm = mdp.choices
    n = mdp.num_states
    objective = spec.objective
    maximize = objective.maximize
    targets = np.zeros(n, dtype=bool)
    targets[list(mdp.targets)] = True
    rewards = cm.rewards if objective.is_reward else np.zeros(cm.num_choices)
    allowed = np.ones(cm.num_choices, dtype=bool)
    values = np.zeros(n)
    rows = cm.group_start[:-1].copy()

    if objective is Objective.MAX_PROB:
        unknown = _exists_reach(cm, targets) & ~targets
        values[targets] = 1.0
    elif objective is Objective.MIN_PROB:
        forced = _forall_reach(cm, targets)
        unknown = forced & ~targets
        values[targets] = 1.0
        owners, first = _lowest_rows(cm, _rows_inside(cm, ~forced) & ~forced[cm.rows_state])
        rows[owners] = first
    elif objective is Objective.MAX_REWARD:
        sure = _almost_sure_min(cm, targets)
        unknown = sure & ~targets
        values[~sure] = np.inf
        avoidable = ~_forall_reach(cm, targets)
        owners, first = _lowest_rows(cm, _rows_inside(cm, avoidable) & avoidable[cm.rows_state])
        rows[owners] = first
        escape = _attractor_rows(cm, avoidable, np.ones(cm.num_choices, dtype=bool), ~sure & ~targets)
        rows[escape >= 0] = escape[escape >= 0]
    else:
        sure = _almost_sure_max(cm, targets)
        unknown = sure & ~targets
        values[~sure] = np.inf
        allowed = _rows_inside(cm, sure)

    if objective is Objective.MIN_REWARD and unknown.any():
        proper = _attractor_rows(cm, targets, allowed, unknown)
        rows[unknown] = proper[unknown]
        values = _solve(cm, rows, values, unknown, rewards)

    iterations = 0
    while unknown.any() and iterations < VI_MAX_ITERATIONS:
        iterations += 1
        best = _group_best(cm, _q_values(cm, values, rewards, allowed, maximize), maximize)
        diff = float(_gap(best[unknown], values[unknown]).max())
        values = np.where(unknown, best, values)
        if diff <= VI_PRECISION:
            break
    else:
        if unknown.any():
            logger.warning("value iteration hit the cap of %d iterations", VI_MAX_ITERATIONS)

    if unknown.any():
        q = _q_values(cm, values, rewards, allowed, maximize)
        best = _group_best(cm, q, maximize)
        scale = np.maximum(1.0, np.abs(np.where(np.isfinite(best), best, 0.0)))
        near = allowed & (_gap(q, best[cm.rows_state]) <= _NEAR_OPTIMAL * scale[cm.rows_state])
        if objective in (Objective.MAX_PROB, Objective.MIN_REWARD):
            chosen = _attractor_rows(cm, targets, near, unknown)
            stuck = unknown & (chosen < 0)
            if stuck.any():
                chosen = np.where(stuck, _attractor_rows(cm, targets, allowed, unknown), chosen)
        else:
            chosen = np.full(n, -1, dtype=np.int64)
            owners, first = _lowest_rows(cm, near & unknown[cm.rows_state])
            chosen[owners] = first
        rows[unknown] = chosen[unknown]
        values = _polish(cm, rows, values, unknown, rewards, allowed, maximize)

    residual = bellman_residual(mdp, spec, values)
    logger.debug("check_mdp %s: %d states, %d VI iterations, residual %.3g", objective.value, n, iterations, residual)
    policy = MemorylessPolicy(tuple(int(a) for a in cm.actions[rows]))
    return ValueVector(values, objective, residual), policy


def _polish(
    cm: ChoiceMatrix,
    rows: np.ndarray,
    values: np.ndarray,
    unknown: np.ndarray,
    rewards: np.ndarray,
    allowed: np.ndarray,
    maximize: bool,
) -> np.ndarray:
    """Policy iteration with strict improvements; updates ``rows`` in place."""
    for _ in range(4 * unknown.size + 16):
        values = _solve(cm, rows, values, unknown, rewards)
        q = _q_values(cm, values, rewards, allowed, maximize)
        best = _group_best(cm, q, maximize)
        current = q[rows]
        gain = best - current if maximize else current - best
        gain = np.nan_to_num(gain, nan=0.0, posinf=np.inf)
        scale = np.maximum(1.0, np.abs(np.where(np.isfinite(current), current, 0.0)))
        improve = unknown & (gain > _STRICT_GAIN * scale)
        if not improve.any():
            return values
        exact = q == best[cm.rows_state]
        owners, first = _lowest_rows(cm, exact & improve[cm.rows_state] & allowed)
        rows[owners] = first
    logger.warning("policy iteration did not stabilise; returning the last evaluated policy")
    return _solve(cm, rows, values, unknown, rewards)


def brute_force_optimum(mdp: Mdp, spec: Specification) -> float:
    """Best initial-state value over all memoryless policies (exponential; for tests and tiny models)."""
    import itertools

    best: Optional[float] = None
    choices: Sequence[Sequence[int]] = [mdp.enabled(s) for s in range(mdp.num_states)]
    for combo in itertools.product(*choices):
        value = induced_values(mdp, MemorylessPolicy(tuple(combo)), spec)[mdp.initial]
        if best is None or (value > best if spec.maximize else value < best):
            best = value
    assert best is not None
    return best


__all__ = [
    "VI_PRECISION",
    "VI_MAX_ITERATIONS",
    "ValueVector",
    "MemorylessPolicy",
    "check_mc",
    "check_mdp",
    "induced_values",
    "policy_mc",
    "bellman_residual",
    "brute_force_optimum",
]
