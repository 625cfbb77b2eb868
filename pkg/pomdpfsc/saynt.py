"""The anytime loop alternating inductive search and belief exploration.

Each iteration runs an inductive phase (abstraction-refinement over families
of growing memory) and then a belief phase (resumed belief exploration with
cut-offs taken from the inductive controller). After every iteration the best
controllers of both kinds are yielded; their values only ever improve.

The standalone modes and the two one-shot combinations reuse the same
phases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

from .belief import BeliefFragment, action_sets, check_fragment, extract_belief_fsc, fragment_stats, unfold
from .budget import CancellationToken, Deadline, Stopwatch
from .errors import ConfigurationError
from .family import FamilySpace, full_family
from .formatting import format_sets, json_safe
from .fsc import Fsc, FscSize, fsc_size
from .inductive import SearchStats, TraceSink, improves, memory_model_from, synthesize
from .models import Pomdp, Specification

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SayntConfig:
    """Time budgets in seconds; ``timeout`` is the global budget."""

    timeout: float
    inductive_timeout: float = 60.0
    belief_timeout: float = 10.0
    max_beliefs: int = 100000
    posterior_unaware: bool = True
    invert_restriction: bool = False
    max_memory: Optional[int] = None
    max_iterations: Optional[int] = None

    def validate(self) -> None:
        if self.inductive_timeout <= 0:
            raise ConfigurationError(f"inductive timeout must be positive, got {self.inductive_timeout}")
        if self.belief_timeout <= 0:
            raise ConfigurationError(f"belief timeout must be positive, got {self.belief_timeout}")
        if self.timeout < self.inductive_timeout + self.belief_timeout:
            raise ConfigurationError(
                f"timeout {self.timeout} is shorter than one inductive plus one belief phase "
                f"({self.inductive_timeout} + {self.belief_timeout})"
            )
        if self.max_beliefs < 0:
            raise ConfigurationError("max_beliefs must be non-negative")
        if self.max_memory is not None and self.max_memory < 1:
            raise ConfigurationError("max_memory must be at least 1")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be at least 1")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    fsc_inductive: Optional[Fsc]
    value_inductive: Optional[float]
    fsc_belief: Optional[Fsc]
    value_belief: Optional[float]
    size_inductive: Optional[FscSize]
    size_belief: Optional[FscSize]
    memory_model: Tuple[int, ...]
    explored: int
    frontier: int
    queries: int
    wall_ms: float

    def as_json(self) -> Dict[str, object]:
        def size(s: Optional[FscSize]) -> Optional[Dict[str, int]]:
            return None if s is None else {"gamma": s.gamma, "delta": s.delta, "total": s.total}

        return json_safe(
            {
                "iteration": self.iteration,
                "value_inductive": self.value_inductive,
                "value_belief": self.value_belief,
                "size_inductive": size(self.size_inductive),
                "size_belief": size(self.size_belief),
                "memory_model": list(self.memory_model),
                "explored": self.explored,
                "frontier": self.frontier,
                "queries": self.queries,
                "wall_ms": round(self.wall_ms, 3),
            }
        )


def _better_of(spec: Specification, a: Optional[float], b: Optional[float]) -> Optional[float]:
    if a is None:
        return b
    if b is None:
        return a
    return a if spec.better(a, b) else b


@dataclass
class SayntResult:
    """Collected iteration records with best-value accessors."""

    spec: Specification
    records: List[IterationRecord] = field(default_factory=list)
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def value_inductive(self) -> Optional[float]:
        return self.records[-1].value_inductive if self.records else None

    @property
    def value_belief(self) -> Optional[float]:
        return self.records[-1].value_belief if self.records else None

    @property
    def value(self) -> Optional[float]:
        return _better_of(self.spec, self.value_inductive, self.value_belief)

    @property
    def best_fsc(self) -> Optional[Fsc]:
        if not self.records:
            return None
        last = self.records[-1]
        if last.value_belief is not None and (
            last.value_inductive is None or not improves(self.spec, last.value_inductive, last.value_belief)
        ):
            return last.fsc_belief
        return last.fsc_inductive

    def is_monotone(self) -> bool:
        for attr in ("value_inductive", "value_belief"):
            seen: Optional[float] = None
            for record in self.records:
                v = getattr(record, attr)
                if v is None:
                    if seen is not None:
                        return False
                    continue
                if seen is not None and not self.spec.better(v, seen):
                    return False
                seen = v
        return True


def _restriction(sets: Optional[Sequence[FrozenSet[int]]]) -> Optional[List[Optional[FrozenSet[int]]]]:
    if sets is None:
        return None
    return [s if s else None for s in sets]


def _families(
    pomdp: Pomdp,
    memory_model: Sequence[int],
    posterior_unaware: bool,
    reference: Optional[Sequence[FrozenSet[int]]],
) -> List[FamilySpace]:
    """Worklist for one memory model; a restricted family is popped before the full one."""
    full = full_family(pomdp, memory_model, posterior_unaware)
    if reference is None:
        return [full]
    restricted = full_family(pomdp, memory_model, posterior_unaware, _restriction(reference))
    return [full, restricted]


class _InductiveState:
    """Memory schedule, worklist and incumbent of the inductive side, persisted across phases."""

    def __init__(
        self,
        pomdp: Pomdp,
        spec: Specification,
        *,
        posterior_unaware: bool,
        max_memory: Optional[int],
        memory_model: Optional[Sequence[int]] = None,
        reference: Optional[Sequence[FrozenSet[int]]] = None,
        stats: Optional[SearchStats] = None,
        trace: Optional[TraceSink] = None,
    ) -> None:
        self.pomdp = pomdp
        self.spec = spec
        self.posterior_unaware = posterior_unaware
        self.max_memory = max_memory
        self.mu: Tuple[int, ...] = tuple(memory_model) if memory_model is not None else (1,) * pomdp.num_obs
        self.k = min(self.mu)
        self.stats = stats or SearchStats()
        self.trace = trace
        self.best: Optional[Fsc] = None
        self.value: Optional[float] = None
        self.done = False
        self.stats.memory_history.append(self.mu)
        self.worklist = _families(pomdp, self.mu, posterior_unaware, reference)

    def run(self, deadline: Deadline, reference: Optional[Sequence[FrozenSet[int]]] = None) -> None:
        """Search until ``deadline``; with ``reference`` the restricted family of the current model goes first."""
        if reference is not None:
            self._prefer_restricted(reference)
        while not self.done and not deadline.expired():
            result = synthesize(
                self.pomdp,
                self.worklist[-1],
                self.spec,
                self.value,
                deadline,
                worklist=self.worklist,
                stats=self.stats,
                trace=self.trace,
            )
            self.worklist = result.remaining
            if result.best is not None:
                self.best, self.value = result.best, result.value
            if not result.exhausted:
                break
            step = max(self.k + 1, min(self.mu) + 1)
            if self.max_memory is not None and step > self.max_memory:
                logger.info("inductive: families up to %d nodes exhausted", self.k)
                self.done = True
                break
            self.k = step
            self.reset(tuple(max(m, self.k) for m in self.mu), reference)

    def _prefer_restricted(self, reference: Sequence[FrozenSet[int]]) -> None:
        if self.done or (self.worklist and self.worklist[-1].restricted):
            return
        restricted = full_family(self.pomdp, self.mu, self.posterior_unaware, _restriction(reference))
        self.worklist.append(restricted)
        logger.debug("inductive: restricted family queued ahead of %d open subfamilies", len(self.worklist) - 1)

    def reset(self, mu: Tuple[int, ...], reference: Optional[Sequence[FrozenSet[int]]] = None) -> None:
        """Replace the worklist with the family of ``mu``; the escalation counter ``k`` is left alone."""
        self.mu = mu
        self.done = False
        self.stats.memory_history.append(mu)
        self.worklist = _families(self.pomdp, mu, self.posterior_unaware, reference)
        logger.info("inductive: memory model %s%s", list(mu), " (restricted first)" if reference else "")


def iterate_saynt(
    pomdp: Pomdp,
    spec: Specification,
    config: SayntConfig,
    *,
    token: Optional[CancellationToken] = None,
    trace: Optional[TraceSink] = None,
    stats: Optional[SearchStats] = None,
) -> Iterator[IterationRecord]:
    """Yield one :class:`IterationRecord` per iteration until the global timeout."""
    config.validate()
    spec.check(pomdp)
    watch = Stopwatch()
    overall = Deadline.after(config.timeout, token)
    inductive = _InductiveState(
        pomdp,
        spec,
        posterior_unaware=config.posterior_unaware,
        max_memory=config.max_memory,
        stats=stats,
        trace=trace,
    )
    fragment: Optional[BeliefFragment] = None
    fsc_belief: Optional[Fsc] = None
    value_belief: Optional[float] = None
    size_inductive: Optional[FscSize] = None
    size_belief: Optional[FscSize] = None
    sizes_for: Optional[Fsc] = None
    sets: Optional[List[FrozenSet[int]]] = None
    iteration = 0

    def inductive_leads() -> bool:
        return inductive.value is not None and (value_belief is None or improves(spec, inductive.value, value_belief))

    while not overall.expired():
        iteration += 1
        logger.info("iteration %d: inductive phase (k=%d)", iteration, inductive.k)
        restrict = sets is not None and inductive_leads() != config.invert_restriction
        reference = sets if restrict else None
        inductive.run(overall.sooner(config.inductive_timeout), reference)

        logger.info("iteration %d: belief phase", iteration)
        fragment = unfold(
            pomdp,
            spec,
            inductive.best,
            max_beliefs=config.max_beliefs,
            deadline=overall.sooner(config.belief_timeout),
            fragment=fragment,
        )
        value, sigma = check_fragment(fragment, spec)
        sets = action_sets(sigma, fragment)
        logger.debug("belief policy actions: %s", format_sets([sorted(s) for s in sets], pomdp.obs_labels))
        if value_belief is None or improves(spec, value, value_belief):
            fsc_belief, value_belief = extract_belief_fsc(fragment, sigma), value
            size_belief = fsc_size(pomdp, fsc_belief)
            logger.info("belief: new best %.10g (%d explored)", value, fragment.num_explored)

        if not inductive_leads() and any(m < len(s) for m, s in zip(inductive.mu, sets)):
            inductive.reset(memory_model_from(sets))

        if inductive.best is not None and inductive.best is not sizes_for:
            size_inductive = fsc_size(pomdp, inductive.best)
            sizes_for = inductive.best
        yield IterationRecord(
            iteration=iteration,
            fsc_inductive=inductive.best,
            value_inductive=inductive.value,
            fsc_belief=fsc_belief,
            value_belief=value_belief,
            size_inductive=size_inductive,
            size_belief=size_belief,
            memory_model=inductive.mu,
            explored=fragment.num_explored,
            frontier=len(fragment.queue),
            queries=inductive.stats.queries,
            wall_ms=watch.elapsed_ms(),
        )
        if config.max_iterations is not None and iteration >= config.max_iterations:
            break


def run_saynt(
    pomdp: Pomdp,
    spec: Specification,
    config: SayntConfig,
    *,
    token: Optional[CancellationToken] = None,
    trace: Optional[TraceSink] = None,
    on_record: Optional[Callable[[IterationRecord], None]] = None,
) -> SayntResult:
    """Run the anytime loop to completion, collecting (and optionally streaming) every record."""
    result = SayntResult(spec=spec)
    for record in iterate_saynt(pomdp, spec, config, token=token, trace=trace, stats=result.stats):
        result.records.append(record)
        if on_record is not None:
            on_record(record)
    return result


@dataclass
class BeliefOutcome:
    fsc: Fsc
    value: float
    fragment: BeliefFragment
    sigma: Dict[int, int]


def _belief_search(
    pomdp: Pomdp,
    spec: Specification,
    deadline: Deadline,
    cutoff_fsc: Optional[Fsc],
    max_beliefs: int,
) -> BeliefOutcome:
    fragment: Optional[BeliefFragment] = None
    best: Optional[BeliefOutcome] = None
    watch = Stopwatch()
    explored = -1
    while True:
        fragment = unfold(pomdp, spec, cutoff_fsc, max_beliefs=max_beliefs, deadline=deadline, fragment=fragment)
        value, sigma = check_fragment(fragment, spec)
        logger.debug("belief round: %s", fragment_stats(fragment, value, watch.elapsed_ms()))
        if best is None or improves(spec, value, best.value):
            best = BeliefOutcome(extract_belief_fsc(fragment, sigma), value, fragment, sigma)
        else:
            best.fragment, best.sigma = fragment, sigma
        if not fragment.queue or deadline.expired() or fragment.num_explored == explored:
            return best
        explored = fragment.num_explored


def explore_beliefs(
    pomdp: Pomdp,
    spec: Specification,
    t: float,
    cutoff_fsc: Optional[Fsc] = None,
    *,
    max_beliefs: int = 100000,
    token: Optional[CancellationToken] = None,
) -> BeliefOutcome:
    """Belief exploration alone, keeping the fragment and belief policy of the best round.

    Without ``cutoff_fsc`` the lowest-action memoryless FSC cuts off.
    """
    spec.check(pomdp)
    outcome = _belief_search(pomdp, spec, Deadline.after(t, token), cutoff_fsc, max_beliefs)
    logger.info("belief-only: %.10g with %d explored beliefs", outcome.value, outcome.fragment.num_explored)
    return outcome


def run_belief_only(
    pomdp: Pomdp,
    spec: Specification,
    t: float,
    cutoff_fsc: Optional[Fsc] = None,
    *,
    max_beliefs: int = 100000,
    token: Optional[CancellationToken] = None,
) -> Tuple[Fsc, float]:
    outcome = explore_beliefs(pomdp, spec, t, cutoff_fsc, max_beliefs=max_beliefs, token=token)
    return outcome.fsc, outcome.value


def _inductive_search(
    pomdp: Pomdp,
    spec: Specification,
    deadline: Deadline,
    reference: Optional[Sequence[FrozenSet[int]]],
    *,
    posterior_unaware: bool,
    max_memory: Optional[int],
    stats: Optional[SearchStats],
    trace: Optional[TraceSink],
) -> _InductiveState:
    memory_model = memory_model_from(reference) if reference is not None else None
    state = _InductiveState(
        pomdp,
        spec,
        posterior_unaware=posterior_unaware,
        max_memory=max_memory,
        memory_model=memory_model,
        reference=reference,
        stats=stats,
        trace=trace,
    )
    state.run(deadline, reference)
    return state


def run_inductive_only(
    pomdp: Pomdp,
    spec: Specification,
    t: float,
    reference_policy: Optional[Sequence[FrozenSet[int]]] = None,
    *,
    posterior_unaware: bool = True,
    max_memory: Optional[int] = None,
    token: Optional[CancellationToken] = None,
    stats: Optional[SearchStats] = None,
    trace: Optional[TraceSink] = None,
) -> Tuple[Optional[Fsc], Optional[float]]:
    """Inductive search with growing memory.

    ``reference_policy`` gives per-observation action sets of a belief policy;
    it seeds the memory model and a restricted family searched first at every
    memory size.
    """
    spec.check(pomdp)
    state = _inductive_search(
        pomdp,
        spec,
        Deadline.after(t, token),
        reference_policy,
        posterior_unaware=posterior_unaware,
        max_memory=max_memory,
        stats=stats,
        trace=trace,
    )
    return state.best, state.value


def run_oneshot_q1(
    pomdp: Pomdp,
    spec: Specification,
    t_inductive: float,
    t_belief: float,
    *,
    max_beliefs: int = 100000,
    posterior_unaware: bool = True,
    max_memory: Optional[int] = None,
    token: Optional[CancellationToken] = None,
) -> Tuple[Fsc, float]:
    """Inductive search, then belief exploration cut off by the inductive controller."""
    cutoff, _value = run_inductive_only(
        pomdp, spec, t_inductive, posterior_unaware=posterior_unaware, max_memory=max_memory, token=token
    )
    return run_belief_only(pomdp, spec, t_belief, cutoff, max_beliefs=max_beliefs, token=token)


def run_oneshot_q2(
    pomdp: Pomdp,
    spec: Specification,
    t_belief: float,
    t_inductive: float,
    *,
    max_beliefs: int = 100000,
    posterior_unaware: bool = True,
    max_memory: Optional[int] = None,
    token: Optional[CancellationToken] = None,
    stats: Optional[SearchStats] = None,
) -> Tuple[Optional[Fsc], Optional[float]]:
    """Belief exploration, then inductive search guided by the belief policy's action sets."""
    spec.check(pomdp)
    outcome = _belief_search(pomdp, spec, Deadline.after(t_belief, token), None, max_beliefs)
    reference = action_sets(outcome.sigma, outcome.fragment)
    return run_inductive_only(
        pomdp,
        spec,
        t_inductive,
        reference,
        posterior_unaware=posterior_unaware,
        max_memory=max_memory,
        token=token,
        stats=stats,
    )


__all__ = [
    "SayntConfig",
    "IterationRecord",
    "SayntResult",
    "BeliefOutcome",
    "explore_beliefs",
    "iterate_saynt",
    "run_saynt",
    "run_belief_only",
    "run_inductive_only",
    "run_oneshot_q1",
    "run_oneshot_q2",
]
