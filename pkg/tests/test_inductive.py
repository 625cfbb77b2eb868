import json
import math

import pytest

from pomdpfsc import evaluate, full_family
from pomdpfsc.budget import CancellationToken, Deadline
from pomdpfsc.inductive import (
    SearchStats,
    brute_force_family_optimum,
    improves,
    memory_model_from,
    synthesize,
)
from pomdpfsc.models import Objective, Specification


def test_improves_respects_direction_and_tolerance():
    low = Specification(Objective.MIN_REWARD, 0)
    high = Specification(Objective.MAX_PROB, 0)

    assert improves(low, 3.0, None)
    assert improves(low, 3.0, 4.0)
    assert not improves(low, 4.0 - 1e-12, 4.0)
    assert improves(high, 0.9, 0.5)
    assert not improves(high, math.nan, 0.5)
    assert improves(low, 5.0, math.inf)


def test_memory_model_from_action_sets():
    assert memory_model_from([frozenset(), frozenset({0, 1}), frozenset({2})]) == (1, 2, 1)


def test_memoryless_search_on_fig2a(fig2a, min_reward):
    result = synthesize(fig2a, full_family(fig2a, [1, 1, 1]), min_reward(fig2a))

    assert result.value == pytest.approx(4.0)
    assert result.exhausted
    assert result.stats.queries >= 1
    assert result.stats.queries_to_best >= 1


def test_incumbent_prunes_whole_family(fig2a, min_reward):
    result = synthesize(fig2a, full_family(fig2a, [1, 1, 1]), min_reward(fig2a), incumbent_value=4.0)

    assert result.best is None
    assert result.value == 4.0
    assert result.stats.pruned == 1


def test_trace_events_are_json_lines(fig2b, min_reward):
    events = []

    synthesize(fig2b, full_family(fig2b, [1, 1, 1]), min_reward(fig2b), trace=events.append)

    kinds = {e["event"] for e in events}
    assert {"checked", "split", "improved"} <= kinds
    for event in events:
        json.dumps(event)
        assert set(event) == {"event", "family_size", "restricted", "bounds", "incumbent", "wall_ms"}


def test_expired_deadline_returns_open_worklist(fig2b, min_reward):
    token = CancellationToken()
    token.cancel()
    family = full_family(fig2b, [1, 2, 1])

    result = synthesize(fig2b, family, min_reward(fig2b), deadline=Deadline.after(None, token))

    assert result.best is None
    assert not result.exhausted
    assert result.remaining == [family]


def test_search_resumes_from_worklist(fig2b, min_reward):
    spec = min_reward(fig2b)
    stats = SearchStats()
    family = full_family(fig2b, [1, 3, 1])

    stopped = synthesize(fig2b, family, spec, deadline=Deadline.after(None, _cancelled()), stats=stats)
    resumed = synthesize(fig2b, family, spec, stopped.value, worklist=stopped.remaining, stats=stats)

    assert resumed.value == pytest.approx(3.0)
    assert resumed.stats is stats


def _cancelled():
    token = CancellationToken()
    token.cancel()
    return token


@pytest.mark.parametrize(("mu", "expected"), [([1, 1, 1], math.inf), ([2, 2, 2], 5.0), ([1, 3, 1], 3.0)])
def test_unaware_optima_on_fig2b(fig2b, min_reward, mu, expected):
    result = synthesize(fig2b, full_family(fig2b, mu), min_reward(fig2b))

    assert result.value == pytest.approx(expected)
    assert result.exhausted
    if result.best is not None:
        assert evaluate(fig2b, result.best, min_reward(fig2b), all_pairs=False).value == pytest.approx(expected)


def test_search_agrees_with_enumeration(fig2b, min_reward):
    spec = min_reward(fig2b)
    family = full_family(fig2b, [1, 2, 1])

    expected, _fsc = brute_force_family_optimum(fig2b, family, spec)
    result = synthesize(fig2b, family, spec)

    assert result.value == pytest.approx(expected)


def test_unaware_two_node_controller_on_fig4a(fig4a, min_reward):
    result = synthesize(fig4a, full_family(fig4a, [2] * fig4a.num_obs), min_reward(fig4a))

    assert result.value == pytest.approx(14.0)


@pytest.mark.performance
def test_aware_two_node_controller_on_fig4a(fig4a, min_reward):
    family = full_family(fig4a, [2] * fig4a.num_obs, posterior_unaware=False)

    result = synthesize(fig4a, family, min_reward(fig4a))

    assert result.value == pytest.approx(12.0)


@pytest.mark.performance
def test_unaware_controllers_need_four_nodes_on_fig4a(fig4a, min_reward):
    spec = min_reward(fig4a)

    four = synthesize(fig4a, full_family(fig4a, [4] * fig4a.num_obs), spec)
    three = synthesize(fig4a, full_family(fig4a, [3] * fig4a.num_obs), spec, incumbent_value=12.0 + 1e-6)

    assert four.value == pytest.approx(12.0)
    assert three.best is None
