import math

import pytest

from pomdpfsc import CannotSplitError, evaluate, full_family
from pomdpfsc.abstraction import build_abstraction, candidate_assignment, check_abstraction, split

BLUE = 1
ALPHA, BETA, GAMMA, DELTA = 0, 1, 2, 3


def test_abstraction_of_memoryless_fig2a_family(fig2a):
    family = full_family(fig2a, [1, 1, 1])

    abstraction = build_abstraction(family)

    assert abstraction.mdp.num_states == 4
    assert abstraction.pairs[0] == (fig2a.initial, 0)
    assert all(n == 0 for _s, n in abstraction.pairs)
    assert abstraction.mdp.actions[0] == "c0"


def test_consistent_optimum_is_realized(fig2a, min_reward):
    spec = min_reward(fig2a)
    family = full_family(fig2a, [1, 1, 1])
    abstraction = build_abstraction(family)

    result = check_abstraction(abstraction, spec)
    fsc = family.realize(candidate_assignment(abstraction, result))

    assert result.consistent
    assert result.optimistic == pytest.approx(4.0)
    assert math.isinf(result.pessimistic)
    assert evaluate(fig2a, fsc, spec, all_pairs=False).value == pytest.approx(4.0)


def test_bounds_contain_every_member(fig2b, min_reward):
    spec = min_reward(fig2b)
    family = full_family(fig2b, [1, 2, 1])

    result = check_abstraction(build_abstraction(family), spec)

    for fsc in family.members():
        value = evaluate(fig2b, fsc, spec, all_pairs=False).value
        assert result.lower - 1e-6 <= value <= result.upper + 1e-6


def test_fully_observable_bound_is_inconsistent_on_fig2b(fig2b, min_reward):
    spec = min_reward(fig2b)
    family = full_family(fig2b, [1, 1, 1])

    result = check_abstraction(build_abstraction(family), spec)

    assert result.lower == pytest.approx(3.0)
    assert not result.consistent
    assert result.inconsistent_holes() == [family.layout.action_hole[(BLUE, 0)]]
    assert result.used[family.layout.action_hole[(BLUE, 0)]] == frozenset({ALPHA, BETA, GAMMA})


def test_split_deals_used_options_to_both_halves(fig2b, min_reward):
    spec = min_reward(fig2b)
    family = full_family(fig2b, [1, 1, 1])
    hole = family.layout.action_hole[(BLUE, 0)]
    result = check_abstraction(build_abstraction(family), spec)

    left, right = split(family, result)

    assert left.options[hole] == (ALPHA, GAMMA)
    assert right.options[hole] == (BETA, DELTA)
    assert left.size() + right.size() == family.size()


def test_singleton_family_cannot_split(fig2b, min_reward):
    spec = min_reward(fig2b)
    family = full_family(fig2b, [1, 1, 1])
    for hole, options in enumerate(family.options):
        family = family.with_options(hole, options[:1])
    result = check_abstraction(build_abstraction(family), spec)

    with pytest.raises(CannotSplitError):
        split(family, result)
