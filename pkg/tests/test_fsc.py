import math

import pytest

from pomdpfsc import ConfigurationError, ControllerError, Fsc, evaluate, fsc_size, induced_mc
from pomdpfsc.fsc import UNDEFINED, default_cutoff_fsc, posterior_sets

TARGET, YELLOW, START = 0, 1, 2
ALPHA, BETA = 0, 1


def test_always_alpha_takes_four_expected_steps(fig2a, min_reward):
    fsc = Fsc.memoryless([ALPHA, ALPHA, ALPHA])

    result = evaluate(fig2a, fsc, min_reward(fig2a))

    assert result.value == pytest.approx(4.0)


def test_evaluate_reports_every_defined_pair(fig2a, min_reward):
    fsc = Fsc.memoryless([ALPHA, ALPHA, ALPHA])
    left, right = fig2a.states_by_obs[YELLOW]

    result = evaluate(fig2a, fsc, min_reward(fig2a))

    assert sorted([result.at(left, 0), result.at(right, 0)]) == pytest.approx([2.0, 4.0])
    assert result.at(fig2a.states_by_obs[TARGET][0], 0) == 0.0


def test_idling_controller_never_reaches_the_target(fig2a, min_reward):
    fsc = Fsc.memoryless([ALPHA, BETA, ALPHA])

    assert evaluate(fig2a, fsc, min_reward(fig2a)).value == math.inf


def test_reaching_an_undefined_action_raises(fig2a, min_reward):
    fsc = Fsc.build(1, 3, {(0, START): ALPHA}, {(0, START, YELLOW): 0})

    with pytest.raises(ControllerError) as info:
        evaluate(fig2a, fsc, min_reward(fig2a))

    assert info.value.node == 0
    assert fig2a.obs_of[info.value.state] == YELLOW


def test_pairs_leading_to_undefined_rows_are_nan(fig2a, min_reward):
    gamma = {(0, START): ALPHA, (0, YELLOW): ALPHA, (1, YELLOW): ALPHA}
    delta = {(0, START, YELLOW): 0, (0, YELLOW, YELLOW): 0, (0, YELLOW, TARGET): 0}
    fsc = Fsc.build(2, 3, gamma, delta)
    left = fig2a.states_by_obs[YELLOW][0]

    result = evaluate(fig2a, fsc, min_reward(fig2a))

    assert result.value == pytest.approx(4.0)
    assert math.isnan(result.at(left, 1))


def test_reachable_only_evaluation_skips_other_pairs(fig2a, min_reward):
    keys = [(n, z) for n in range(2) for z in range(3)]
    fsc = Fsc.build(2, 3, dict.fromkeys(keys, ALPHA), dict.fromkeys(keys, 0), posterior_unaware=True)

    result = evaluate(fig2a, fsc, min_reward(fig2a), all_pairs=False)

    assert result.value == pytest.approx(4.0)
    assert math.isnan(result.at(fig2a.initial, 1))


def test_memory_model_redirects_high_nodes_to_initial():
    fsc = Fsc.build(
        2,
        2,
        {(0, 0): 0, (0, 1): 1, (1, 0): 1},
        {(0, 0): 1, (0, 1): 0, (1, 0): 0},
        posterior_unaware=True,
        memory_model=(2, 1),
    )

    assert fsc.action(1, 0) == 1
    assert fsc.action(1, 1) == fsc.action(0, 1) == 1
    assert fsc.quotient().gamma[1][1] == 1
    assert fsc.quotient().memory_model is None


def test_fsc_rejects_inconsistent_tables():
    with pytest.raises(ConfigurationError, match="initial node"):
        Fsc(1, 1, ((0,),), (((0,),),))
    with pytest.raises(ConfigurationError, match="out of range"):
        Fsc(1, 0, ((0,),), (((3,),),))
    with pytest.raises(ConfigurationError, match="depends on the posterior"):
        Fsc(2, 0, ((0, 0), (0, 0)), (((0, 1), (0, 0)), ((0, 0), (0, 0))), posterior_unaware=True)
    with pytest.raises(ConfigurationError, match="together"):
        Fsc(1, 0, ((0,),), (((0,),),), explored=1)


def test_check_against_rejects_wrong_observation_count(fig2a, min_reward):
    with pytest.raises(ConfigurationError, match="observations"):
        evaluate(fig2a, Fsc.memoryless([ALPHA, ALPHA]), min_reward(fig2a))


def test_induced_mc_is_a_markov_chain(fig2a):
    product = induced_mc(fig2a, Fsc.memoryless([ALPHA, ALPHA, ALPHA]))

    assert product.mc.is_mc()
    assert product.pairs[0] == (fig2a.initial, 0)
    assert not product.broken


def test_default_cutoff_uses_lowest_action(fig2a):
    fsc = default_cutoff_fsc(fig2a)

    assert fsc.num_nodes == 1
    assert all(fsc.action(0, z) == ALPHA for z in range(fig2a.num_obs))


def test_size_of_memoryless_controller(fig2a):
    fsc = Fsc.memoryless([ALPHA, ALPHA, ALPHA])

    assert fsc_size(fig2a, fsc).total == 6


def test_size_of_posterior_aware_controller_counts_reachable_posteriors(fig2a):
    gamma = {(0, START): ALPHA, (0, YELLOW): ALPHA, (0, TARGET): ALPHA}
    delta = {(0, START, YELLOW): 0, (0, YELLOW, YELLOW): 0, (0, YELLOW, TARGET): 0}
    fsc = Fsc.build(1, 3, gamma, delta)

    size = fsc_size(fig2a, fsc)

    assert posterior_sets(fig2a, fsc)[(0, YELLOW)] == frozenset({YELLOW, TARGET})
    assert size.gamma == 3
    assert size.delta == 2 * 3
    assert UNDEFINED not in fsc.gamma[0]
