import pytest

from pomdpfsc import ConfigurationError, Distribution, Objective, Specification, make_pomdp, validate
from pomdpfsc.models import Mdp, reachable_states


def _two_state_pomdp(**overrides):
    kwargs = dict(
        num_states=2,
        initial=0,
        actions=("go",),
        obs_labels=("start", "goal"),
        obs_of=(0, 1),
        target_obs=1,
        transitions={(0, 0): Distribution.point(1), (1, 0): Distribution.point(1)},
        rewards={(0, 0): 1.0, (1, 0): 0.0},
    )
    kwargs.update(overrides)
    return make_pomdp(**kwargs)


def test_distribution_from_mapping_sorts_and_drops_zero_mass():
    dist = Distribution.from_mapping({3: 0.25, 1: 0.75, 2: 0.0})

    assert dist.support == (1, 3)
    assert dist.get(3) == 0.25
    assert dist.get(2) == 0.0
    assert dist.mass() == pytest.approx(1.0)


def test_make_pomdp_derives_targets_from_target_observation():
    pomdp = _two_state_pomdp()

    assert pomdp.mdp.targets == frozenset({1})
    assert pomdp.is_target(1)
    assert not pomdp.is_target(0)
    assert validate(pomdp) == []


def test_validate_reports_non_absorbing_target():
    pomdp = _two_state_pomdp(transitions={(0, 0): Distribution.point(1), (1, 0): Distribution.point(0)})

    errors = validate(pomdp)

    assert any("target not absorbing" in msg for msg in errors)


def test_validate_reports_mass_defect_and_missing_actions():
    pomdp = _two_state_pomdp(
        transitions={(0, 0): Distribution(((1, 0.5),))},
        rewards=None,
    )

    errors = validate(pomdp)

    assert any("mass" in msg for msg in errors)
    assert any("state 1: no enabled action" in msg for msg in errors)


def test_validate_reports_observation_with_inconsistent_actions():
    pomdp = make_pomdp(
        num_states=3,
        initial=0,
        actions=("a", "b"),
        obs_labels=("blue", "goal"),
        obs_of=(0, 0, 1),
        target_obs=1,
        transitions={
            (0, 0): Distribution.point(2),
            (0, 1): Distribution.point(1),
            (1, 0): Distribution.point(2),
            (2, 0): Distribution.point(2),
        },
    )

    errors = validate(pomdp)

    assert any("enable different actions" in msg for msg in errors)


def test_validate_rejects_negative_reward():
    pomdp = _two_state_pomdp(rewards={(0, 0): -1.0})

    assert any("non-negative" in msg for msg in validate(pomdp))


def test_choice_matrix_groups_rows_by_state():
    mdp = Mdp(
        num_states=2,
        initial=0,
        actions=("a", "b"),
        transitions={
            (0, 0): Distribution.point(1),
            (0, 1): Distribution.from_mapping({0: 0.5, 1: 0.5}),
            (1, 1): Distribution.point(1),
        },
    )

    cm = mdp.choices

    assert list(cm.group_start) == [0, 2, 3]
    assert list(cm.actions) == [0, 1, 1]
    assert cm.matrix[1, 0] == pytest.approx(0.5)
    assert not mdp.is_mc()


def test_pomdp_observation_helpers(fig2b):
    blue = fig2b.obs_labels.index("blue")

    assert len(fig2b.obs_actions(blue)) == 4
    assert fig2b.target_obs in fig2b.posteriors(blue)
    assert reachable_states(fig2b.mdp) == frozenset(range(fig2b.num_states))


def test_objective_direction_and_flip():
    assert Objective.MAX_PROB.maximize
    assert not Objective.MIN_REWARD.maximize
    assert Objective.MIN_REWARD.is_reward
    assert Objective.MAX_PROB.flipped() is Objective.MIN_PROB
    assert Objective.MIN_REWARD.flipped() is Objective.MAX_REWARD


def test_specification_parse_rejects_unknown_objective():
    with pytest.raises(ConfigurationError, match="unknown objective"):
        Specification.parse("max-value", 1)


def test_specification_requires_rewards_for_reward_objectives():
    pomdp = _two_state_pomdp(rewards=None)

    with pytest.raises(ConfigurationError, match="reward structure"):
        Specification.for_pomdp(pomdp, "min-reward")
    assert Specification.for_pomdp(pomdp, "max-prob").target == 1


def test_specification_worst_values():
    assert Specification(Objective.MAX_PROB, 0).worst() == 0.0
    assert Specification(Objective.MIN_PROB, 0).worst() == 1.0
    assert Specification(Objective.MIN_REWARD, 0).worst() == float("inf")
    assert Specification(Objective.MIN_REWARD, 0).better(2.0, 3.0)
