import pytest

from pomdpfsc import BeliefError, Fsc, Specification, check_mdp, evaluate, fsc_size, full_family
from pomdpfsc.fsc import posterior_sets
from pomdpfsc.belief import (
    Belief,
    action_sets,
    belief_label,
    belief_successor,
    check_fragment,
    cutoff_value,
    extract_belief_fsc,
    fragment_mdp,
    fragment_stats,
    new_fragment,
    obs_prob,
    unfold,
)
from pomdpfsc.budget import CancellationToken, Deadline

ALPHA, BETA, GAMMA = 0, 1, 2
L, R, S = 1, 2, 3


def test_alpha_from_start_observes_yellow_with_certainty(fig2a):
    b = Belief.point(fig2a, S)
    yellow = fig2a.obs_of[L]

    assert obs_prob(fig2a, b, ALPHA, yellow) == pytest.approx(1.0)
    succ = belief_successor(fig2a, b, ALPHA, yellow)
    assert succ.dist.get(L) == pytest.approx(0.5)
    assert succ.dist.get(R) == pytest.approx(0.5)
    assert belief_label(fig2a, succ) == "yellow {s1: 1/2, s2: 1/2}"


def test_bayes_update_conditions_on_staying_yellow(fig2a):
    yellow = fig2a.obs_of[L]
    b = belief_successor(fig2a, Belief.point(fig2a, S), ALPHA, yellow)

    succ = belief_successor(fig2a, b, ALPHA, yellow)

    assert obs_prob(fig2a, b, ALPHA, yellow) == pytest.approx(0.625)
    assert succ.dist.get(L) == pytest.approx(0.4)
    assert succ.dist.get(R) == pytest.approx(0.6)


def test_successor_of_impossible_observation_raises(fig2a):
    with pytest.raises(BeliefError, match="probability zero"):
        belief_successor(fig2a, Belief.point(fig2a, S), ALPHA, fig2a.target_obs)


def test_belief_keys_ignore_float_noise(fig2a):
    yellow = fig2a.obs_of[L]
    a = Belief(yellow, belief_successor(fig2a, Belief.point(fig2a, S), ALPHA, yellow).dist)
    b = Belief(yellow, type(a.dist)(((L, 0.5 + 1e-15), (R, 0.5 - 1e-15))))

    assert a.key == b.key


def test_fig2b_belief_mdp_is_finite_and_solved_exactly(fig2b, min_reward):
    spec = min_reward(fig2b)

    fragment = unfold(fig2b, spec, max_beliefs=100)
    value, sigma = check_fragment(fragment, spec)

    assert not fragment.queue
    assert fragment.num_explored == 7
    assert fragment_mdp(fragment, spec).mdp.num_states == 9
    assert value == pytest.approx(3.0)
    assert sigma[0] == GAMMA


def test_fig2b_belief_policy_uses_three_blue_actions(fig2b, min_reward):
    spec = min_reward(fig2b)
    fragment = unfold(fig2b, spec, max_beliefs=100)
    _value, sigma = check_fragment(fragment, spec)

    sets = action_sets(sigma, fragment)

    assert len(sets[fig2b.obs_labels.index("blue")]) == 3
    assert len(sets[fig2b.obs_labels.index("yellow")]) == 1
    assert sets[fig2b.target_obs] == frozenset()


def test_fig2a_fragment_is_cut_off_by_the_default_controller(fig2a, min_reward):
    spec = min_reward(fig2a)

    fragment = unfold(fig2a, spec, max_beliefs=3)
    value, _sigma = check_fragment(fragment, spec)

    assert fragment.queue
    assert set(fragment.cutoffs) == set(fragment.queue)
    assert value == pytest.approx(4.0)


def test_unfold_resumes_without_dropping_beliefs(fig2a, min_reward):
    spec = min_reward(fig2a)
    fragment = unfold(fig2a, spec, max_beliefs=2)
    before = list(fragment.explored)

    again = unfold(fig2a, spec, max_beliefs=2, fragment=fragment)

    assert again is fragment
    assert again.explored[: len(before)] == before
    assert again.num_explored > len(before)


def test_unfold_rejects_fragment_of_other_model(fig2a, fig2b, min_reward):
    fragment = new_fragment(fig2a)

    with pytest.raises(BeliefError, match="different model"):
        unfold(fig2b, min_reward(fig2b), max_beliefs=1, fragment=fragment)


def test_expired_deadline_leaves_only_the_cutoff(fig2a, min_reward):
    spec = min_reward(fig2a)
    token = CancellationToken()
    token.cancel()

    fragment = unfold(fig2a, spec, max_beliefs=100, deadline=Deadline.after(None, token))
    value, sigma = check_fragment(fragment, spec)

    assert fragment.num_explored == 0
    assert fragment.frontier == [0]
    assert sigma == {}
    assert value == pytest.approx(4.0)


def test_cutoff_value_picks_best_node_for_belief(fig2a, min_reward):
    spec = min_reward(fig2a)
    yellow = fig2a.obs_of[L]
    # node 0 plays alpha on yellow, node 1 idles with beta.
    fsc = Fsc.build(
        2,
        3,
        {(0, yellow): ALPHA, (1, yellow): BETA, (0, fig2a.obs_of[S]): ALPHA},
        {(0, yellow): 0, (1, yellow): 1, (0, fig2a.obs_of[S]): 0},
        posterior_unaware=True,
    )
    values = evaluate(fig2a, fsc, spec)
    b = belief_successor(fig2a, Belief.point(fig2a, S), ALPHA, yellow)

    value, node = cutoff_value(b, values)

    assert node == 0
    assert value == pytest.approx(3.0)


def test_belief_fsc_reproduces_fragment_value(fig2a, fig2b, min_reward):
    for pomdp, budget in ((fig2b, 100), (fig2a, 4)):
        spec = min_reward(pomdp)
        fragment = unfold(pomdp, spec, max_beliefs=budget)
        value, sigma = check_fragment(fragment, spec)

        fsc = extract_belief_fsc(fragment, sigma)

        assert fsc.explored == fragment.num_explored
        assert evaluate(pomdp, fsc, spec).value == pytest.approx(value, abs=1e-6)


def test_fragment_stats_are_json_ready(fig2a, min_reward):
    spec = min_reward(fig2a)
    fragment = unfold(fig2a, spec, max_beliefs=2)
    value, _ = check_fragment(fragment, spec)

    stats = fragment_stats(fragment, value, 1.23456)

    assert stats["explored"] == fragment.num_explored
    assert stats["frontier"] == len(fragment.queue)
    assert stats["cutoff_fsc_value"] == pytest.approx(4.0)
    assert stats["wall_ms"] == 1.235


def test_belief_fsc_size_counts_posteriors_of_every_explored_belief(fig2b, min_reward):
    spec = min_reward(fig2b)
    fragment = unfold(fig2b, spec, max_beliefs=100)
    _value, sigma = check_fragment(fragment, spec)
    fsc = extract_belief_fsc(fragment, sigma)
    base = fsc_size(fig2b, fragment.cutoff_fsc)
    posts = sum(len({fragment.beliefs[j].obs for j in fragment.rows[b][sigma[b]]}) for b in fragment.explored)
    reached = sum(len(v) for (n, _z), v in posterior_sets(fig2b, fsc).items() if n < fsc.explored)

    size = fsc_size(fig2b, fsc)

    assert size.gamma == base.gamma + len(fragment.explored)
    assert size.delta == base.delta + 2 * posts
    assert posts > reached


def test_belief_fsc_size_adds_explored_beliefs_to_cutoff_size(fig2a, min_reward):
    spec = min_reward(fig2a)
    family = full_family(fig2a, [1, 2, 1])
    cutoff = family.realize({h: ALPHA for h in family.layout.action_hole.values()})
    fragment = unfold(fig2a, spec, cutoff, max_beliefs=3)
    _value, sigma = check_fragment(fragment, spec)

    size = fsc_size(fig2a, extract_belief_fsc(fragment, sigma))

    assert fsc_size(fig2a, cutoff).gamma == 4
    assert size.gamma == 4 + len(fragment.explored)


def test_larger_budget_never_worsens_the_fragment_value(fig2a, min_reward):
    spec = min_reward(fig2a)

    values = [check_fragment(unfold(fig2a, spec, max_beliefs=n), spec)[0] for n in (1, 2, 4, 8, 16)]

    assert all(later <= earlier + 1e-9 for earlier, later in zip(values, values[1:]))
    assert values[0] == pytest.approx(4.0)


def test_dominating_cutoff_never_worsens_the_fragment_value(fig2a, min_reward):
    spec = min_reward(fig2a)
    always_alpha = Fsc.memoryless([ALPHA] * fig2a.num_obs)
    always_beta = Fsc.memoryless([BETA] * fig2a.num_obs)

    good, _ = check_fragment(unfold(fig2a, spec, always_alpha, max_beliefs=3), spec)
    bad, _ = check_fragment(unfold(fig2a, spec, always_beta, max_beliefs=3), spec)

    assert good <= bad
    assert good == pytest.approx(4.0)


def test_lanes_belief_mdp_unfolds_completely(lanes, min_reward):
    spec = min_reward(lanes)

    fragment = unfold(lanes, spec, max_beliefs=10000)
    value, _sigma = check_fragment(fragment, spec)
    exact, _policy = check_mdp(lanes.mdp, spec)

    assert not fragment.queue
    assert fragment.num_explored == lanes.num_states
    assert value == pytest.approx(exact[lanes.initial], rel=1e-9)


def test_check_fragment_recomputes_cutoffs_for_another_spec(fig2a, min_reward):
    spec = min_reward(fig2a)
    fragment = unfold(fig2a, Specification.for_pomdp(fig2a, "max-prob"), max_beliefs=3)

    value, _sigma = check_fragment(fragment, spec)

    assert value == pytest.approx(4.0)
    assert fragment.cutoff_spec == spec
    assert all(fragment.cutoffs[b][0] > 1.0 for b in fragment.queue)
