import random

import pytest

from pomdpfsc import (
    Fsc,
    Specification,
    check_fragment,
    evaluate,
    extract_belief_fsc,
    fsc_size,
    full_family,
    gen_random_pomdp,
    synthesize,
    unfold,
)
from pomdpfsc.abstraction import build_abstraction, check_abstraction
from pomdpfsc.inductive import brute_force_family_optimum

SEEDS = range(8)
ORACLE_SEEDS = range(50)
CUTOFF_SEEDS = range(20)
OBJECTIVES = ["max-prob", "min-reward"]


def _random_member(family, rng):
    return family.realize([rng.choice(options) for options in family.options])


@pytest.mark.parametrize("seed", ORACLE_SEEDS)
@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("objective", OBJECTIVES)
def test_search_matches_exhaustive_enumeration(seed, k, objective):
    pomdp = gen_random_pomdp(seed, num_states=5)
    spec = Specification.for_pomdp(pomdp, objective)
    family = full_family(pomdp, [k] * pomdp.num_obs)

    expected, _fsc = brute_force_family_optimum(pomdp, family, spec)
    result = synthesize(pomdp, family, spec)

    assert result.exhausted
    assert result.value == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("seed", ORACLE_SEEDS)
@pytest.mark.parametrize("objective", OBJECTIVES)
def test_abstraction_bounds_contain_every_member(seed, objective):
    pomdp = gen_random_pomdp(seed, num_states=5)
    spec = Specification.for_pomdp(pomdp, objective)
    family = full_family(pomdp, [2] * pomdp.num_obs)

    result = check_abstraction(build_abstraction(family), spec)

    for fsc in family.members():
        value = evaluate(pomdp, fsc, spec, all_pairs=False).value
        assert result.lower - 1e-8 <= value <= result.upper + 1e-8


@pytest.mark.parametrize("seed", CUTOFF_SEEDS)
@pytest.mark.parametrize("objective", OBJECTIVES)
def test_cutoffs_never_beat_the_belief_optimum(seed, objective):
    pomdp = gen_random_pomdp(seed, num_states=6, acyclic=True)
    spec = Specification.for_pomdp(pomdp, objective)
    full = unfold(pomdp, spec, max_beliefs=10000)
    exact, _sigma = check_fragment(full, spec)
    family = full_family(pomdp, [2] * pomdp.num_obs)
    rng = random.Random(seed)

    assert not full.queue
    for _ in range(20):
        fragment = unfold(pomdp, spec, _random_member(family, rng), max_beliefs=1)
        value, _ = check_fragment(fragment, spec)
        if spec.maximize:
            assert value <= exact + 1e-8
        else:
            assert value >= exact - 1e-8


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("objective", OBJECTIVES)
@pytest.mark.parametrize("budget", [2, 10000])
def test_belief_fsc_reproduces_fragment_value_on_random_models(seed, objective, budget):
    pomdp = gen_random_pomdp(seed, num_states=6, acyclic=True)
    spec = Specification.for_pomdp(pomdp, objective)
    fragment = unfold(pomdp, spec, max_beliefs=budget)
    value, sigma = check_fragment(fragment, spec)

    fsc = extract_belief_fsc(fragment, sigma)

    assert evaluate(pomdp, fsc, spec).value == pytest.approx(value, abs=1e-6)


def _random_fsc(pomdp, k, rng):
    z_count = pomdp.num_obs
    gamma = {}
    delta = {}
    for n in range(k):
        for z in range(z_count):
            gamma[(n, z)] = rng.choice(pomdp.obs_actions(z) or (0,))
            for z2 in range(z_count):
                delta[(n, z, z2)] = rng.randrange(k)
    return Fsc.build(k, z_count, gamma, delta)


def _explicit_adjacency(pomdp, fsc):
    """``(n, z, z2)`` triples met while walking the product from the initial pair."""
    mdp = pomdp.mdp
    start = (mdp.initial, fsc.initial)
    seen = {start}
    stack = [start]
    edges = set()
    while stack:
        s, n = stack.pop()
        if pomdp.is_target(s):
            continue
        z = pomdp.obs_of[s]
        for t in mdp.transitions[(s, fsc.action(n, z))].support:
            z2 = pomdp.obs_of[t]
            edges.add((n, z, z2))
            pair = (t, fsc.update(n, z, z2))
            if pair not in seen:
                seen.add(pair)
                stack.append(pair)
    return edges


@pytest.mark.parametrize("seed", range(20))
def test_size_matches_explicit_adjacency_lists(seed):
    rng = random.Random(seed)
    pomdp = gen_random_pomdp(seed)
    k = rng.randint(1, 3)
    fsc = _random_fsc(pomdp, k, rng)

    size = fsc_size(pomdp, fsc)

    assert size.gamma == k * pomdp.num_obs
    assert size.delta == 2 * len(_explicit_adjacency(pomdp, fsc))


@pytest.mark.parametrize("seed", range(20))
def test_mu_fsc_sizes_follow_the_memory_model(seed):
    rng = random.Random(seed)
    pomdp = gen_random_pomdp(seed)
    mu = [rng.randint(1, 3) for _ in range(pomdp.num_obs)]
    aware = _random_member(full_family(pomdp, mu, posterior_unaware=False), rng)
    unaware = _random_member(full_family(pomdp, mu), rng)
    nodes = sum(aware.memory_model)

    aware_size = fsc_size(pomdp, aware)
    unaware_size = fsc_size(pomdp, unaware)

    assert aware_size.gamma == nodes
    assert aware_size.delta == 2 * len(_explicit_adjacency(pomdp, aware))
    assert (unaware_size.gamma, unaware_size.delta) == (nodes, nodes)
