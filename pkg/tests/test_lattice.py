import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rightmost import rng, simulate
from rightmost.lattice import (
    Boundary, BondLayer, ContractError, Environment, LevelConfig, SimParams,
    WindowOverflowError, backward_reach, coupled_step, coupling_check, forward_reach,
    sample_environment, sample_uniforms, step_forward,
)
from rightmost.view import InitialCondition

from oracles import make_env, reach_sets


def sites_at(configs, k):
    return set(configs[k].sites().tolist())


# --- bond sampling ---------------------------------------------------------

@pytest.mark.parametrize("p, expect", [(0.0, False), (1.0, True)])
def test_degenerate_bonds(p, expect):
    env = sample_environment(SimParams(p, 10, 20, seed=3), 0)
    assert (env.left == expect).all() and (env.right == expect).all()
    assert (env.fringe == expect).all()


def test_bernoulli_fraction():
    # 10^6 bond bits at p=0.5, binomial 3 sigma = 0.0015
    params = SimParams(0.5, 500, 1000, seed=11)
    env = sample_environment(params, 0)
    frac = (env.left.sum() + env.right.sum()) / (2 * env.left.size)
    assert abs(frac - 0.5) < 0.002


def test_uniforms_in_unit_interval_and_distinct_streams():
    params = SimParams(0.5, 20, 30, seed=0)
    u0 = sample_uniforms(params, 0)
    u1 = sample_uniforms(params, 1)
    assert (u0.left >= 0).all() and (u0.left < 1).all()
    assert not np.array_equal(u0.left, u1.left)
    again = sample_uniforms(params, 0)
    assert np.array_equal(u0.left, again.left) and np.array_equal(u0.right, again.right)


def test_bonds_do_not_depend_on_window_placement():
    # the same physical bond gets the same uniform in two different windows
    a = sample_uniforms(SimParams(0.5, 6, 20, seed=5), 2, origin=-20)
    b = sample_uniforms(SimParams(0.5, 6, 30, seed=5), 2, origin=-30)
    # site x at level k has index (x - origin - (k & 1)) / 2
    for k in range(6):
        for x in range(-20 + (k & 1), 10, 2):
            ja = (x + 20 - (k & 1)) // 2
            jb = (x + 30 - (k & 1)) // 2
            assert a.left[k, ja] == b.left[k, jb]
            assert a.right[k, ja] == b.right[k, jb]


def test_seed_sequence_master_key():
    assert rng.master_key(0) != rng.master_key(1)
    assert rng.master_key(7) == rng.master_key(7)


# --- single steps ----------------------------------------------------------

def origin_config(params):
    return InitialCondition.origin().level_config(params)


def test_step_closed_and_open():
    params = SimParams(0.5, 4, 12)
    start = origin_config(params)
    closed = Environment.constant(params, False)
    opened = Environment.constant(params, True)
    assert step_forward(start, closed.layer(0)).is_empty
    assert set(step_forward(start, opened.layer(0)).sites().tolist()) == {-1, 1}


def test_step_level_mismatch():
    params = SimParams(0.5, 4, 12)
    env = Environment.constant(params, True)
    with pytest.raises(ContractError):
        step_forward(origin_config(params), env.layer(1))


def test_forward_reach_examples():
    params = SimParams(0.5, 3, 12)
    start = origin_config(params)
    full = forward_reach(Environment.constant(params, True), start, 0, 2)
    assert sites_at(full, 2) == {-2, 0, 2}
    dead = forward_reach(Environment.constant(params, False), start, 0, 3)
    assert all(c.is_empty for c in dead[1:])
    # one open path 0 -> 1 -> 0
    env = make_env(params, [(0, 0, 1), (1, 1, 0)])
    assert sites_at(forward_reach(env, start, 0, 2), 2) == {0}


def test_right_overflow_raises():
    params = SimParams(1.0, 4, 8)
    # site 0 sits at index 6 of 8: the second odd step leaves the window
    env = Environment.constant(params, True, origin=-12)
    start = LevelConfig.from_sites(0, -12, 8, [0])
    with pytest.raises(WindowOverflowError):
        forward_reach(env, start, 0, 4)


def test_parity_contract():
    with pytest.raises(ContractError):
        LevelConfig(1, 0, np.zeros(4, bool))
    with pytest.raises(ContractError):
        LevelConfig.from_sites(0, 0, 4, [1])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.floats(0.2, 0.8))
def test_forward_matches_set_oracle(seed, p):
    params = SimParams(p, 8, 24, seed=seed)
    env = sample_environment(params, 0)
    A = [0, -2, -6, -10]
    start = InitialCondition.finite(A).level_config(params)
    got = [set(c.sites().tolist()) for c in forward_reach(env, start, 0, 8)]
    assert got == reach_sets(env, A, 0, 8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.floats(0.3, 0.8))
def test_full_left_matches_set_oracle(seed, p):
    params = SimParams(p, 8, 16, seed=seed)
    env = sample_environment(params, 0)
    start = InitialCondition.full().level_config(params)
    got = [set(c.sites().tolist()) for c in forward_reach(env, start, 0, 8)]
    assert got == reach_sets(env, start.sites().tolist(), 0, 8, fringe=True)


# --- backward reach --------------------------------------------------------

def test_backward_examples():
    params = SimParams(0.5, 4, 10)
    # all-open: every tracked site has a bond that stays inside the window
    assert all(c.occupancy.all() for c in backward_reach(Environment.constant(params, True), 4))
    closed = backward_reach(Environment.constant(params, False), 4)
    assert all(c.is_empty for c in closed[:4]) and closed[4].occupancy.all()


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.floats(0.3, 0.7))
def test_backward_forward_duality(seed, p):
    n = 6
    params = SimParams(p, n, 20, seed=seed)
    env = sample_environment(params, 0)
    back = backward_reach(env, n)
    o = env.origin
    # sites with enough room on the right to never overflow
    for x in range(o, o + 2 * (params.window_width - n // 2 - 1), 2):
        reached = reach_sets(env, {x}, 0, n)[-1]
        j = (x - o) // 2
        assert bool(back[0].occupancy[j]) == bool(reached)


# --- boundary and coupling -------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.floats(0.2, 0.8))
def test_free_contained_in_full_left(seed, p):
    params = SimParams(p, 10, 16, seed=seed)
    env = sample_environment(params, 0)
    full = InitialCondition.full().level_config(params)
    free = LevelConfig(0, full.origin, full.occupancy, Boundary.FREE)
    a = forward_reach(env, free, 0, 10)
    b = forward_reach(env, full, 0, 10)
    for ca, cb in zip(a, b):
        assert not (ca.occupancy & ~cb.occupancy).any()


def test_coupled_step_examples():
    params = SimParams(0.5, 2, 8)
    u = sample_uniforms(params, 0).layer(0)
    start = origin_config(params)
    lo, hi = coupled_step(start, u, [0.3, 0.5])
    assert not (lo.occupancy & ~hi.occupancy).any()
    from rightmost.lattice import LayerUniforms
    flat = LayerUniforms(0, u.origin, np.full(8, 0.4), np.full(8, 0.4), 0.4)
    lo, hi = coupled_step(start, flat, [0.3, 0.5])
    assert lo.is_empty and set(hi.sites().tolist()) == {-1, 1}
    with pytest.raises(ContractError):
        coupled_step(start, flat, [0.5, 0.3])


def test_coupled_random_layers():
    params = SimParams(0.5, 1, 16)
    start = InitialCondition.finite(range(0, -16, -2)).level_config(SimParams(0.5, 1, 16))
    for t in range(2000):
        layer = sample_uniforms(params, t).layer(0)
        lo, hi = coupled_step(start, layer, [0.3, 0.5])
        assert not (lo.occupancy & ~hi.occupancy).any()


def test_coupling_check_batch():
    params = SimParams(0.5, 30, 48, seed=4)
    start = origin_config(params)
    assert coupling_check(params, [0.3, 0.5, 0.7], 3000, start).all()
    full = InitialCondition.full().level_config(params)
    assert coupling_check(params, [0.3, 0.5], 1000, full).all()


# --- compiled kernel agrees with the materialized environment --------------

@pytest.mark.parametrize("kind", ["origin", "full"])
def test_batch_kernel_matches_environment(kind):
    params = SimParams(0.45, 12, 24, seed=9)
    init = InitialCondition.parse(kind)
    start = init.level_config(params)
    keys = rng.trial_keys(rng.master_key(params.seed), 0, 50)
    for t in range(50):
        occ, *_ , ovf = simulate.forward_history(
            keys[t], params.p, start.occupancy.copy(), start.origin, kind == "full", 12)
        assert not ovf
        env = sample_environment(params, t)
        ref = forward_reach(env, start, 0, 12)
        for k in range(13):
            assert np.array_equal(occ[k], ref[k].occupancy)
