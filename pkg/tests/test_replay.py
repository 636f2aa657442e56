"""Replay cache checks against naive-list and Monte Carlo oracles.

The priority rule is exercised by composing the public network forward
passes inside the tests, the cumulative index structure is property-tested
against a plain list under random push/refresh interleavings, and the
sampling distribution is verified by draw frequencies.
"""

import numpy as np
import pytest
from scipy import stats

from auvdepth.nets import init_actor, init_critic, actor_forward, critic_forward
from auvdepth.replay import Experience, ReplayCache, push, refresh, sample

FLOOR = 1e-3


def zero_nets(obs_dim):
    critic = init_critic(obs_dim, rng=np.random.default_rng(0))
    actor = init_actor(obs_dim, action_low=np.array([-20.0, -10.0]),
                       action_high=np.array([20.0, 10.0]),
                       rng=np.random.default_rng(0))
    for net in (critic, actor):
        for w in net.weights:
            w[:] = 0.0
        for b in net.biases:
            b[:] = 0.0
    return critic, actor


def make_exp(rng, obs_dim=5, cost=None, terminal=False):
    return Experience(
        s=rng.normal(size=obs_dim),
        u=rng.uniform(-10, 10, size=2),
        c=float(rng.uniform(0, 5)) if cost is None else float(cost),
        s_next=rng.normal(size=obs_dim),
        terminal=terminal,
    )


# ---------------------------------------------------------------------------
# Priority rule
# ---------------------------------------------------------------------------

def test_perfectly_predicted_transition_gets_floor_priority():
    critic, actor = zero_nets(5)
    cache = ReplayCache(capacity=8, obs_dim=5, gamma=0.99)
    e = make_exp(np.random.default_rng(1), cost=0.0)
    push(cache, e, critic, actor)
    assert e.priority == pytest.approx(FLOOR, abs=0)
    picked, idx = sample(cache, 1, np.random.default_rng(2))[0]
    assert idx == 0
    np.testing.assert_array_equal(picked.s, e.s)


def test_zero_networks_give_cost_plus_floor_priority():
    critic, actor = zero_nets(5)
    cache = ReplayCache(capacity=8, obs_dim=5, gamma=0.0)
    e = make_exp(np.random.default_rng(3), cost=2.5)
    push(cache, e, critic, actor)
    assert e.priority == pytest.approx(2.5 + FLOOR, abs=1e-15)


def test_priority_matches_network_composition():
    rng = np.random.default_rng(5)
    critic = init_critic(5, hidden=(8, 8, 4), rng=rng)
    actor = init_actor(5, hidden=(8, 4), action_low=np.array([-20.0, -10.0]),
                       action_high=np.array([20.0, 10.0]), rng=rng)
    gamma = 0.97
    cache = ReplayCache(capacity=8, obs_dim=5, gamma=gamma)
    e = make_exp(rng)
    push(cache, e, critic, actor)
    q_now = critic_forward(critic, e.s, e.u)
    q_next = critic_forward(critic, e.s_next, actor_forward(actor, e.s_next))
    expected = abs(e.c + gamma * q_next - q_now) + FLOOR
    assert e.priority == pytest.approx(expected, rel=1e-14)


def test_terminal_transition_drops_bootstrap_term():
    rng = np.random.default_rng(7)
    critic = init_critic(5, hidden=(8, 8, 4), rng=rng)
    actor = init_actor(5, hidden=(8, 4), rng=rng)
    cache = ReplayCache(capacity=8, obs_dim=5, gamma=0.99)
    e = make_exp(rng, terminal=True)
    push(cache, e, critic, actor)
    expected = abs(e.c - critic_forward(critic, e.s, e.u)) + FLOOR
    assert e.priority == pytest.approx(expected, rel=1e-14)


def test_layout_mismatch_is_rejected():
    critic, actor = zero_nets(5)
    cache = ReplayCache(capacity=8, obs_dim=5, gamma=0.99)
    bad = make_exp(np.random.default_rng(9), obs_dim=4)
    with pytest.raises(ValueError, match="layout"):
        push(cache, bad, critic, actor)


# ---------------------------------------------------------------------------
# Sampling distribution
# ---------------------------------------------------------------------------

def test_three_to_one_priority_ratio_in_draw_frequencies():
    critic, actor = zero_nets(5)
    rng = np.random.default_rng(11)
    cache = ReplayCache(capacity=8, obs_dim=5, gamma=0.0)
    push(cache, make_exp(rng, cost=3.0 - FLOOR), critic, actor)
    push(cache, make_exp(rng, cost=1.0 - FLOOR), critic, actor)
    draws = np.array([idx for _, idx in sample(cache, 100_000, rng)])
    frac0 = np.mean(draws == 0)
    assert abs(frac0 - 0.75) < 0.02
    assert abs((1.0 - frac0) - 0.25) < 0.02


def test_equal_priorities_pass_chi_squared_uniformity():
    critic, actor = zero_nets(5)
    rng = np.random.default_rng(13)
    cache = ReplayCache(capacity=128, obs_dim=5, gamma=0.0)
    for _ in range(100):
        push(cache, make_exp(rng, cost=1.0), critic, actor)
    draws = np.array([idx for _, idx in sample(cache, 100_000, rng)])
    counts = np.bincount(draws, minlength=100)
    expected = 100_000 / 100
    statistic = np.sum((counts - expected) ** 2 / expected)
    assert statistic < stats.chi2.ppf(0.99, df=99)


def test_frequencies_track_arbitrary_priorities():
    critic, actor = zero_nets(5)
    rng = np.random.default_rng(17)
    cache = ReplayCache(capacity=32, obs_dim=5, gamma=0.0)
    costs = rng.uniform(0.1, 4.0, size=20)
    for c in costs:
        push(cache, make_exp(rng, cost=c), critic, actor)
    want = (costs + FLOOR) / np.sum(costs + FLOOR)
    draws = np.array([idx for _, idx in sample(cache, 100_000, rng)])
    got = np.bincount(draws, minlength=20) / 100_000
    assert np.max(np.abs(got - want)) < 0.02


def test_sample_on_empty_cache_errors():
    cache = ReplayCache(capacity=8, obs_dim=5, gamma=0.99)
    with pytest.raises(ValueError, match="empty"):
        sample(cache, 4, np.random.default_rng(0))


def test_sample_returns_stored_transition_contents():
    critic, actor = zero_nets(5)
    rng = np.random.default_rng(19)
    cache = ReplayCache(capacity=8, obs_dim=5, gamma=0.99)
    pushed = [make_exp(rng, terminal=(i == 2)) for i in range(4)]
    for e in pushed:
        push(cache, e, critic, actor)
    for got, idx in sample(cache, 32, rng):
        ref = pushed[idx]
        np.testing.assert_array_equal(got.s, ref.s)
        np.testing.assert_array_equal(got.u, ref.u)
        np.testing.assert_array_equal(got.s_next, ref.s_next)
        assert got.c == ref.c
        assert got.terminal == ref.terminal
        assert got.index == idx


# ---------------------------------------------------------------------------
# Refresh and eviction
# ---------------------------------------------------------------------------

def test_refresh_with_same_delta_keeps_total():
    critic, actor = zero_nets(5)
    rng = np.random.default_rng(23)
    cache = ReplayCache(capacity=8, obs_dim=5, gamma=0.0)
    for c in (1.0, 2.0, 3.0):
        push(cache, make_exp(rng, cost=c), critic, actor)
    before = cache.total_priority
    refresh(cache, np.array([0, 1, 2]), np.array([1.0, 2.0, 3.0]))
    assert cache.total_priority == pytest.approx(before, rel=1e-12)


def test_refresh_to_zero_delta_leaves_floor():
    critic, actor = zero_nets(5)
    rng = np.random.default_rng(29)
    cache = ReplayCache(capacity=8, obs_dim=5, gamma=0.0)
    push(cache, make_exp(rng, cost=4.0), critic, actor)
    refresh(cache, np.array([0]), np.array([0.0]))
    assert cache.total_priority == pytest.approx(FLOOR, abs=1e-15)


def test_fifo_eviction_at_capacity():
    critic, actor = zero_nets(5)
    rng = np.random.default_rng(31)
    cache = ReplayCache(capacity=4, obs_dim=5, gamma=0.0)
    pushed = [make_exp(rng, cost=float(i)) for i in range(6)]
    for e in pushed:
        push(cache, e, critic, actor)
    assert len(cache) == 4
    seen = {idx for _, idx in sample(cache, 400, rng)}
    assert seen <= {2, 3, 4, 5}
    assert {4, 5} <= seen  # highest priorities must show up
    expected_total = sum(float(i) + FLOOR for i in range(2, 6))
    assert cache.total_priority == pytest.approx(expected_total, rel=1e-12)


def test_refreshing_evicted_index_is_silent_noop():
    critic, actor = zero_nets(5)
    rng = np.random.default_rng(37)
    cache = ReplayCache(capacity=4, obs_dim=5, gamma=0.0)
    for i in range(6):
        push(cache, make_exp(rng, cost=float(i)), critic, actor)
    before = cache.total_priority
    refresh(cache, np.array([0, 1]), np.array([100.0, 100.0]))
    assert cache.total_priority == pytest.approx(before, rel=1e-12)


def test_uniform_mode_forces_equal_priorities():
    critic, actor = zero_nets(5)
    rng = np.random.default_rng(41)
    cache = ReplayCache(capacity=16, obs_dim=5, gamma=0.0, uniform=True)
    for c in (0.5, 2.0, 9.0):
        e = make_exp(rng, cost=c)
        push(cache, e, critic, actor)
        assert e.priority == 1.0
    refresh(cache, np.array([0, 1]), np.array([50.0, 0.0]))
    assert cache.total_priority == pytest.approx(3.0, abs=1e-12)
    draws = np.array([idx for _, idx in sample(cache, 60_000, rng)])
    fracs = np.bincount(draws, minlength=3) / 60_000
    assert np.max(np.abs(fracs - 1.0 / 3.0)) < 0.02


# ---------------------------------------------------------------------------
# Index structure vs naive list oracle
# ---------------------------------------------------------------------------

def test_index_structure_tracks_naive_list_through_random_ops():
    critic, actor = zero_nets(5)
    rng = np.random.default_rng(43)
    capacity = 64
    cache = ReplayCache(capacity=capacity, obs_dim=5, gamma=0.0)
    naive: dict[int, float] = {}
    pushes = 0
    for _ in range(2000):
        if not naive or rng.uniform() < 0.5:
            c = float(rng.uniform(0.0, 5.0))
            push(cache, make_exp(rng, cost=c), critic, actor)
            naive[pushes] = c + FLOOR
            pushes += 1
            evicted = pushes - capacity - 1
            naive.pop(evicted, None)
        else:
            live = list(naive)
            k = rng.choice(live, size=min(8, len(live)), replace=False)
            deltas = rng.uniform(0.0, 5.0, size=len(k))
            refresh(cache, k, deltas)
            for idx, d in zip(k, deltas):
                naive[idx] = abs(d) + FLOOR
    assert len(cache) == len(naive)
    assert cache.total_priority == pytest.approx(sum(naive.values()), rel=1e-9)
    for idx, p in naive.items():
        assert cache.priority_of(idx) == pytest.approx(p, rel=1e-12)
