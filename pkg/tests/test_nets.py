"""Network forward/backward checks against finite-difference oracles.

Every analytic gradient is compared with central differences computed by
perturbing one parameter at a time. Inputs are redrawn when any ReLU
pre-activation sits within 1e-4 of its kink, so the finite-difference
stencil never straddles a nondifferentiable point.
"""

import numpy as np
import pytest

from auvdepth.nets import (
    AdaptiveMoments,
    Mlp,
    actor_backward_chained,
    actor_forward,
    apply_gradients,
    apply_gradients_adaptive,
    critic_backward,
    critic_forward,
    init_actor,
    init_critic,
    load_checkpoint,
    save_checkpoint,
)

FD_STEP = 1e-6
KINK_MARGIN = 1e-4


def rel_ok(analytic, numeric, rel=1e-6, floor=1e-4):
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    return np.all(np.abs(analytic - numeric) <= floor + rel * scale)


def fd_grad_over_array(objective, arr, h=FD_STEP):
    """Central-difference gradient of a scalar objective over one array."""
    grad = np.zeros_like(arr)
    flat = arr.ravel()
    gflat = grad.ravel()
    for k in range(flat.size):
        keep = flat[k]
        flat[k] = keep + h
        hi = objective()
        flat[k] = keep - h
        lo = objective()
        flat[k] = keep
        gflat[k] = (hi - lo) / (2.0 * h)
    return grad


def relu_margins(net, s, u=None):
    """Smallest |pre-activation| over all ReLU layers at this input."""
    from auvdepth.nets import _forward
    sb = np.atleast_2d(np.asarray(s, dtype=float))
    ub = None if u is None else np.atleast_2d(np.asarray(u, dtype=float))
    _, cache = _forward(net, sb, ub)
    worst = np.inf
    for name, (_, z, _) in zip(net.activations, cache):
        if name == "relu" and z.size:
            worst = min(worst, float(np.min(np.abs(z))))
    return worst


def draw_critic_point(net, rng):
    for _ in range(200):
        s = rng.normal(size=net.state_dim)
        u = rng.uniform(-1.0, 1.0, size=net.inject_dim)
        if relu_margins(net, s, u) > KINK_MARGIN:
            return s, u
    raise AssertionError("could not find an input clear of ReLU kinks")


def draw_actor_point(actor, critic, rng):
    for _ in range(200):
        s = rng.normal(size=actor.state_dim)
        if relu_margins(actor, s) <= KINK_MARGIN:
            continue
        if critic is not None:
            u = actor_forward(actor, s)
            if relu_margins(critic, s, u) <= KINK_MARGIN:
                continue
        return s
    raise AssertionError("could not find an input clear of ReLU kinks")


def small_critic(rng, state_dim=4):
    return init_critic(state_dim, action_dim=2, hidden=(6, 5, 4), rng=rng)


def small_actor(rng, state_dim=4):
    return init_actor(state_dim, action_dim=2, hidden=(6, 4),
                      action_low=np.array([-20.0, -10.0]),
                      action_high=np.array([20.0, 10.0]), rng=rng)


# ---------------------------------------------------------------------------
# Structure and forward passes
# ---------------------------------------------------------------------------

def test_default_critic_structure():
    net = init_critic(5, rng=np.random.default_rng(0))
    shapes = [w.shape for w in net.weights]
    assert shapes == [(5, 64), (66, 64), (64, 32), (32, 1)]
    assert [b.shape for b in net.biases] == [(64,), (64,), (32,), (1,)]
    assert net.activations == ("relu", "relu", "relu", "linear")
    assert net.inject_at == 1 and net.inject_dim == 2
    assert net.out_scale is None


def test_default_actor_structure():
    net = init_actor(5, action_low=np.array([-20.0, -10.0]),
                     action_high=np.array([20.0, 10.0]),
                     rng=np.random.default_rng(0))
    assert [w.shape for w in net.weights] == [(5, 64), (64, 32), (32, 2)]
    assert net.activations == ("relu", "relu", "tanh")
    assert net.inject_at is None
    np.testing.assert_allclose(net.out_scale, [20.0, 10.0])
    np.testing.assert_allclose(net.out_offset, [0.0, 0.0])


def test_init_ranges_follow_fan_in():
    rng = np.random.default_rng(3)
    net = init_critic(5, hidden=(64, 64, 32), rng=rng)
    # layer 1 receives 64 hidden units plus 2 action components
    bounds = [1 / np.sqrt(5), 1 / np.sqrt(66), 1 / np.sqrt(64), 3e-3]
    for w, b, bound in zip(net.weights, net.biases, bounds):
        assert np.max(np.abs(w)) <= bound
        assert np.max(np.abs(b)) <= bound
    # sanity: the draws actually use most of the interval
    assert np.max(np.abs(net.weights[0])) > 0.5 / np.sqrt(5)


def test_critic_forward_matches_manual_chain():
    rng = np.random.default_rng(7)
    net = init_critic(3, action_dim=2, hidden=(4, 5), rng=rng)
    s = rng.normal(size=3)
    u = rng.normal(size=2)
    h0 = np.maximum(s @ net.weights[0] + net.biases[0], 0.0)
    h1 = np.maximum(np.concatenate([h0, u]) @ net.weights[1] + net.biases[1], 0.0)
    expected = (h1 @ net.weights[2] + net.biases[2]).item()
    assert critic_forward(net, s, u) == pytest.approx(expected, abs=1e-14)


def test_actor_forward_matches_manual_chain():
    rng = np.random.default_rng(8)
    net = init_actor(3, action_dim=2, hidden=(4,),
                     action_low=np.array([-20.0, -10.0]),
                     action_high=np.array([20.0, 10.0]), rng=rng)
    s = rng.normal(size=3)
    h0 = np.maximum(s @ net.weights[0] + net.biases[0], 0.0)
    expected = net.out_offset + net.out_scale * np.tanh(h0 @ net.weights[1] + net.biases[1])
    np.testing.assert_allclose(actor_forward(net, s), expected, atol=1e-14)


def test_zero_parameters_give_zero_outputs():
    net = init_critic(4, rng=np.random.default_rng(0))
    for w in net.weights:
        w[:] = 0.0
    for b in net.biases:
        b[:] = 0.0
    assert critic_forward(net, np.ones(4), np.ones(2)) == 0.0
    actor = init_actor(4, rng=np.random.default_rng(0))
    for w in actor.weights:
        w[:] = 0.0
    for b in actor.biases:
        b[:] = 0.0
    np.testing.assert_array_equal(actor_forward(actor, np.ones(4)), np.zeros(2))


def test_batched_forward_matches_single_calls():
    rng = np.random.default_rng(11)
    critic = small_critic(rng)
    actor = small_actor(rng)
    S = rng.normal(size=(9, 4))
    U = rng.uniform(-1, 1, size=(9, 2))
    q_batch = critic_forward(critic, S, U)
    a_batch = actor_forward(actor, S)
    for i in range(9):
        assert q_batch[i] == pytest.approx(critic_forward(critic, S[i], U[i]), abs=1e-14)
        np.testing.assert_allclose(a_batch[i], actor_forward(actor, S[i]), atol=1e-14)


def test_actor_outputs_respect_bounds_for_extreme_weights():
    rng = np.random.default_rng(13)
    net = small_actor(rng)
    for w in net.weights:
        w *= 1e4
    out = actor_forward(net, rng.normal(size=(50, 4)) * 10)
    assert np.all(out[:, 0] >= -20.0) and np.all(out[:, 0] <= 20.0)
    assert np.all(out[:, 1] >= -10.0) and np.all(out[:, 1] <= 10.0)


def test_shape_errors_are_descriptive():
    rng = np.random.default_rng(17)
    net = small_critic(rng)
    with pytest.raises(ValueError, match="state"):
        critic_forward(net, np.ones(3), np.ones(2))
    with pytest.raises(ValueError, match="action"):
        critic_forward(net, np.ones(4), np.ones(3))
    with pytest.raises(ValueError, match="batch sizes"):
        critic_forward(net, np.ones((2, 4)), np.ones((3, 2)))
    broken = net.copy()
    broken.weights[2] = np.zeros((7, 4))
    with pytest.raises(ValueError, match="layer 2"):
        critic_forward(broken, np.ones(4), np.ones(2))


def test_forward_and_backward_leave_parameters_untouched():
    rng = np.random.default_rng(19)
    net = small_critic(rng)
    before_w = [w.copy() for w in net.weights]
    before_b = [b.copy() for b in net.biases]
    s, u = draw_critic_point(net, rng)
    critic_forward(net, s, u)
    critic_backward(net, s, u)
    for w, ref in zip(net.weights, before_w):
        np.testing.assert_array_equal(w, ref)
    for b, ref in zip(net.biases, before_b):
        np.testing.assert_array_equal(b, ref)


# ---------------------------------------------------------------------------
# Gradient correctness
# ---------------------------------------------------------------------------

def test_critic_gradients_match_finite_differences():
    rng = np.random.default_rng(23)
    for _ in range(3):
        net = small_critic(rng)
        s, u = draw_critic_point(net, rng)
        bundle, du = critic_backward(net, s, u)
        objective = lambda: critic_forward(net, s, u)
        for li in range(len(net.weights)):
            assert rel_ok(bundle.d_weights[li], fd_grad_over_array(objective, net.weights[li]))
            assert rel_ok(bundle.d_biases[li], fd_grad_over_array(objective, net.biases[li]))
        assert rel_ok(du, fd_grad_over_array(objective, u))


def test_actor_chained_gradient_matches_finite_differences():
    rng = np.random.default_rng(29)
    net = small_actor(rng)
    s = draw_actor_point(net, None, rng)
    v = rng.normal(size=2)
    bundle = actor_backward_chained(net, s, v)
    objective = lambda: float(actor_forward(net, s) @ v)
    for li in range(len(net.weights)):
        assert rel_ok(bundle.d_weights[li], fd_grad_over_array(objective, net.weights[li]))
        assert rel_ok(bundle.d_biases[li], fd_grad_over_array(objective, net.biases[li]))


def test_policy_value_composite_gradient_matches_finite_differences():
    # gradient of Q(s, mu(s)) with respect to the policy parameters,
    # assembled as the chain of the action gradient and the policy Jacobian
    rng = np.random.default_rng(31)
    critic = small_critic(rng)
    actor = small_actor(rng)
    s = draw_actor_point(actor, critic, rng)
    u = actor_forward(actor, s)
    _, dq_du = critic_backward(critic, s, u)
    bundle = actor_backward_chained(actor, s, dq_du)
    objective = lambda: critic_forward(critic, s, actor_forward(actor, s))
    for li in range(len(actor.weights)):
        assert rel_ok(bundle.d_weights[li], fd_grad_over_array(objective, actor.weights[li]))
        assert rel_ok(bundle.d_biases[li], fd_grad_over_array(objective, actor.biases[li]))


def test_weighted_batch_backward_is_weighted_sum_of_singles():
    rng = np.random.default_rng(37)
    net = small_critic(rng)
    s0, u0 = draw_critic_point(net, rng)
    s1, u1 = draw_critic_point(net, rng)
    w = np.array([2.0, -0.5])
    batch, du = critic_backward(net, np.stack([s0, s1]), np.stack([u0, u1]), weight=w)
    g0, du0 = critic_backward(net, s0, u0)
    g1, du1 = critic_backward(net, s1, u1)
    for li in range(len(net.weights)):
        np.testing.assert_allclose(
            batch.d_weights[li], 2.0 * g0.d_weights[li] - 0.5 * g1.d_weights[li], atol=1e-12)
        np.testing.assert_allclose(
            batch.d_biases[li], 2.0 * g0.d_biases[li] - 0.5 * g1.d_biases[li], atol=1e-12)
    np.testing.assert_allclose(du[0], 2.0 * du0, atol=1e-12)
    np.testing.assert_allclose(du[1], -0.5 * du1, atol=1e-12)


def test_relu_derivative_at_exact_zero_is_zero():
    net = Mlp(
        weights=[np.array([[1.0]]), np.array([[1.0], [1.0]])],
        biases=[np.array([0.0]), np.array([0.0])],
        activations=("relu", "linear"),
        inject_at=1, inject_dim=1,
    )
    # state 0 puts the ReLU pre-activation exactly at its kink
    bundle, du = critic_backward(net, np.array([0.0]), np.array([0.5]))
    assert bundle.d_weights[0][0, 0] == 0.0
    assert bundle.d_biases[0][0] == 0.0
    # the action path bypasses that unit and stays live
    assert du[0] == 1.0


def test_cached_forward_reuse_matches_fresh_backward():
    rng = np.random.default_rng(41)
    net = small_critic(rng)
    S = rng.normal(size=(5, 4))
    U = rng.uniform(-1, 1, size=(5, 2))
    q, cache = critic_forward(net, S, U, return_cache=True)
    g_cached, du_cached = critic_backward(net, S, U, cache=cache)
    g_fresh, du_fresh = critic_backward(net, S, U)
    for a, b in zip(g_cached.d_weights, g_fresh.d_weights):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(du_cached, du_fresh)
    assert q.shape == (5,)


# ---------------------------------------------------------------------------
# Updates
# ---------------------------------------------------------------------------

def test_apply_gradients_exact_arithmetic():
    net = Mlp(weights=[np.array([[1.0]])], biases=[np.array([0.5])],
              activations=("linear",))
    from auvdepth.nets import GradientBundle
    apply_gradients(net, GradientBundle([np.array([[2.0]])], [np.array([4.0])]), 0.1)
    assert net.weights[0][0, 0] == pytest.approx(0.8, abs=0)
    assert net.biases[0][0] == pytest.approx(0.1, abs=1e-16)


def test_sgd_descent_reduces_regression_loss():
    rng = np.random.default_rng(43)
    net = small_critic(rng)
    S = rng.normal(size=(32, 4))
    U = rng.uniform(-1, 1, size=(32, 2))
    target = np.sin(S.sum(axis=1))

    def loss():
        q = critic_forward(net, S, U)
        return float(np.mean((q - target) ** 2))

    first = loss()
    for _ in range(800):
        q = critic_forward(net, S, U)
        g, _ = critic_backward(net, S, U, weight=2.0 * (q - target) / len(q))
        apply_gradients(net, g, 0.1)
    assert loss() < 0.1 * first


def test_adaptive_descent_reduces_regression_loss():
    rng = np.random.default_rng(47)
    net = small_critic(rng)
    opt = AdaptiveMoments.for_net(net)
    S = rng.normal(size=(32, 4))
    U = rng.uniform(-1, 1, size=(32, 2))
    target = np.cos(S.sum(axis=1))

    def loss():
        q = critic_forward(net, S, U)
        return float(np.mean((q - target) ** 2))

    first = loss()
    for _ in range(300):
        q = critic_forward(net, S, U)
        g, _ = critic_backward(net, S, U, weight=2.0 * (q - target) / len(q))
        apply_gradients_adaptive(net, g, opt, 0.01)
    assert loss() < 0.1 * first


def test_apply_gradients_rejects_mismatched_shapes():
    rng = np.random.default_rng(53)
    net = small_critic(rng)
    g, _ = critic_backward(net, *draw_critic_point(net, rng))
    g.d_weights[0] = g.d_weights[0][:, :2]
    with pytest.raises(ValueError, match="shape"):
        apply_gradients(net, g, 0.1)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def test_checkpoint_round_trip_is_byte_identical(tmp_path):
    rng = np.random.default_rng(59)
    for net in (small_critic(rng), small_actor(rng)):
        p1 = tmp_path / "a.ckpt"
        p2 = tmp_path / "b.ckpt"
        save_checkpoint(net, str(p1))
        loaded = load_checkpoint(str(p1))
        save_checkpoint(loaded, str(p2))
        assert p1.read_bytes() == p2.read_bytes()


def test_checkpoint_reload_preserves_behavior(tmp_path):
    rng = np.random.default_rng(61)
    net = small_critic(rng)
    path = str(tmp_path / "critic.ckpt")
    save_checkpoint(net, path)
    loaded = load_checkpoint(path)
    S = rng.normal(size=(6, 4))
    U = rng.uniform(-1, 1, size=(6, 2))
    np.testing.assert_array_equal(critic_forward(net, S, U), critic_forward(loaded, S, U))
    assert loaded.inject_at == net.inject_at
    assert loaded.activations == net.activations


def test_checkpoint_rejects_foreign_files(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(ValueError, match="not a checkpoint"):
        load_checkpoint(str(path))


def test_checkpoint_rejects_trailing_bytes(tmp_path):
    rng = np.random.default_rng(67)
    net = small_actor(rng)
    path = tmp_path / "actor.ckpt"
    save_checkpoint(net, str(path))
    path.write_bytes(path.read_bytes() + b"\x00" * 8)
    with pytest.raises(ValueError, match="trailing"):
        load_checkpoint(str(path))
