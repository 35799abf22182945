"""Network forward/backward correctness against hand values and oracles."""

import itertools

import numpy as np
import pytest

from nbw.divergence import AlphaParam
from nbw.errors import ConfigError, DivergenceSignal
from nbw.net import (
    RatioNet,
    adam_step,
    backward_alpha,
    finite_diff_grad,
    flatten_params,
    forward,
    init_adam,
    init_net,
    loss_terms,
    set_params,
)


def tiny_tanh_net(seed=0, dims=(3, 6, 4, 1)):
    return init_net(dims, activation="tanh", seed=seed)


def scalar_net(weight: float) -> RatioNet:
    # T(x) = w * x, one parameter worth caring about
    net = init_net((1, 1), activation="tanh", seed=0)
    net.weights[0][0, 0] = weight
    net.biases[0][0] = 0.0
    return net


class TestInit:
    def test_biases_are_zero(self):
        net = init_net((3, 1), seed=4)
        np.testing.assert_array_equal(net.biases[0], 0.0)

    def test_same_seed_identical(self):
        a, b = init_net((2, 5, 1), seed=9), init_net((2, 5, 1), seed=9)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_parameter_count_formula(self):
        net = init_net((2, 100, 100, 100, 1), seed=0)
        assert net.n_params == 20601

    def test_rejects_bad_dims(self):
        with pytest.raises(ConfigError):
            init_net((3, 2), seed=0)  # output dim != 1
        with pytest.raises(ConfigError):
            init_net((4,), seed=0)

    def test_fan_in_scaling(self):
        net = init_net((100, 50, 1), seed=3)
        assert np.abs(net.weights[0]).max() <= 1.0 / np.sqrt(100)


class TestForward:
    def test_single_affine_layer(self):
        net = scalar_net(2.0)
        net.biases[0][0] = 0.5
        assert forward(net, [[1.0]])[0] == pytest.approx(2.5, abs=1e-15)

    def test_all_zero_parameters(self):
        net = init_net((4, 3, 1), seed=0)
        set_params(net, np.zeros(net.n_params))
        np.testing.assert_array_equal(forward(net, np.ones((5, 4))), 0.0)

    def test_two_layer_hand_composition(self):
        # frozen from an independent scalar computation
        net = RatioNet(
            dims=(2, 2, 1),
            activation="tanh",
            weights=[np.array([[0.3, -0.2], [0.1, 0.5]]), np.array([[0.7], [-0.4]])],
            biases=[np.array([0.05, -0.1]), np.array([0.2])],
        )
        assert forward(net, [[1.0, -2.0]])[0] == pytest.approx(0.648908787261645, rel=1e-14)

    def test_is_pure(self):
        net = tiny_tanh_net()
        x = np.random.default_rng(0).normal(size=(6, 3))
        np.testing.assert_array_equal(forward(net, x), forward(net, x))

    def test_width_mismatch(self):
        with pytest.raises(ConfigError):
            forward(tiny_tanh_net(), np.ones((2, 5)))


class TestBackwardAlpha:
    def test_symmetric_cancellation_at_zero_weight(self):
        net = scalar_net(0.0)
        grad, terms = backward_alpha(net, [[1.0]], [[1.0]], 0.5)
        assert grad[0] == pytest.approx(0.0, abs=1e-15)
        assert terms.loss == pytest.approx(4.0)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        net = tiny_tanh_net(seed=2)
        bp, bq = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
        for a in (0.2, 0.5, 0.8):
            grad, _ = backward_alpha(net, bp, bq, a)
            fd = finite_diff_grad(net, bp, bq, a)
            rel = np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-8)
            assert rel.max() < 1e-5

    def test_one_parameter_net_agrees_tightly(self):
        net = scalar_net(0.3)
        grad, _ = backward_alpha(net, [[0.7]], [[-0.4]], 0.5)
        fd = finite_diff_grad(net, [[0.7]], [[-0.4]], 0.5, step=1e-6)
        assert abs(grad[0] - fd[0]) < 1e-9

    def test_weighted_side_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        net = tiny_tanh_net(seed=7)
        bp, bq = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
        w = rng.random(6) + 0.5
        w /= w.mean()
        grad, _ = backward_alpha(net, bp, bq, 0.5, p_weights=w)
        fd = finite_diff_grad(net, bp, bq, 0.5, p_weights=w)
        assert np.abs(grad - fd).max() < 1e-6

    def test_zero_critic_terms(self):
        net = init_net((2, 1), seed=0)
        set_params(net, np.zeros(net.n_params))
        _, terms = backward_alpha(net, np.ones((3, 2)), np.ones((4, 2)), 0.5)
        assert terms.loss == pytest.approx(4.0)
        assert terms.estimate == pytest.approx(0.0)

    def test_overflow_carries_magnitude(self):
        net = scalar_net(3000.0)
        with pytest.raises(DivergenceSignal) as info:
            backward_alpha(net, [[1.0]], [[1.0]], 0.5)
        assert info.value.magnitude > 700

    def test_accepts_alpha_param(self):
        net = scalar_net(0.1)
        grad, _ = backward_alpha(net, [[1.0]], [[1.0]], AlphaParam(0.3))
        assert np.isfinite(grad).all()


class TestMinibatchUnbiasedness:
    def test_partition_average_equals_full_gradient(self):
        # the loss is linear in per-sample terms, so averaging the batch
        # gradients over the two halves of any partition recovers the
        # full-batch gradient exactly
        rng = np.random.default_rng(8)
        net = tiny_tanh_net(seed=3)
        xp, xq = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
        full, _ = backward_alpha(net, xp, xq, 0.5)
        batch_grads = []
        for half in itertools.combinations(range(6), 3):
            rest = tuple(i for i in range(6) if i not in half)
            for idx in (half, rest):
                g, _ = backward_alpha(net, xp[list(idx)], xq[list(idx)], 0.5)
                batch_grads.append(g)
        np.testing.assert_allclose(np.mean(batch_grads, axis=0), full, atol=1e-10)


class TestFiniteDiff:
    def test_zero_step_rejected(self):
        with pytest.raises(ConfigError):
            finite_diff_grad(scalar_net(0.1), [[1.0]], [[1.0]], 0.5, step=0.0)


class TestAdam:
    def test_first_step_is_signed_learning_rate(self):
        net = scalar_net(0.5)
        state = init_adam(net, lr=1e-3)
        before = flatten_params(net)
        adam_step(state, net, np.array([0.9, 0.0]))
        delta = flatten_params(net)[0] - before[0]
        assert abs(delta + 1e-3) < 1e-3 * 1e-6

    def test_zero_gradient_keeps_parameters(self):
        net = tiny_tanh_net(seed=1)
        before = flatten_params(net)
        adam_step(init_adam(net), net, np.zeros(net.n_params))
        np.testing.assert_array_equal(flatten_params(net), before)

    def test_two_steps_match_hand_recurrence(self):
        # frozen from an independent scalar unroll: theta0 = 0.5, g = 0.7
        net = scalar_net(0.5)
        state = init_adam(net, lr=1e-3)
        adam_step(state, net, np.array([0.7, 0.0]))
        adam_step(state, net, np.array([0.7, 0.0]))
        assert flatten_params(net)[0] == pytest.approx(0.4980000000285715, rel=1e-14)

    def test_non_finite_gradient_signals(self):
        net = scalar_net(0.5)
        with pytest.raises(DivergenceSignal):
            adam_step(init_adam(net), net, np.array([np.nan, 0.0]))

    def test_huge_gradient_signals(self):
        net = scalar_net(0.5)
        with pytest.raises(DivergenceSignal):
            adam_step(init_adam(net), net, np.array([1e200, 0.0]))

    def test_shape_mismatch(self):
        net = tiny_tanh_net()
        with pytest.raises(ConfigError):
            adam_step(init_adam(net), net, np.zeros(3))


class TestSerialization:
    def test_json_round_trip_is_exact(self):
        net = tiny_tanh_net(seed=12)
        back = RatioNet.from_json(net.to_json())
        assert back.dims == net.dims and back.activation == net.activation
        for a, b in zip(net.weights, back.weights):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(net.biases, back.biases):
            np.testing.assert_array_equal(a, b)

    def test_bad_json_rejected(self):
        with pytest.raises(ConfigError):
            RatioNet.from_json("{')")
        with pytest.raises(ConfigError):
            RatioNet.from_json('{"dims": [2, 1]}')

    def test_param_hash_tracks_content(self):
        a, b = tiny_tanh_net(seed=1), tiny_tanh_net(seed=2)
        assert a.param_hash() != b.param_hash()
        assert a.param_hash() == a.clone().param_hash()


def test_loss_terms_matches_backward_terms():
    rng = np.random.default_rng(5)
    net = tiny_tanh_net(seed=6)
    bp, bq = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    _, via_backward = backward_alpha(net, bp, bq, 0.3)
    direct = loss_terms(net, bp, bq, 0.3)
    assert direct.loss == pytest.approx(via_backward.loss, rel=1e-15)
