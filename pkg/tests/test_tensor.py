"""Forward-pass contracts of the autodiff primitives."""

import numpy as np
import pytest

from diabnet import Adam, Rng, Tape, Tensor, backward
from diabnet.tensor import (
    bce_loss,
    conv2d,
    dense,
    dropout,
    kl_standard_normal,
    l1_penalty,
    maxpool2d,
    mse_loss,
    mul,
    relu,
    reshape,
    scale,
    sigmoid,
)


def t(data, grad=False):
    return Tensor(np.asarray(data, dtype=float), requires_grad=grad)


class TestDense:
    def test_identity_weights(self):
        out = dense(t([[1.0, 2.0]]), t(np.eye(2)), t([0.0, 0.0]))
        np.testing.assert_array_equal(out.data, [[1.0, 2.0]])

    def test_hand_arithmetic(self):
        out = dense(t([[1.0, 1.0]]), t([[1.0, 2.0], [3.0, 4.0]]), t([1.0, 1.0]))
        np.testing.assert_array_equal(out.data, [[5.0, 7.0]])

    def test_matches_triple_loop(self):
        rng = np.random.default_rng(0)
        x, w, b = rng.normal(size=(3, 8)), rng.normal(size=(8, 5)), rng.normal(size=5)
        expected = np.zeros((3, 5))
        for n in range(3):
            for j in range(5):
                expected[n, j] = b[j]
                for i in range(8):
                    expected[n, j] += x[n, i] * w[i, j]
        out = dense(t(x), t(w), t(b))
        np.testing.assert_allclose(out.data, expected, atol=1e-12)

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(ValueError, match=r"\(1, 3\).*\(2, 2\)"):
            dense(t([[1.0, 2.0, 3.0]]), t(np.eye(2)), t([0.0, 0.0]))


class TestConv2d:
    def test_identity_filter(self):
        x = t(np.full((1, 1, 1, 1), 7.0))
        f = t(np.ones((1, 1, 1, 1)))
        out = conv2d(x, f, t([0.0]))
        assert out.data.shape == (1, 1, 1, 1)
        assert out.data.flat[0] == 7.0

    def test_all_ones_window_sums(self):
        x = t(np.ones((1, 3, 3, 1)))
        f = t(np.ones((1, 2, 2, 1)))
        out = conv2d(x, f, t([0.0]))
        np.testing.assert_array_equal(out.data[0, :, :, 0], np.full((2, 2), 4.0))

    def test_output_shape_20x20(self):
        x = t(np.zeros((1, 20, 20, 1)))
        f = t(np.zeros((100, 2, 6, 1)))
        out = conv2d(x, f, t(np.zeros(100)))
        assert out.data.shape == (1, 19, 15, 100)

    def test_kernel_larger_than_input(self):
        with pytest.raises(ValueError, match="larger than input"):
            conv2d(t(np.zeros((1, 2, 2, 1))), t(np.zeros((1, 3, 3, 1))), t([0.0]))

    def test_stride_two(self):
        x = t(np.arange(16.0).reshape(1, 4, 4, 1))
        f = t(np.ones((1, 2, 2, 1)))
        out = conv2d(x, f, t([0.0]), stride=2)
        # windows at (0,0), (0,2), (2,0), (2,2)
        np.testing.assert_array_equal(
            out.data[0, :, :, 0], [[0 + 1 + 4 + 5, 2 + 3 + 6 + 7], [8 + 9 + 12 + 13, 10 + 11 + 14 + 15]]
        )


class TestMaxPool2d:
    def test_single_window(self):
        x = t(np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 2, 2, 1))
        out = maxpool2d(x, (2, 2))
        assert out.data.shape == (1, 1, 1, 1)
        assert out.data.flat[0] == 4.0

    def test_shape_chain_19x15(self):
        out = maxpool2d(t(np.zeros((1, 19, 15, 100))), (2, 6))
        assert out.data.shape == (1, 9, 2, 100)

    def test_constant_input(self):
        out = maxpool2d(t(np.full((2, 4, 4, 3), 5.0)), (2, 2))
        np.testing.assert_array_equal(out.data, np.full((2, 2, 2, 3), 5.0))

    def test_zero_pool_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            maxpool2d(t(np.zeros((1, 2, 2, 1))), (0, 2))

    def test_output_bounded_by_input(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 5, 7, 3))
        out = maxpool2d(t(x), (2, 3))
        assert out.data.max() <= x.max()
        assert out.data.min() >= x.min()


class TestDropout:
    def test_rate_zero_is_identity(self):
        x = t(np.ones(10))
        assert dropout(x, 0.0, training=True, rng=Rng(0)) is x

    def test_inference_is_identity(self):
        x = t(np.ones(10))
        assert dropout(x, 0.9, training=False) is x

    def test_expectation_preserved(self):
        out = dropout(t(np.ones(100_000)), 0.2, training=True, rng=Rng(7))
        assert 0.99 <= out.data.mean() <= 1.01

    def test_rate_one_rejected(self):
        with pytest.raises(ValueError, match="rate"):
            dropout(t(np.ones(3)), 1.0, training=True, rng=Rng(0))


class TestActivations:
    def test_sigmoid_at_zero(self):
        assert sigmoid(t([0.0])).data[0] == 0.5

    def test_relu_negative(self):
        assert relu(t([-1.0])).data[0] == 0.0

    def test_sigmoid_saturation_no_overflow(self):
        out = sigmoid(t([36.0, -36.0]))
        assert np.all(np.isfinite(out.data))
        assert abs(out.data[0] - 1.0) < 1e-15
        assert abs(out.data[1] - 0.0) < 1e-15


class TestLosses:
    def test_mse_perfect(self):
        x = np.arange(6.0).reshape(2, 3)
        assert mse_loss(t(x), t(x.copy())).item() == 0.0

    def test_mse_hand(self):
        assert mse_loss(t([0.0, 0.0]), t([1.0, 1.0])).item() == 1.0

    def test_mse_matches_direct_sum(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=(4, 5)), rng.normal(size=(4, 5))
        expected = sum((av - bv) ** 2 for av, bv in zip(a.flat, b.flat)) / 20
        assert abs(mse_loss(t(a), t(b)).item() - expected) < 1e-12

    def test_mse_shape_mismatch(self):
        with pytest.raises(ValueError, match="shapes"):
            mse_loss(t([1.0]), t([1.0, 2.0]))

    def test_bce_maximum_entropy(self):
        out = bce_loss(t([0.5, 0.5]), t([0.0, 1.0]))
        assert abs(out.item() - np.log(2.0)) < 1e-12

    def test_bce_near_perfect(self):
        assert bce_loss(t([0.0, 1.0]), t([0.0, 1.0])).item() <= 1e-6

    def test_bce_matches_direct_formula(self):
        rng = np.random.default_rng(2)
        p = rng.uniform(0.05, 0.95, size=12)
        y = (rng.uniform(size=12) < 0.5).astype(float)
        expected = -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))
        assert abs(bce_loss(t(p), t(y)).item() - expected) < 1e-12

    def test_bce_rejects_soft_targets(self):
        with pytest.raises(ValueError, match="targets"):
            bce_loss(t([0.5]), t([0.3]))

    def test_kl_identical_distributions(self):
        assert kl_standard_normal(t([0.0, 0.0]), t([1.0, 1.0])).item() == 0.0

    def test_kl_unit_shift(self):
        assert abs(kl_standard_normal(t([1.0]), t([1.0])).item() - 0.5) < 1e-12

    def test_kl_matches_quadrature(self):
        from scipy.integrate import quad

        mu, s = 0.7, 1.3

        def integrand(x):
            p = np.exp(-0.5 * ((x - mu) / s) ** 2) / (s * np.sqrt(2 * np.pi))
            q = np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)
            return p * (np.log(p) - np.log(q))

        expected, _ = quad(integrand, -12, 12)
        assert abs(kl_standard_normal(t([mu]), t([s])).item() - expected) < 1e-6

    def test_kl_nonnegative_zero_only_at_standard(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            mu = rng.normal(size=4)
            s = rng.uniform(0.2, 3.0, size=4)
            v = kl_standard_normal(t(mu), t(s)).item()
            assert v >= 0.0
            if v == 0.0:
                np.testing.assert_array_equal(mu, 0.0)
                np.testing.assert_array_equal(s, 1.0)

    def test_kl_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError, match="positive"):
            kl_standard_normal(t([0.0]), t([0.0]))

    def test_l1_hand(self):
        assert l1_penalty([t([1.0, -2.0, 3.0])]).item() == 6.0

    def test_l1_zero(self):
        assert l1_penalty([t(np.zeros((3, 3)))]).item() == 0.0

    def test_l1_matches_absolute_sum(self):
        rng = np.random.default_rng(6)
        a, b = rng.normal(size=(3, 4)), rng.normal(size=7)
        expected = np.abs(a).sum() + np.abs(b).sum()
        assert abs(l1_penalty([t(a), t(b)]).item() - expected) < 1e-12


class TestBackward:
    def test_unused_param_gets_zero_grad(self):
        p = t([1.0, 2.0], grad=True)
        q = t([3.0], grad=True)
        with Tape() as tape:
            loss = mse_loss(q, t([0.0]))
        backward(tape, loss, params=[p, q])
        np.testing.assert_array_equal(p.grad, [0.0, 0.0])

    def test_sum_of_squares(self):
        x = t([1.0, 2.0], grad=True)
        with Tape() as tape:
            loss = scale(mse_loss(x, t([0.0, 0.0])), 2.0)  # sum x^2
        backward(tape, loss)
        np.testing.assert_allclose(x.grad, [2.0, 4.0], atol=1e-12)

    def test_loss_not_on_tape_rejected(self):
        x = t([1.0], grad=True)
        with Tape() as tape:
            mse_loss(x, t([0.0]))
        orphan = t(1.0)
        with pytest.raises(ValueError, match="tape"):
            backward(tape, orphan)

    def test_non_scalar_loss_rejected(self):
        x = t([1.0, 2.0], grad=True)
        with Tape() as tape:
            out = relu(x)
        with pytest.raises(ValueError, match="scalar"):
            backward(tape, out)

    def test_tape_cleared_after_backward(self):
        x = t([1.0], grad=True)
        with Tape() as tape:
            loss = mse_loss(x, t([0.0]))
        backward(tape, loss)
        assert len(tape) == 0

    def test_fanout_accumulates(self):
        x = t([3.0], grad=True)
        with Tape() as tape:
            y = mul(x, x)  # x^2
            loss = mse_loss(y, t([0.0]))  # x^4
        backward(tape, loss)
        np.testing.assert_allclose(x.grad, [4 * 27.0], atol=1e-10)

    def test_reshape_round_trip_gradient(self):
        x = t(np.arange(6.0).reshape(2, 3), grad=True)
        with Tape() as tape:
            y = reshape(x, (3, 2))
            loss = mse_loss(y, t(np.zeros((3, 2))))
        backward(tape, loss)
        np.testing.assert_allclose(x.grad, 2.0 * x.data / 6.0, atol=1e-12)


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        p = t([1.0, -2.0], grad=True)
        opt = Adam([p])
        p.grad = np.zeros(2)
        opt.step()
        np.testing.assert_array_equal(p.data, [1.0, -2.0])
        assert opt.t == 1

    def test_first_step_magnitude(self):
        p = t([0.5], grad=True)
        opt = Adam([p])
        p.grad = np.ones(1)
        opt.step()
        assert abs((0.5 - p.data[0]) - 1e-3) < 1e-6

    def test_converges_on_quadratic(self):
        w = t([1.0], grad=True)
        opt = Adam([w], lr=1e-2)
        for _ in range(200):
            with Tape() as tape:
                loss = mse_loss(w, t([0.0]))
            opt.zero_grad()
            backward(tape, loss)
            opt.step()
        assert abs(w.data[0]) < 0.05

    def test_gradient_shape_mismatch(self):
        p = t([1.0, 2.0], grad=True)
        opt = Adam([p])
        p.grad = np.zeros(3)
        with pytest.raises(ValueError, match="shape"):
            opt.step()


class TestRng:
    def test_same_seed_same_sequence(self):
        a, b = Rng(123), Rng(123)
        np.testing.assert_array_equal(a.normal((5,)), b.normal((5,)))
        np.testing.assert_array_equal(a.uniform(shape=(4,)), b.uniform(shape=(4,)))
        np.testing.assert_array_equal(a.permutation(10), b.permutation(10))

    def test_different_seeds_differ(self):
        assert not np.array_equal(Rng(1).normal((8,)), Rng(2).normal((8,)))
