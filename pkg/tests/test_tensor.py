"""Tensor engine: values, gradients against finite differences, invariants."""

import math

import numpy as np
import pytest

import gib.tensor as T
from gib.gradcheck import assert_gradients_match, max_relative_error
from gib.tensor import ShapeMismatch, Tensor


class TestForwardValues:
    def test_matmul_identity(self):
        out = Tensor([[1.0, 0.0], [0.0, 1.0]]) @ Tensor([[2.0, 3.0], [4.0, 5.0]])
        np.testing.assert_array_equal(out.data, [[2.0, 3.0], [4.0, 5.0]])

    def test_matmul_inner_product(self):
        out = Tensor([[1.0, 2.0]]) @ Tensor([[3.0], [4.0]])
        np.testing.assert_array_equal(out.data, [[11.0]])

    def test_matmul_shape_error_names_both_shapes(self):
        with pytest.raises(ShapeMismatch, match=r"\(2, 3\).*\(2, 2\)"):
            Tensor(np.zeros((2, 3))) @ Tensor(np.zeros((2, 2)))

    def test_relu_sign_cases(self):
        out = T.relu(Tensor([[-1.0, 0.0, 2.0]]))
        np.testing.assert_array_equal(out.data, [[0.0, 0.0, 2.0]])

    def test_tanh_at_origin(self):
        assert T.tanh(Tensor([[0.0]])).data.item() == 0.0

    def test_log_domain_error(self):
        with pytest.raises(ValueError, match="positive"):
            T.log(Tensor([[0.0, 1.0]]))

    def test_frobenius_norm_3_4_5(self):
        assert float(T.frobenius_norm(Tensor([[3.0, 4.0]])).data) == 5.0

    def test_logsumexp_closed_form(self):
        assert float(T.logsumexp(Tensor([0.0, 0.0])).data) == pytest.approx(math.log(2), abs=1e-15)

    def test_mean(self):
        assert float(T.tmean(Tensor([1.0, 2.0, 3.0])).data) == 2.0

    def test_empty_reduction_rejected(self):
        with pytest.raises(ShapeMismatch, match="empty"):
            T.tsum(Tensor(np.zeros((0, 2))))


class TestRowSoftmax:
    def test_symmetry(self):
        out = T.row_softmax(Tensor([[0.0, 0.0]]))
        np.testing.assert_allclose(out.data, [[0.5, 0.5]], atol=1e-15)

    def test_closed_form(self):
        out = T.row_softmax(Tensor([[math.log(2.0), 0.0]]))
        np.testing.assert_allclose(out.data, [[2.0 / 3.0, 1.0 / 3.0]], atol=1e-15)

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4, 6))
        base = T.row_softmax(Tensor(x)).data
        shifted = T.row_softmax(Tensor(x + 123.456)).data
        np.testing.assert_allclose(base, shifted, atol=1e-12)

    def test_rows_sum_to_one_and_bounded(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            x = rng.normal(scale=rng.uniform(0.1, 50.0), size=(5, 7))
            y = T.row_softmax(Tensor(x)).data
            np.testing.assert_allclose(y.sum(axis=1), 1.0, atol=1e-12)
            assert np.all(y >= 0.0) and np.all(y <= 1.0)


class TestLogsumexpBounds:
    def test_bounds(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            x = rng.normal(scale=rng.uniform(0.1, 100.0), size=rng.integers(1, 30))
            v = float(T.logsumexp(Tensor(x)).data)
            assert v >= x.max() - 1e-12
            assert v <= x.max() + math.log(x.size) + 1e-12


class TestBackward:
    def test_square_gradient(self):
        x = Tensor(3.0)
        (x * x).backward()
        assert x.grad.item() == 6.0

    def test_matmul_sum_gradient(self):
        a = Tensor([[1.0, 2.0], [3.0, 4.0]])
        b = Tensor([[1.0, 1.0], [1.0, 1.0]])
        T.tsum(a @ b).backward()
        np.testing.assert_allclose(a.grad, [[2.0, 2.0], [2.0, 2.0]], atol=1e-12)

    def test_log_derivative(self):
        x = Tensor([[2.0]])
        T.tsum(T.log(x)).backward()
        assert x.grad.item() == pytest.approx(0.5, abs=1e-15)

    def test_non_scalar_loss_rejected(self):
        with pytest.raises(ShapeMismatch, match="scalar"):
            Tensor([[1.0, 2.0]]).backward()

    def test_backward_deterministic_bitwise(self):
        rng = np.random.default_rng(3)
        w = rng.normal(size=(4, 3))
        x = rng.normal(size=(3, 2))

        def run():
            wt, xt = Tensor(w.copy()), Tensor(x.copy())
            T.tsum(T.relu(wt @ xt)).backward()
            return wt.grad.copy(), xt.grad.copy()

        g1, g2 = run(), run()
        assert np.array_equal(g1[0], g2[0]) and np.array_equal(g1[1], g2[1])

    def test_grad_accumulates_over_reuse(self):
        x = Tensor([[1.0, 2.0]])
        y = x + x  # two paths to x
        T.tsum(y).backward()
        np.testing.assert_array_equal(x.grad, [[2.0, 2.0]])

    def test_tape_is_topologically_ordered(self):
        a, b = Tensor([[1.0]]), Tensor([[2.0]])
        loss = T.tsum((a + b) * (a * b))
        order = loss.tape()
        position = {id(t): i for i, t in enumerate(order)}
        for node in order:
            for parent in node.parents:
                assert position[id(parent)] < position[id(node)]

    def test_every_reachable_tensor_gets_a_grad_of_matching_shape(self):
        rng = np.random.default_rng(4)
        w = Tensor(rng.normal(size=(3, 4)))
        x = Tensor(rng.normal(size=(4, 2)))
        loss = T.logsumexp(T.row_softmax(T.tanh(w @ x)))
        loss.backward()
        for node in loss.tape():
            assert node.grad is not None
            assert node.grad.shape == node.data.shape


def _rand(rng, *shape):
    return rng.normal(size=shape)


class TestGradientsAgainstFiniteDifferences:
    """Central differences (step 1e-5) vs the tape, relative error <= 1e-4."""

    N_INSTANCES = 100

    def test_matmul(self):
        rng = np.random.default_rng(10)
        for _ in range(self.N_INSTANCES):
            m, k, n = rng.integers(1, 5, size=3)
            assert_gradients_match(
                lambda ts: T.tsum(T.tanh(ts[0] @ ts[1])),
                [_rand(rng, m, k), _rand(rng, k, n)],
            )

    def test_elementwise_ops(self):
        rng = np.random.default_rng(11)
        builders = {
            "add": lambda ts: T.tsum(T.tanh(ts[0] + ts[1])),
            "sub": lambda ts: T.tsum(T.tanh(ts[0] - ts[1])),
            "mul": lambda ts: T.tsum(T.tanh(ts[0] * ts[1])),
            "neg": lambda ts: T.tsum(T.tanh(-ts[0] * ts[1])),
        }
        per = self.N_INSTANCES // len(builders) + 1
        for name, build in builders.items():
            for _ in range(per):
                shape = tuple(rng.integers(1, 5, size=2))
                assert_gradients_match(build, [_rand(rng, *shape), _rand(rng, *shape)])

    def test_relu_away_from_kink(self):
        rng = np.random.default_rng(12)
        for _ in range(self.N_INSTANCES):
            x = _rand(rng, 3, 4)
            x = np.where(np.abs(x) < 1e-3, x + 0.1, x)  # keep clear of the kink
            assert_gradients_match(lambda ts: T.tsum(T.relu(ts[0])), [x])

    def test_exp_log(self):
        rng = np.random.default_rng(13)
        for _ in range(self.N_INSTANCES):
            x = _rand(rng, 2, 3)
            p = np.abs(x) + 0.5
            assert_gradients_match(lambda ts: T.tsum(T.exp(ts[0])), [x])
            assert_gradients_match(lambda ts: T.tsum(T.log(ts[0])), [p])

    def test_row_softmax(self):
        rng = np.random.default_rng(14)
        for _ in range(self.N_INSTANCES):
            x = _rand(rng, 3, 5)
            w = _rand(rng, 3, 5)
            assert_gradients_match(lambda ts: T.tsum(ts[1] * T.row_softmax(ts[0])), [x, w])

    def test_row_l1_normalize(self):
        rng = np.random.default_rng(15)
        for _ in range(self.N_INSTANCES):
            x = np.abs(_rand(rng, 3, 4)) + 0.1
            w = _rand(rng, 3, 4)
            assert_gradients_match(
                lambda ts: T.tsum(ts[1] * T.row_l1_normalize(ts[0])), [x, w]
            )

    def test_reductions(self):
        rng = np.random.default_rng(16)
        builders = [
            lambda ts: T.tsum(ts[0]) * T.tmean(ts[0]),
            lambda ts: T.frobenius_norm(ts[0]),
            lambda ts: T.logsumexp(ts[0]),
        ]
        per = self.N_INSTANCES // len(builders) + 1
        for build in builders:
            for _ in range(per):
                assert_gradients_match(build, [_rand(rng, 3, 3) + 0.2])

    def test_structural_ops(self):
        rng = np.random.default_rng(17)
        for _ in range(self.N_INSTANCES // 2):
            a, b = _rand(rng, 2, 3), _rand(rng, 2, 3)
            assert_gradients_match(
                lambda ts: T.tsum(T.tanh(T.concat_cols([ts[0], ts[1]]) @ Tensor(_fixed_w))),
                [a, b],
            )
            assert_gradients_match(
                lambda ts: T.pick(T.transpose(ts[0]), 1, 0) * T.tsum(T.row(ts[1], 1)),
                [a, b],
            )

    def test_broadcast_bias_add(self):
        rng = np.random.default_rng(18)
        for _ in range(self.N_INSTANCES // 2):
            x = _rand(rng, 4, 3)
            bias = _rand(rng, 1, 3)
            assert_gradients_match(lambda ts: T.tsum(T.tanh(ts[0] + ts[1])), [x, bias])

    def test_random_compositions(self):
        rng = np.random.default_rng(19)
        for _ in range(self.N_INSTANCES // 2):
            w1, w2 = _rand(rng, 3, 4), _rand(rng, 4, 2)
            x = _rand(rng, 2, 3)
            err = max_relative_error(
                lambda ts: T.logsumexp(T.row_softmax(T.tanh(ts[2] @ ts[0]) @ ts[1])),
                [w1, w2, x],
            )
            assert err <= 1e-4


_fixed_w = np.linspace(-1.0, 1.0, 6 * 2).reshape(6, 2)
