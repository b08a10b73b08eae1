"""Tests for the tensor engine and its reverse-mode gradients."""
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from app.autodiff.tensor import (
    Parameter,
    Tensor,
    concat,
    global_average_pool,
    l2_norm,
    log_softmax_rows,
    matmul,
    no_grad,
    relu,
    softmax_rows,
    stack,
)
from app.core.errors import ContractError, DimensionError, EmptyInputError, NumericError


class TestElementwise:
    def test_relu_example(self):
        assert_array_equal(relu(Tensor([-1.0, 0.0, 2.0])).data, [0.0, 0.0, 2.0])

    def test_relu_all_negative(self):
        assert_array_equal(relu(Tensor([-3.0, -0.5])).data, [0.0, 0.0])

    def test_relu_gradient_mask(self):
        """The gradient is the indicator of x > 0, with 0 at exactly 0."""
        p = Parameter([-1.0, 0.0, 2.0, 0.5])
        relu(p).sum().backward()
        assert_array_equal(p.grad, [0.0, 0.0, 1.0, 1.0])

    def test_ndarray_on_the_left_defers_to_tensor(self):
        p = Parameter([1.0, 2.0])
        out = np.array([3.0, 4.0]) * p
        assert isinstance(out, Tensor)
        out.sum().backward()
        assert_array_equal(p.grad, [3.0, 4.0])

    def test_broadcast_gradient_is_summed(self):
        a = Parameter(np.ones((2, 3)))
        b = Parameter(np.zeros(3))
        (a + b).sum().backward()
        assert_array_equal(b.grad, [2.0, 2.0, 2.0])
        assert_array_equal(a.grad, np.ones((2, 3)))


class TestGlobalAveragePool:
    def test_hand_mean(self):
        assert_array_equal(global_average_pool(Tensor([[1.0, 2.0], [3.0, 4.0]])).data, [2.0, 3.0])

    def test_single_position_is_identity(self):
        assert_array_equal(global_average_pool(Tensor([[5.0, -1.0, 2.0]])).data, [5.0, -1.0, 2.0])

    def test_constant_input(self):
        assert_array_equal(global_average_pool(Tensor(np.full((4, 3), 7.0))).data, [7.0, 7.0, 7.0])

    def test_batched(self, rng):
        x = rng.standard_normal((2, 3, 4, 5))
        assert_allclose(global_average_pool(Tensor(x)).data, x.mean(axis=-2))

    def test_zero_positions(self):
        with pytest.raises(EmptyInputError):
            global_average_pool(Tensor(np.zeros((0, 3))))


class TestBackward:
    def test_sum_gives_ones(self):
        p = Parameter(np.arange(6.0).reshape(2, 3))
        p.sum().backward()
        assert_array_equal(p.grad, np.ones((2, 3)))

    @pytest.mark.parametrize("reduce", ["sum", "mean"])
    def test_full_reduction_is_zero_dimensional(self, reduce):
        p = Parameter(np.arange(6.0).reshape(2, 3))
        loss = getattr(p, reduce)()
        assert loss.shape == ()
        loss.backward()
        assert_allclose(p.grad, np.full((2, 3), 1.0 if reduce == "sum" else 1.0 / 6))

    def test_square_gives_twice(self):
        p = Parameter([1.0, -2.0, 3.0])
        (p * p).sum().backward()
        assert_array_equal(p.grad, 2 * p.data)

    def test_repeated_backward_accumulates(self):
        p = Parameter([1.0, 2.0])
        loss = (p * 3.0).sum()
        loss.backward(retain_graph=True)
        loss.backward()
        assert_array_equal(p.grad, [6.0, 6.0])

    def test_graph_is_released(self):
        p = Parameter([1.0])
        loss = (p * 2.0).sum()
        loss.backward()
        with pytest.raises(ContractError):
            loss.backward()

    def test_non_scalar_loss(self):
        p = Parameter([1.0, 2.0])
        with pytest.raises(ContractError):
            (p * 2.0).backward()

    def test_shared_subexpression(self):
        """A node used twice receives both contributions."""
        p = Parameter([2.0])
        q = p * p
        (q + q).sum().backward()
        assert_array_equal(p.grad, [8.0])

    def test_index_select_accumulates_duplicates(self):
        p = Parameter([1.0, 2.0, 3.0])
        p[np.array([0, 0, 2])].sum().backward()
        assert_array_equal(p.grad, [2.0, 0.0, 1.0])

    def test_no_grad_records_nothing(self):
        p = Parameter([1.0, 2.0])
        with no_grad():
            out = (p * p).sum()
        assert not out.requires_grad
        with pytest.raises(ContractError):
            out.backward()


class TestMatrix:
    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError, match=r"\(2, 3\).*\(4, 2\)"):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))

    def test_batched_matmul_gradient_reduces_shared_weight(self, rng):
        x = Tensor(rng.standard_normal((3, 4, 5)))
        w = Parameter(rng.standard_normal((5, 2)))
        (x @ w).sum().backward()
        assert_allclose(w.grad, x.data.sum(axis=(0, 1))[:, None] * np.ones((1, 2)))

    def test_transpose_swaps_last_axes(self, rng):
        x = rng.standard_normal((2, 3, 4))
        assert_array_equal(Tensor(x).T.data, np.swapaxes(x, -1, -2))


class TestSoftmax:
    def test_rows_sum_to_one(self, rng):
        out = softmax_rows(Tensor(rng.standard_normal((6, 5)) * 10)).data
        assert_allclose(out.sum(axis=-1), 1.0, atol=1e-6)

    def test_shift_invariance(self, rng):
        x = rng.standard_normal((3, 4))
        shifted = x + np.array([[5.0], [-2.0], [100.0]])
        assert_allclose(softmax_rows(Tensor(x)).data, softmax_rows(Tensor(shifted)).data, atol=1e-12)

    def test_non_finite_input(self):
        with pytest.raises(NumericError):
            softmax_rows(Tensor([[1.0, np.nan]]))

    def test_empty_rows(self):
        with pytest.raises(EmptyInputError):
            softmax_rows(Tensor(np.zeros((2, 0))))

    def test_log_softmax_matches_log_of_softmax(self, rng):
        x = Tensor(rng.standard_normal((4, 4)))
        assert_allclose(log_softmax_rows(x).data, np.log(softmax_rows(x).data), atol=1e-12)


class TestStructure:
    def test_l2_norm_gradient_at_zero(self):
        p = Parameter(np.zeros((2, 3)))
        l2_norm(p).sum().backward()
        assert_array_equal(p.grad, np.zeros((2, 3)))

    def test_concat_and_stack_split_gradients(self):
        a, b = Parameter([1.0, 2.0]), Parameter([3.0])
        (concat([a, b]) * Tensor([1.0, 2.0, 3.0])).sum().backward()
        assert_array_equal(a.grad, [1.0, 2.0])
        assert_array_equal(b.grad, [3.0])

        c, d = Parameter([1.0, 1.0]), Parameter([2.0, 2.0])
        stacked = stack([c, d], axis=0)
        assert stacked.shape == (2, 2)
        (stacked * Tensor([[1.0, 2.0], [3.0, 4.0]])).sum().backward()
        assert_array_equal(d.grad, [3.0, 4.0])

    def test_reshape_mismatch(self):
        with pytest.raises(DimensionError):
            Tensor(np.ones(6)).reshape(4, 2)

    def test_forward_is_bit_identical_across_runs(self, rng):
        x = rng.standard_normal((4, 3, 5))
        w = rng.standard_normal((5, 5))

        def run():
            return softmax_rows(Tensor(x) @ Tensor(w) @ Tensor(x).T).data

        assert_array_equal(run(), run())
