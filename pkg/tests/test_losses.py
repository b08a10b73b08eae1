"""Tests for the AU weights, the asymmetric and edge losses and their combination."""
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from app.autodiff.gradcheck import grad_check
from app.autodiff.tensor import Parameter, Tensor
from app.core.errors import ConfigurationError, ContractError
from app.models.base import Linear
from app.models.mefl import ordered_pairs
from app.services.losses import (
    OccurrenceStats,
    combined_loss,
    compute_weights,
    edge_cooccurrence_loss,
    edge_head,
    edge_labels,
    weighted_asymmetric_loss,
    weighted_bce_loss,
)


class TestWeights:
    def test_hand_example(self):
        assert_allclose(compute_weights([0.5, 0.25, 0.25]), [0.6, 1.2, 1.2], rtol=1e-12)

    def test_equal_rates_give_unit_weights(self):
        assert_allclose(compute_weights([0.3] * 5), np.ones(5), rtol=1e-12)

    def test_weights_sum_to_n(self, rng):
        for _ in range(1000):
            n = int(rng.integers(2, 20))
            assert abs(compute_weights(rng.uniform(1e-3, 1.0, n)).sum() - n) <= 1e-9

    def test_rarer_au_weighs_more(self):
        w = compute_weights([0.1, 0.2, 0.4])
        assert w[0] > w[1] > w[2]

    @pytest.mark.parametrize("rates", [[0.5, 0.0], [0.5, -0.1], [1.5, 0.5]])
    def test_rates_outside_range(self, rates):
        with pytest.raises(ConfigurationError):
            compute_weights(rates)


class TestWeightedAsymmetricLoss:
    def stats(self, n):
        return OccurrenceStats.from_rates([0.5] * n)

    def test_inactive_half_probability(self):
        loss = weighted_asymmetric_loss(Tensor([0.5]), np.array([0.0]), self.stats(1))
        assert_allclose(loss.item(), 0.34657359, rtol=1e-7)

    def test_inactive_error_costs_half_an_active_one(self):
        inactive = weighted_asymmetric_loss(Tensor([0.5]), np.array([0.0]), self.stats(1)).item()
        active = weighted_asymmetric_loss(Tensor([0.5]), np.array([1.0]), self.stats(1)).item()
        assert_allclose(inactive, active / 2, rtol=1e-12)

    def test_perfect_predictions_approach_zero(self):
        loss = weighted_asymmetric_loss(Tensor([1.0, 0.0]), np.array([1.0, 0.0]), self.stats(2))
        assert 0 <= loss.item() < 1e-6

    def test_non_negative(self, rng):
        p = rng.random((50, 4))
        y = (rng.random((50, 4)) < 0.5).astype(float)
        assert weighted_asymmetric_loss(Tensor(p), y, self.stats(4)).item() >= 0

    def test_inactive_gradient_vanishes_near_zero(self):
        grads = []
        for value in (1e-3, 1e-4, 1e-5):
            p = Parameter([value])
            weighted_asymmetric_loss(p, np.array([0.0]), self.stats(1)).backward()
            grads.append(abs(p.grad[0]))
            assert abs(p.grad[0]) <= 3 * value
        assert grads[0] > grads[1] > grads[2]

    def test_active_gradient_grows_near_zero(self):
        grads = []
        for value in (1e-3, 1e-4, 1e-5):
            p = Parameter([value])
            weighted_asymmetric_loss(p, np.array([1.0]), self.stats(1)).backward()
            assert p.grad[0] < 0
            assert_allclose(p.grad[0], -1.0 / value, rtol=1e-9)
            grads.append(abs(p.grad[0]))
        assert grads[0] < grads[1] < grads[2]

    def test_bce_charges_inactive_errors_in_full(self):
        bce = weighted_bce_loss(Tensor([0.5]), np.array([0.0]), self.stats(1)).item()
        assert_allclose(bce, np.log(2.0), rtol=1e-12)

    @pytest.mark.parametrize(
        "p, y",
        [([1.2, 0.5], [1, 0]), ([-0.1, 0.5], [1, 0]), ([0.5, 0.5], [2, 0]), ([0.5, 0.5, 0.5], [1, 0, 1])],
    )
    def test_contract_violations(self, p, y):
        with pytest.raises(ContractError):
            weighted_asymmetric_loss(Tensor(p), np.array(y, dtype=float), self.stats(2))

    @pytest.mark.parametrize("loss", [weighted_asymmetric_loss, weighted_bce_loss])
    def test_gradients(self, loss, rng):
        p = Parameter(rng.uniform(0.1, 0.9, (4, 3)))
        y = (rng.random((4, 3)) < 0.5).astype(float)
        stats = OccurrenceStats.from_rates([0.2, 0.5, 0.7])
        assert grad_check(lambda: loss(p, y, stats), [p]) <= 1e-4


class TestEdgeLoss:
    def test_labels_encode_source_then_target(self):
        assert_array_equal(edge_labels(np.array([1, 0]), ordered_pairs(2)), [2, 1])
        assert_array_equal(edge_labels(np.array([[1, 1], [0, 0]]), ordered_pairs(2)), [[3, 3], [0, 0]])

    def test_reversed_edge_swaps_middle_classes(self, rng):
        swap = np.array([0, 2, 1, 3])
        pairs = ordered_pairs(5)
        index = {pair: k for k, pair in enumerate(pairs)}
        for _ in range(20):
            labels = edge_labels(rng.integers(0, 2, 5), pairs)
            for i, j in pairs:
                assert labels[index[(j, i)]] == swap[labels[index[(i, j)]]]

    def test_uniform_logits_give_log_four(self, rng):
        labels = rng.integers(0, 4, (3, 6))
        loss = edge_cooccurrence_loss(Tensor(np.zeros((3, 6, 4))), labels)
        assert_allclose(loss.item(), np.log(4.0), rtol=1e-12)

    def test_confident_correct_logits_approach_zero(self):
        logits = np.full((2, 4), -50.0)
        logits[0, 1] = logits[1, 3] = 50.0
        assert edge_cooccurrence_loss(Tensor(logits), np.array([1, 3])).item() < 1e-12

    def test_mismatched_edges(self):
        with pytest.raises(ContractError):
            edge_cooccurrence_loss(Tensor(np.zeros((6, 4))), np.zeros(2, dtype=int))

    def test_gradient(self, rng):
        logits = Parameter(rng.standard_normal((2, 6, 4)))
        labels = rng.integers(0, 4, (2, 6))
        assert grad_check(lambda: edge_cooccurrence_loss(logits, labels), [logits]) <= 1e-4


class TestEdgeHead:
    def test_zero_head_is_uniform(self, rng):
        head = Linear(3, 4, rng)
        head.weight.data[...] = 0.0
        head.bias.data[...] = 0.0
        logits = edge_head(Tensor(rng.standard_normal((6, 3))), head)
        assert_array_equal(logits.data, np.zeros((6, 4)))

    def test_shared_across_edges(self, rng):
        head = Linear(3, 4, rng)
        e = np.tile(rng.standard_normal(3), (6, 1))
        logits = edge_head(Tensor(e), head).data
        assert_array_equal(logits, np.tile(logits[0], (6, 1)))

    def test_must_emit_four_logits(self, rng):
        with pytest.raises(ContractError):
            edge_head(Tensor(np.zeros((2, 3))), Linear(3, 2, rng))


class TestCombinedLoss:
    def test_zero_lambda(self):
        assert combined_loss(Tensor(0.7), Tensor(5.0), 0.0).item() == 0.7

    def test_unit_lambda(self):
        assert combined_loss(Tensor(1.0), Tensor(1.0), 1.0).item() == 2.0

    def test_negative_lambda(self):
        with pytest.raises(ContractError):
            combined_loss(Tensor(1.0), Tensor(1.0), -0.1)
