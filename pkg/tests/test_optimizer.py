"""Tests for the AdamW update and the cosine schedule."""
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from app.autodiff.tensor import Parameter
from app.core.errors import ConfigurationError, NumericError
from app.services.optimizer import AdamW, cosine_lr


def with_gradient(p, g):
    (p * g).sum().backward()
    return p


class TestAdamW:
    def test_zero_gradient_without_decay(self):
        p = with_gradient(Parameter([1.0, -2.0]), 0.0)
        AdamW([("p", p)], weight_decay=0.0).step(0.1)
        assert_array_equal(p.data, [1.0, -2.0])

    @pytest.mark.parametrize("g", [0.3, -2.0, 40.0])
    def test_first_step_moves_by_lr_against_the_sign(self, g):
        p = with_gradient(Parameter([1.0]), g)
        AdamW([("p", p)], weight_decay=0.0).step(0.1)
        assert_allclose(p.data, [1.0 - 0.1 * np.sign(g)], rtol=1e-6)

    def test_decay_only(self):
        p = Parameter([2.0, -4.0])
        AdamW([("p", p)], weight_decay=0.01).step(0.1)
        assert_allclose(p.data, np.array([2.0, -4.0]) * (1 - 0.1 * 0.01), rtol=1e-15)

    def test_moment_buffers_match_parameter_shapes(self):
        params = [("a", Parameter(np.zeros((2, 3)))), ("b", Parameter(np.zeros(4)))]
        opt = AdamW(params)
        assert {k: v.shape for k, v in opt.state.m.items()} == {"a": (2, 3), "b": (4,)}
        assert {k: v.shape for k, v in opt.state.v.items()} == {"a": (2, 3), "b": (4,)}

    def test_non_finite_gradient_names_the_parameter(self):
        good = with_gradient(Parameter([1.0]), 1.0)
        bad = Parameter([1.0, 2.0])
        bad.grad = np.array([0.0, np.nan])
        opt = AdamW([("good", good), ("head.weight", bad)])
        with pytest.raises(NumericError, match="head.weight") as info:
            opt.step(0.1)
        assert info.value.detail == {"parameter": "head.weight"}
        assert_array_equal(good.data, [1.0])
        assert opt.state.step == 0

    @pytest.mark.parametrize("kwargs", [{"beta1": 1.0}, {"beta2": -0.1}, {"eps": 0.0}, {"weight_decay": -1.0}])
    def test_bad_hyperparameters(self, kwargs):
        with pytest.raises(ConfigurationError):
            AdamW([("p", Parameter([0.0]))], **kwargs)


class TestCosineLr:
    def test_endpoints_and_midpoint(self):
        assert cosine_lr(0, 100, 1e-4) == 1e-4
        assert cosine_lr(100, 100, 1e-4) == pytest.approx(0.0, abs=1e-20)
        assert cosine_lr(50, 100, 1e-4) == pytest.approx(5e-5, rel=1e-12)

    def test_monotone_decreasing(self):
        lrs = [cosine_lr(step, 37, 0.01) for step in range(38)]
        assert all(a > b for a, b in zip(lrs, lrs[1:]))

    def test_past_the_end_stays_at_zero(self):
        assert cosine_lr(150, 100, 1e-4) == cosine_lr(100, 100, 1e-4)

    def test_no_steps_keeps_initial_rate(self):
        assert cosine_lr(0, 0, 1e-4) == 1e-4
