"""Tests for the gated graph convolution and stage-2 classification."""
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from app.autodiff.tensor import Tensor
from app.core.errors import ContractError, DimensionError
from app.models.anfl import ScClassifier, sc_predict
from app.models.gated_gcn import (
    GatedGcn,
    RelationGraph,
    classify,
    edge_gates,
    gated_layer,
    gcn_forward,
)
from app.models.mefl import EdgeFeatureSet


def graph(rng, batch=2, n=4, channels=3):
    v = rng.standard_normal((batch, n, channels))
    e = rng.standard_normal((batch, n * (n - 1), channels))
    return RelationGraph(Tensor(v), EdgeFeatureSet(Tensor(e), n))


class TestGatedLayer:
    def test_zero_weights_are_a_fixed_point(self, rng):
        gcn = GatedGcn(3, 2, rng)
        for p in gcn.parameters():
            p.data[...] = 0.0
        cls = ScClassifier(4, 3, rng)
        start = graph(rng)

        p, final = gcn_forward(start.nodes, start.edges, gcn, cls)
        assert_array_equal(final.nodes.data, start.nodes.data)
        assert_array_equal(final.edges.e.data, start.edges.e.data)
        assert_array_equal(p.data, sc_predict(start.nodes, cls).data)

    def test_shapes_preserved(self, rng):
        gcn = GatedGcn(3, 2, rng)
        start = graph(rng, batch=5, n=3)
        final = gcn(start.nodes, start.edges)
        assert final.nodes.shape == (5, 3, 3)
        assert final.edges.e.shape == (5, 6, 3)
        assert final.layer_index == 2

    def test_exhausted_layers(self, rng):
        gcn = GatedGcn(3, 1, rng)
        start = graph(rng)
        final = gcn(start.nodes, start.edges)
        with pytest.raises(ContractError):
            gated_layer(final, gcn.layers[0], gcn.num_layers)

    def test_classify_needs_final_layer(self, rng):
        with pytest.raises(ContractError):
            classify(graph(rng), ScClassifier(4, 3, rng), 2)

    def test_at_least_one_layer(self, rng):
        with pytest.raises(ContractError):
            GatedGcn(3, 0, rng)

    def test_mismatched_nodes_and_edges(self, rng):
        with pytest.raises(DimensionError):
            RelationGraph(Tensor(np.zeros((3, 2))), EdgeFeatureSet(Tensor(np.zeros((12, 2))), 4))


class TestGates:
    def test_gates_in_unit_interval(self, rng):
        eta = edge_gates(Tensor(rng.standard_normal((7, 12, 3)) * 5), 4).data
        assert eta.shape == (7, 4, 3, 3)
        assert np.all((eta > 0) & (eta < 1))
        assert np.all(eta.sum(axis=-2) <= 1.0)

    def test_single_outgoing_edge_gate_is_one(self, rng):
        eta = edge_gates(Tensor(rng.standard_normal((3, 2, 4))), 2).data
        assert_allclose(eta, 1.0, atol=1e-3)
