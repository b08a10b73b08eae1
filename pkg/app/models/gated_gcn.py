"""
在稠密有向关系图上的门控图卷积 (GatedGCN)

每一层:
1. 用边自身特征和两个端点更新每条边
2. 更新后的边经 sigmoid 变成逐通道门控，并在同一源节点的出边上归一化
3. 用门控后的消息更新节点

节点和边都是残差更新，权重全为零时图保持不变
"""
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from app.autodiff.tensor import Parameter, Tensor, relu, sigmoid
from app.core.errors import ContractError, DimensionError
from app.models.anfl import ScClassifier, sc_predict
from app.models.base import Module, uniform_init
from app.models.mefl import EdgeFeatureSet, pair_index, take_along

GATE_EPSILON = 1e-6


@dataclass(eq=False)
class RelationGraph:
    nodes: Tensor
    edges: EdgeFeatureSet
    layer_index: int = 0

    def __post_init__(self) -> None:
        if self.nodes.shape[-2] != self.edges.n_nodes or self.nodes.shape[-1] != self.edges.e.shape[-1]:
            raise DimensionError(f"nodes {self.nodes.shape} and edges {self.edges.e.shape} disagree")


class GatedGcnLayer(Module):
    """w1 节点自身，w2 邻居节点，w3 边自身，w4 边的源节点，w5 边的目标节点"""

    def __init__(self, channels: int, rng: np.random.Generator):
        shape = (channels, channels)
        self.w1 = Parameter(uniform_init(rng, channels, shape), name="w1")
        self.w2 = Parameter(uniform_init(rng, channels, shape), name="w2")
        self.w3 = Parameter(uniform_init(rng, channels, shape), name="w3")
        self.w4 = Parameter(uniform_init(rng, channels, shape), name="w4")
        self.w5 = Parameter(uniform_init(rng, channels, shape), name="w5")


def edge_gates(edge_hat: Tensor, n: int) -> Tensor:
    """eta_ij = sigmoid(e_ij) / (sum_j' sigmoid(e_ij') + eps)，按源节点分组为 [..., N, N-1, C]"""
    lead = edge_hat.shape[:-2]
    gated = sigmoid(edge_hat).reshape(lead + (n, n - 1, edge_hat.shape[-1]))
    return gated / (gated.sum(axis=-2, keepdims=True) + GATE_EPSILON)


def gated_layer(graph: RelationGraph, layer: GatedGcnLayer, num_layers: int) -> RelationGraph:
    """
    对节点和边做一次门控更新

    Raises:
        ContractError: 图已经过了全部 `num_layers` 层
    """
    if graph.layer_index >= num_layers:
        raise ContractError(f"graph is at layer {graph.layer_index}; only {num_layers} layers exist")

    v, e, n = graph.nodes, graph.edges.e, graph.edges.n_nodes
    src, dst = pair_index(n)
    v_src, v_dst = take_along(v, src, 2), take_along(v, dst, 2)

    edge_hat = e + relu(e @ layer.w3 + v_src @ layer.w4 + v_dst @ layer.w5)
    eta = edge_gates(edge_hat, n)

    lead, channels = v.shape[:-2], v.shape[-1]
    messages = (v_dst @ layer.w2).reshape(lead + (n, n - 1, channels))
    node_hat = v + relu(v @ layer.w1 + (eta * messages).sum(axis=-2))

    return RelationGraph(node_hat, EdgeFeatureSet(edge_hat, n), graph.layer_index + 1)


class GatedGcn(Module):
    def __init__(self, channels: int, num_layers: int, rng: np.random.Generator):
        if num_layers < 1:
            raise ContractError(f"need at least one gated layer, got {num_layers}")
        self.layers: List[GatedGcnLayer] = [GatedGcnLayer(channels, rng) for _ in range(num_layers)]

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def forward(self, v0: Tensor, e0: EdgeFeatureSet) -> RelationGraph:
        graph = RelationGraph(v0, e0, 0)
        for layer in self.layers:
            graph = gated_layer(graph, layer, self.num_layers)
        return graph


def classify(graph: RelationGraph, cls: ScClassifier, num_layers: int) -> Tensor:
    """
    用最后一层的节点特征做 SC 预测

    Raises:
        ContractError: 图还没有经过全部层
    """
    if graph.layer_index != num_layers:
        raise ContractError(f"classify needs layer {num_layers}, graph is at layer {graph.layer_index}")
    return sc_predict(graph.nodes, cls)


def gcn_forward(v0: Tensor, e0: EdgeFeatureSet, gcn: GatedGcn, cls: ScClassifier) -> Tuple[Tensor, RelationGraph]:
    final = gcn(v0, e0)
    return classify(final, cls, gcn.num_layers), final
