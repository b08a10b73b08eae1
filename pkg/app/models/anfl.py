"""
关系感知的节点特征学习 (第一阶段)

AFG: 把全脸表示 X [..., D, C] 映射为每个 AU 一张特征图，再池化成节点特征
FGG: 每个节点连接最相似的 K 个节点，做一层残差 GCN
SC: 节点特征与可训练锚向量的余弦相似度即为概率
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.autodiff.tensor import (
    Parameter,
    Tensor,
    global_average_pool,
    l2_norm,
    relu,
    stack,
)
from app.core.errors import ConfigurationError, DimensionError
from app.models.base import Linear, Module, uniform_init

SC_NORM_EPS = 1e-8


@dataclass(frozen=True, eq=False)
class Adjacency:
    """二值邻接矩阵 [..., N, N]，第 i 行标出节点 i 接收消息的 K 个邻居"""

    a: np.ndarray
    k: int

    def rows_valid(self) -> bool:
        n = self.a.shape[-1]
        diagonal = self.a[..., np.arange(n), np.arange(n)]
        return bool(np.all(self.a.sum(axis=-1) == self.k) and np.all(diagonal == 0))


def afg_forward(x: Tensor, per_au_fc: Sequence[Linear], n_aus: int) -> Tuple[Tensor, Tensor]:
    """
    计算每个 AU 的特征图和节点特征

    Args:
        x: 全脸表示 [..., D, C]
        per_au_fc: 每个 AU 一个 C->C 线性映射
        n_aus: AU 数量

    Returns:
        (u [..., N, D, C], v [..., N, C])，其中 u_i = x W_i + b_i，v_i = GAP(u_i)

    Raises:
        ConfigurationError: 线性映射个数与 n_aus 不一致
    """
    if len(per_au_fc) != n_aus:
        raise ConfigurationError(f"expected {n_aus} per-AU maps, got {len(per_au_fc)}")
    if x.ndim < 2:
        raise DimensionError(f"face representation must be [..., D, C], got shape {x.shape}")
    u = stack([fc(x) for fc in per_au_fc], axis=-3)
    return u, global_average_pool(u)


def build_topology(v: Tensor, k: int) -> Adjacency:
    """
    按原始点积为每个节点选出 K 个最相似的其他节点

    相似度相同时取编号较小的节点。结果是常量，选择过程不回传梯度

    Raises:
        ConfigurationError: K 不在 [1, N - 1] 内
    """
    data = v.data if isinstance(v, Tensor) else np.asarray(v, dtype=np.float64)
    n = data.shape[-2]
    if not 1 <= k <= n - 1:
        raise ConfigurationError(f"K must lie in [1, {n - 1}], got {k}")

    sim = np.matmul(data, np.swapaxes(data, -1, -2))
    idx = np.arange(n)
    sim[..., idx, idx] = -np.inf
    nearest = np.argsort(-sim, axis=-1, kind="stable")[..., :k]
    a = np.zeros_like(sim)
    np.put_along_axis(a, nearest, 1.0, axis=-1)
    return Adjacency(a=a, k=k)


class GcnLayer(Module):
    """线性消息 + 线性更新 + 残差 + ReLU"""

    def __init__(self, channels: int, rng: np.random.Generator):
        self.w_msg = Parameter(uniform_init(rng, channels, (channels, channels)), name="w_msg")
        self.w_upd = Parameter(uniform_init(rng, channels, (channels, channels)), name="w_upd")

    def forward(self, v: Tensor, adjacency: Adjacency) -> Tensor:
        return fgg_gcn_layer(v, adjacency, self)


def fgg_gcn_layer(v: Tensor, adjacency: Adjacency, layer: GcnLayer) -> Tensor:
    """v_i' = ReLU(v_i + (sum_j a_ij v_j W_msg) W_upd)."""
    if adjacency.a.shape[-1] != v.shape[-2]:
        raise DimensionError(f"adjacency {adjacency.a.shape} does not match node features {v.shape}")
    messages = Tensor(adjacency.a) @ (v @ layer.w_msg)
    return relu(v + messages @ layer.w_upd)


class ScClassifier(Module):
    """每个 AU 一个可训练锚向量"""

    def __init__(self, n_aus: int, channels: int, rng: np.random.Generator):
        self.s = Parameter(0.1 * rng.standard_normal((n_aus, channels)), name="s")

    def forward(self, v: Tensor) -> Tensor:
        return sc_predict(v, self)


def sc_predict(v: Tensor, cls: ScClassifier) -> Tensor:
    """
    p_i = cos(ReLU(v_i), ReLU(s_i))，每个范数加 1e-8

    两个向量都非负，所以 p 在 [0, 1] 内；零向量得到 0
    """
    if v.shape[-2:] != cls.s.shape:
        raise DimensionError(f"node features {v.shape} do not match anchors {cls.s.shape}")
    rv, rs = relu(v), relu(cls.s)
    dot = (rv * rs).sum(axis=-1)
    return dot / ((l2_norm(rv) + SC_NORM_EPS) * (l2_norm(rs) + SC_NORM_EPS))


@dataclass
class AnflOutput:
    probabilities: Tensor
    u: Tensor
    v: Tensor
    adjacency: Optional[Adjacency]


class Anfl(Module):
    """AFG + FGG + SC；不使用 FGG 时直接对池化后的 AU 特征打分"""

    def __init__(self, n_aus: int, channels: int, k: int, rng: np.random.Generator, use_fgg: bool = True):
        self.n_aus = n_aus
        self.k = k
        self.afg = [Linear(channels, channels, rng) for _ in range(n_aus)]
        self.gcn = GcnLayer(channels, rng) if use_fgg else None
        self.sc = ScClassifier(n_aus, channels, rng)

    @property
    def use_fgg(self) -> bool:
        return self.gcn is not None

    def features(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        return afg_forward(x, self.afg, self.n_aus)

    def forward(self, x: Tensor, adjacency: Optional[Adjacency] = None) -> AnflOutput:
        """
        第一阶段预测

        Args:
            x: 全脸表示 [..., D, C]
            adjacency: 指定的固定拓扑，不传则由当前节点特征重新计算

        Returns:
            AnflOutput: 概率 [..., N] 及中间结果
        """
        u, v = self.features(x)
        if self.gcn is None:
            return AnflOutput(self.sc(v), u, v, None)
        if adjacency is None:
            adjacency = build_topology(v, self.k)
        return AnflOutput(self.sc(self.gcn(v, adjacency)), u, v, adjacency)


def anfl_forward(x: Tensor, anfl: Anfl, adjacency: Optional[Adjacency] = None) -> AnflOutput:
    return anfl(x, adjacency)
