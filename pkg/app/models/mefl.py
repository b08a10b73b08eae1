"""
多维边特征学习 (第二阶段)

FAM: 每个 AU 特征图对全脸做交叉注意力
ARM: 一对 AU 的 FAM 输出之间双向交叉注意力，池化成每个有序对一条有向边向量

不论 FGG 拓扑如何，所有有序对都会建边
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np

from app.autodiff.tensor import (
    Parameter,
    Tensor,
    global_average_pool,
    softmax_rows,
    transpose,
)
from app.core.errors import DimensionError
from app.models.base import Module, uniform_init


@lru_cache(maxsize=None)
def ordered_pairs(n: int) -> Tuple[Tuple[int, int], ...]:
    """所有 i != j 的 (i, j)，按字典序排列"""
    return tuple((i, j) for i in range(n) for j in range(n) if i != j)


def pair_index(n: int) -> Tuple[np.ndarray, np.ndarray]:
    pairs = ordered_pairs(n)
    return np.array([i for i, _ in pairs]), np.array([j for _, j in pairs])


def take_along(t: Tensor, index: np.ndarray, axis_from_end: int) -> Tensor:
    """沿倒数第 `axis_from_end` 个轴按 index 取值"""
    key = (slice(None),) * (t.ndim - axis_from_end) + (index,)
    return t[key]


@dataclass(eq=False)
class EdgeFeatureSet:
    """有向边向量 e [..., P, C]，P = N(N-1)，行顺序同 `ordered_pairs(N)`"""

    e: Tensor
    n_nodes: int
    _lookup: Dict[Tuple[int, int], int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        pairs = ordered_pairs(self.n_nodes)
        if self.e.ndim < 2 or self.e.shape[-2] != len(pairs):
            raise DimensionError(f"edge tensor {self.e.shape} does not hold {len(pairs)} directed edges")
        self._lookup = {pair: i for i, pair in enumerate(pairs)}

    @property
    def pairs(self) -> Tuple[Tuple[int, int], ...]:
        return ordered_pairs(self.n_nodes)

    def __len__(self) -> int:
        return len(self._lookup)

    def __getitem__(self, pair: Tuple[int, int]) -> Tensor:
        return take_along(self.e, np.array(self._lookup[pair]), 2)


class CrossAttention(Module):
    """单头缩放点积注意力，带 query/key/value 投影"""

    def __init__(self, channels: int, rng: np.random.Generator):
        self.w_q = Parameter(uniform_init(rng, channels, (channels, channels)), name="w_q")
        self.w_k = Parameter(uniform_init(rng, channels, (channels, channels)), name="w_k")
        self.w_v = Parameter(uniform_init(rng, channels, (channels, channels)), name="w_v")

    @property
    def d_k(self) -> int:
        return self.w_k.shape[1]

    def forward(self, query_src: Tensor, kv_src: Tensor) -> Tensor:
        return cross_attention(query_src, kv_src, self)


def attention_weights(query_src: Tensor, kv_src: Tensor, p: CrossAttention) -> Tensor:
    if query_src.shape[-2:] != kv_src.shape[-2:]:
        raise DimensionError(f"attention inputs disagree: {query_src.shape} vs {kv_src.shape}")
    if query_src.shape[-1] != p.w_q.shape[0]:
        raise DimensionError(f"attention input {query_src.shape} does not match projections {p.w_q.shape}")
    scores = (query_src @ p.w_q) @ transpose(kv_src @ p.w_k)
    return softmax_rows(scores / np.sqrt(p.d_k))


def cross_attention(query_src: Tensor, kv_src: Tensor, p: CrossAttention) -> Tensor:
    """softmax((A W_q)(B W_k)^T / sqrt(d_k)) B W_v，输入形状 [..., D, C]"""
    return attention_weights(query_src, kv_src, p) @ (kv_src @ p.w_v)


def fam(u_i: Tensor, u_j: Tensor, x: Tensor, p_fam: CrossAttention) -> Tuple[Tensor, Tensor]:
    """一对 AU 各自对全脸做注意力，得到 AU 专属特征"""
    return cross_attention(u_i, x, p_fam), cross_attention(u_j, x, p_fam)


def arm(f_i: Tensor, f_j: Tensor, p_arm: CrossAttention) -> Tuple[Tensor, Tensor]:
    """
    一对 AU 的两条有向边向量

    e_ij: 以 f_j 为 query、f_i 为 key/value 的注意力结果再池化；e_ji 角色互换
    """
    e_ij = global_average_pool(cross_attention(f_j, f_i, p_arm))
    e_ji = global_average_pool(cross_attention(f_i, f_j, p_arm))
    return e_ij, e_ji


class Mefl(Module):
    """所有 AU 对共享一个 FAM 和一个 ARM"""

    def __init__(self, channels: int, rng: np.random.Generator):
        self.fam = CrossAttention(channels, rng)
        self.arm = CrossAttention(channels, rng)

    def forward(self, u: Tensor, x: Tensor) -> EdgeFeatureSet:
        return mefl_forward(u, x, self)


def mefl_forward(u: Tensor, x: Tensor, mefl: Mefl) -> EdgeFeatureSet:
    """
    计算所有有序 AU 对的边特征，全部 pair 一次批量计算

    Args:
        u: AU 特征图 [..., N, D, C]
        x: 全脸表示 [..., D, C]

    Returns:
        EdgeFeatureSet: 共 N(N-1) 行
    """
    if u.ndim < 3:
        raise DimensionError(f"AU maps must be [..., N, D, C], got shape {u.shape}")
    n = u.shape[-3]
    attended = cross_attention(u, x.reshape(x.shape[:-2] + (1,) + x.shape[-2:]), mefl.fam)
    src, dst = pair_index(n)
    relation = cross_attention(take_along(attended, dst, 3), take_along(attended, src, 3), mefl.arm)
    return EdgeFeatureSet(global_average_pool(relation), n)
