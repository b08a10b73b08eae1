"""
训练损失: 加权非对称损失 (WA)、作为基线的加权 BCE、四类边共现损失及两者的组合
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence, Tuple

import numpy as np

from app.autodiff.tensor import Tensor, clip, log, log_softmax_rows
from app.core.errors import ConfigurationError, ContractError

if TYPE_CHECKING:
    from app.models.base import Linear

PROB_EPS = 1e-7
N_EDGE_CLASSES = 4


def compute_weights(rates: Sequence[float]) -> np.ndarray:
    """
    按出现率计算 AU 权重: w_i = N (1/r_i) / sum_j (1/r_j)，权重之和恒为 N

    Raises:
        ConfigurationError: 任一出现率不在 (0, 1] 内
    """
    rates = np.asarray(rates, dtype=np.float64)
    bad = np.flatnonzero(~((rates > 0) & (rates <= 1)))
    if bad.size:
        raise ConfigurationError(
            f"occurrence rates must lie in (0, 1]; offending AUs: {bad.tolist()}",
            {"aus": bad.tolist()},
        )
    inverse = 1.0 / rates
    return len(rates) * inverse / inverse.sum()


@dataclass(frozen=True, eq=False)
class OccurrenceStats:
    rates: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_rates(cls, rates: Sequence[float]) -> "OccurrenceStats":
        rates = np.asarray(rates, dtype=np.float64)
        return cls(rates=rates, weights=compute_weights(rates))

    @property
    def n_aus(self) -> int:
        return len(self.rates)


def _check_inputs(p: Tensor, y: np.ndarray, stats: OccurrenceStats) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape or p.shape[-1] != stats.n_aus:
        raise ContractError(f"predictions {p.shape}, labels {y.shape} and {stats.n_aus} weights disagree")
    if np.any(p.data < 0) or np.any(p.data > 1):
        raise ContractError("predictions must lie in [0, 1] before clamping")
    if np.any((y != 0) & (y != 1)):
        raise ContractError("labels must be binary")
    return y


def weighted_asymmetric_loss(p: Tensor, y: np.ndarray, stats: OccurrenceStats) -> Tensor:
    """
    -(1/N) sum_i w_i [y_i log p_i + (1 - y_i) p_i log(1 - p_i)]，再对 batch 取平均

    负项多乘一个 p_i，压低容易判断的未激活 AU。取对数前概率截断到 [1e-7, 1 - 1e-7]

    Raises:
        ContractError: p 超出 [0, 1]、标签非二值或形状不一致
    """
    y = _check_inputs(p, y, stats)
    pc = clip(p, PROB_EPS, 1.0 - PROB_EPS)
    terms = y * log(pc) + (1.0 - y) * pc * log(1.0 - pc)
    per_sample = -(terms * stats.weights).mean(axis=-1)
    return per_sample.mean()


def weighted_bce_loss(p: Tensor, y: np.ndarray, stats: OccurrenceStats) -> Tensor:
    """加权二元交叉熵，权重与截断方式同 WA"""
    y = _check_inputs(p, y, stats)
    pc = clip(p, PROB_EPS, 1.0 - PROB_EPS)
    terms = y * log(pc) + (1.0 - y) * log(1.0 - pc)
    return (-(terms * stats.weights).mean(axis=-1)).mean()


def edge_labels(y: np.ndarray, pairs: Sequence[Tuple[int, int]]) -> np.ndarray:
    """边 (i, j) 的类别为 2 y_i + y_j: 0 (0,0), 1 (0,1), 2 (1,0), 3 (1,1)"""
    y = np.asarray(y).astype(np.int64)
    src = np.array([i for i, _ in pairs])
    dst = np.array([j for _, j in pairs])
    return 2 * y[..., src] + y[..., dst]


def edge_head(e: Tensor, shared_fc: "Linear") -> Tensor:
    """所有边共享一个全连接层，每条边输出 4 个共现 logits"""
    if shared_fc.out_features != N_EDGE_CLASSES:
        raise ContractError(f"edge head must emit {N_EDGE_CLASSES} logits, got {shared_fc.out_features}")
    return shared_fc(e)


def edge_cooccurrence_loss(logits: Tensor, labels: np.ndarray) -> Tensor:
    """
    对所有有向边 (及 batch) 取平均的多类交叉熵

    Args:
        logits: [..., P, 4]
        labels: 整数类别 [..., P]

    Raises:
        ContractError: logits 与标签的边集合不一致
    """
    labels = np.asarray(labels)
    if logits.shape[:-1] != labels.shape or logits.shape[-1] != N_EDGE_CLASSES:
        raise ContractError(f"edge logits {logits.shape} do not match edge labels {labels.shape}")
    if np.any((labels < 0) | (labels >= N_EDGE_CLASSES)):
        raise ContractError("edge labels must lie in {0, 1, 2, 3}")
    one_hot = np.eye(N_EDGE_CLASSES)[labels]
    return -(log_softmax_rows(logits) * one_hot).sum(axis=-1).mean()


def combined_loss(lwa: Tensor, le: Tensor, lambda_: float) -> Tensor:
    """总损失 L = L_WA + lambda L_E"""
    if lambda_ < 0:
        raise ContractError(f"lambda must be non-negative, got {lambda_}")
    return lwa + le * lambda_
