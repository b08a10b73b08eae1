"""
解耦权重衰减的 AdamW 优化器，以及按阶段计算的余弦学习率
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from app.autodiff.tensor import Parameter
from app.core.errors import ConfigurationError, NumericError


def cosine_lr(step: int, total_steps: int, lr0: float) -> float:
    """
    lr0 * 0.5 * (1 + cos(pi * step / total_steps)).

    从 lr0 开始，到 `total_steps` 时降为 0，之后保持 0
    """
    if total_steps <= 0:
        return lr0
    progress = min(max(step, 0), total_steps) / total_steps
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * progress))


@dataclass
class OptimizerState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


class AdamW:
    """
    Adam 动量 + 直接作用在参数上的权重衰减

    每一步先把参数缩放 (1 - lr * weight_decay)，再做仅由梯度计算的偏差校正 Adam 更新
    """

    def __init__(
        self,
        named_params: Sequence[Tuple[str, Parameter]],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 5e-4,
    ):
        if not 0 <= beta1 < 1 or not 0 <= beta2 < 1:
            raise ConfigurationError(f"betas must lie in [0, 1), got ({beta1}, {beta2})")
        if eps <= 0 or weight_decay < 0:
            raise ConfigurationError(f"need eps > 0 and weight_decay >= 0, got {eps}, {weight_decay}")
        self.params: List[Tuple[str, Parameter]] = list(named_params)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.state = OptimizerState(
            m={name: np.zeros_like(p.data) for name, p in self.params},
            v={name: np.zeros_like(p.data) for name, p in self.params},
        )

    def zero_grad(self) -> None:
        for _, p in self.params:
            p.zero_grad()

    def step(self, lr: float) -> None:
        """
        以学习率 `lr` 更新一步

        没有梯度的参数 (损失未用到) 只做衰减

        Raises:
            NumericError: 任一梯度非有限值，此时不更新任何参数
        """
        for name, p in self.params:
            if p.grad is not None and not np.all(np.isfinite(p.grad)):
                raise NumericError(f"non-finite gradient in parameter {name}", {"parameter": name})

        self.state.step += 1
        t = self.state.step
        correction1 = 1.0 - self.beta1 ** t
        correction2 = 1.0 - self.beta2 ** t

        for name, p in self.params:
            p.data *= 1.0 - lr * self.weight_decay
            if p.grad is None:
                continue
            m = self.state.m[name]
            v = self.state.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad * p.grad
            p.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
