"""
两阶段训练

第一阶段: 用加权非对称损失训练骨干网络 + ANFL
第二阶段: 载入第一阶段参数，以 L_WA + lambda L_E 训练 MEFL、GatedGCN、第二阶段 SC 和边分类头，
骨干网络与 AFG 用第二阶段学习率微调。FGG 和第一阶段 SC 不参与第二阶段计算图

每个阶段有独立的 AdamW 状态和余弦学习率，打乱顺序的随机数生成器由 (seed, stage) 决定，
固定种子即可复现整次训练
"""
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np
import structlog

from app.autodiff.tensor import Tensor
from app.core.errors import ConfigurationError, ContractError, NumericError
from app.core.logging import MetricsLog
from app.models.mefl import ordered_pairs
from app.models.network import AuRelationNet
from app.schemas.config import TrainConfig
from app.schemas.report import EpochRecord
from app.services.checkpoint import Checkpoint
from app.services.corpus import Corpus, compute_occurrence
from app.services.inference import predict
from app.services.losses import (
    OccurrenceStats,
    combined_loss,
    edge_cooccurrence_loss,
    edge_labels,
    weighted_asymmetric_loss,
    weighted_bce_loss,
)
from app.services.metrics import macro_f1
from app.services.optimizer import AdamW, cosine_lr

logger = structlog.get_logger(__name__)


@dataclass
class StepLoss:
    total: Tensor
    l_wa: float
    l_e: float


def _batches(n: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _stage_loss(model: AuRelationNet, stage: int, x: np.ndarray, y: np.ndarray, stats: OccurrenceStats) -> StepLoss:
    config = model.config
    if stage == 1:
        p = model.stage1_forward(Tensor(x)).probabilities
        label_loss = weighted_bce_loss if config.stage1_loss == "wbce" else weighted_asymmetric_loss
        lwa = label_loss(p, y, stats)
        return StepLoss(lwa, lwa.item(), 0.0)

    out = model.stage2_forward(Tensor(x))
    lwa = weighted_asymmetric_loss(out.probabilities, y, stats)
    if not config.use_edge_loss:
        return StepLoss(lwa, lwa.item(), 0.0)
    le = edge_cooccurrence_loss(out.edge_logits, edge_labels(y, ordered_pairs(config.n_aus)))
    return StepLoss(combined_loss(lwa, le, config.lambda_), lwa.item(), le.item())


def _run_stage(
    model: AuRelationNet,
    stage: int,
    corpus: Corpus,
    stats: OccurrenceStats,
    metrics_log: MetricsLog,
) -> List[EpochRecord]:
    config = model.config
    epochs, lr0 = (config.stage1_epochs, config.stage1_lr) if stage == 1 else (config.stage2_epochs, config.stage2_lr)
    optimizer = AdamW(
        model.stage_parameters(stage),
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.eps,
        weight_decay=config.weight_decay,
    )
    n = len(corpus)
    total_steps = epochs * math.ceil(n / config.batch_size)
    rng = np.random.default_rng([config.seed, stage])

    history: List[EpochRecord] = []
    step = 0
    for epoch in range(1, epochs + 1):
        sums = np.zeros(3)
        lr = lr0
        for index in _batches(n, config.batch_size, rng):
            lr = cosine_lr(step, total_steps, lr0)
            optimizer.zero_grad()
            loss = _stage_loss(model, stage, corpus.features[index], corpus.labels[index], stats)
            value = loss.total.item()
            if not np.isfinite(value):
                raise NumericError(
                    f"non-finite loss in stage {stage}, epoch {epoch}, step {step}",
                    {"stage": stage, "epoch": epoch, "step": step},
                )
            loss.total.backward()
            optimizer.step(lr)
            step += 1
            sums += len(index) * np.array([value, loss.l_wa, loss.l_e])

        means = sums / n
        train_f1 = macro_f1(predict(model, corpus.features, stage), corpus.labels)
        record = EpochRecord(
            stage=stage,
            epoch=epoch,
            loss=float(means[0]),
            l_wa=float(means[1]),
            l_e=float(means[2]),
            mean_f1=train_f1,
            lr=lr,
        )
        history.append(record)
        metrics_log.emit("epoch", **record.model_dump())
        logger.info(f"stage{stage}.epoch", epoch=epoch, loss=record.loss, mean_f1=record.mean_f1, lr=lr)
    return history


def _in_features(corpus: Corpus, config: TrainConfig) -> Optional[int]:
    if corpus.n_aus != config.n_aus:
        raise ConfigurationError(f"corpus has {corpus.n_aus} AUs but n_aus = {config.n_aus}")
    if corpus.feature_kind == "face":
        if corpus.width != config.channels:
            raise ConfigurationError(f"face corpus has width {corpus.width} but channels = {config.channels}")
        return None
    return corpus.width


def train_stage1(corpus: Corpus, config: TrainConfig, metrics_log: Optional[MetricsLog] = None) -> Checkpoint:
    """
    第一阶段: 训练骨干网络 + ANFL (消融中的纯骨干设置则训练线性分类头)

    Raises:
        ConfigurationError: 语料中有从未出现的 AU，或尺寸不一致
        NumericError: 损失或梯度出现非有限值
    """
    stats = compute_occurrence(corpus)
    model = AuRelationNet(config, _in_features(corpus, config))
    logger.info("stage1.start", n_samples=len(corpus), epochs=config.stage1_epochs, lr=config.stage1_lr)
    _run_stage(model, 1, corpus, stats, metrics_log or MetricsLog())
    return Checkpoint.from_model(model, "stage1", stats)


def train_stage2(
    corpus: Corpus,
    stage1_ckpt: Optional[Checkpoint],
    config: TrainConfig,
    metrics_log: Optional[MetricsLog] = None,
) -> Checkpoint:
    """
    第二阶段: 在第一阶段检查点上训练 MEFL + GatedGCN

    Raises:
        ContractError: 没有第一阶段检查点，或检查点与配置不符
        ConfigurationError: 当前设置没有 MEFL，或有从未出现的 AU
        NumericError: 损失或梯度出现非有限值
    """
    if stage1_ckpt is None:
        raise ContractError("stage-2 training needs a stage-1 checkpoint")
    if not config.has_stage2:
        raise ConfigurationError("stage 2 needs use_mefl = true")
    stats = compute_occurrence(corpus)
    model = AuRelationNet(config, _in_features(corpus, config))
    stage1_ckpt.restore(model)
    logger.info("stage2.start", n_samples=len(corpus), epochs=config.stage2_epochs, lr=config.stage2_lr)
    _run_stage(model, 2, corpus, stats, metrics_log or MetricsLog())
    return Checkpoint.from_model(model, "stage2", stats)


def train(corpus: Corpus, config: TrainConfig, metrics_log: Optional[MetricsLog] = None) -> Checkpoint:
    """先训练第一阶段，设置包含 MEFL 时再训练第二阶段"""
    metrics_log = metrics_log or MetricsLog()
    checkpoint = train_stage1(corpus, config, metrics_log)
    if config.has_stage2:
        checkpoint = train_stage2(corpus, checkpoint, config, metrics_log)
    return checkpoint
