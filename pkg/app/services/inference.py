from typing import Optional

import numpy as np
import structlog

from app.autodiff.tensor import Tensor, no_grad
from app.core.errors import ContractError, EmptyInputError
from app.models.network import AuRelationNet
from app.services.checkpoint import Checkpoint

logger = structlog.get_logger(__name__)

PREDICT_BATCH = 256


def predict(model: AuRelationNet, inputs: np.ndarray, stage: int, batch_size: int = PREDICT_BATCH) -> np.ndarray:
    """
    Occurrence probabilities [n, N] for inputs [n, D, F], evaluated in input order.

    Args:
        model: Network to run
        inputs: Raw features or face representations
        stage: 1 for the ANFL path, 2 for the relation-graph path
        batch_size: Records per forward pass
    """
    if len(inputs) == 0:
        raise EmptyInputError("nothing to predict")
    if stage == 2 and not model.has_stage2:
        raise ContractError("stage-2 prediction needs a model with MEFL / GatedGCN")

    forward = model.stage2_forward if stage == 2 else model.stage1_forward
    chunks = []
    with no_grad():
        for start in range(0, len(inputs), batch_size):
            chunks.append(forward(Tensor(inputs[start:start + batch_size])).probabilities.data)
    return np.concatenate(chunks, axis=0)


def infer(x_batch: np.ndarray, checkpoint: Checkpoint, model: Optional[AuRelationNet] = None) -> np.ndarray:
    """
    Backbone -> AFG -> MEFL -> GatedGCN -> SC on a stage-2 checkpoint.

    Settings without MEFL use their stage-1 path. A stage-1 checkpoint of a
    setting that has MEFL falls back to ANFL inference and logs an
    `inference.fallback` warning.
    """
    model = model or checkpoint.build_model()
    if not model.has_stage2:
        return predict(model, x_batch, stage=1)
    if checkpoint.stage == "stage2":
        return predict(model, x_batch, stage=2)
    logger.warning("inference.fallback", stage=checkpoint.stage, reason="no trained relation graph")
    return predict(model, x_batch, stage=1)
