"""
Training checkpoints.

A checkpoint is a parameter file (see app.autodiff.serialization) whose
metadata section is UTF-8 JSON:

    {"format_version": 1, "stage": "stage1" | "stage2", "config": {...},
     "in_features": int | null, "n_aus": int}

and whose arrays are the model parameters followed by two reserved entries,
`stats.rates` and `stats.weights`, holding the training occurrence statistics.
"""
import json
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import structlog
from pydantic import ValidationError

from app.autodiff.serialization import load_parameters, save_parameters
from app.core.errors import ContractError, FileFormatError, FileMissingError, FileVersionError
from app.models.network import AuRelationNet
from app.schemas.config import TrainConfig
from app.services.losses import OccurrenceStats

logger = structlog.get_logger(__name__)

CHECKPOINT_VERSION = 1
STAGES = ("stage1", "stage2")
RATES_KEY = "stats.rates"
WEIGHTS_KEY = "stats.weights"


@dataclass(eq=False)
class Checkpoint:
    stage: str
    config: TrainConfig
    parameters: "OrderedDict[str, np.ndarray]"
    occurrence: OccurrenceStats
    in_features: Optional[int]
    format_version: int = CHECKPOINT_VERSION

    def __post_init__(self) -> None:
        if self.stage not in STAGES:
            raise ContractError(f"checkpoint stage must be one of {STAGES}, got {self.stage!r}")

    @classmethod
    def from_model(cls, model: AuRelationNet, stage: str, occurrence: OccurrenceStats) -> "Checkpoint":
        """Snapshot a model; a stage-1 snapshot keeps only the stage-1 parameter groups."""
        named = model.stage_parameters(1) if stage == "stage1" else model.named_parameters()
        parameters = OrderedDict((name, p.data.copy()) for name, p in named)
        return cls(stage, model.config, parameters, occurrence, model.in_features)

    def restore(self, model: AuRelationNet) -> None:
        """
        Load the stored parameters into a model built from a compatible config.

        Raises:
            ContractError: If a parameter the stage must hold is missing, or the
                checkpoint holds parameters the model does not have
            DimensionError: If shapes disagree
        """
        if self.stage == "stage2":
            model.load_state_dict(self.parameters)
            return
        required = {name for name, _ in model.stage_parameters(1)}
        missing = sorted(required - set(self.parameters))
        unexpected = sorted(set(self.parameters) - {name for name, _ in model.named_parameters()})
        if missing or unexpected:
            raise ContractError(
                "stage-1 checkpoint does not match the model",
                {"missing": missing, "unexpected": unexpected},
            )
        model.load_state_dict(self.parameters, strict=False)

    def build_model(self) -> AuRelationNet:
        model = AuRelationNet(self.config, self.in_features)
        self.restore(model)
        return model


def _metadata(checkpoint: Checkpoint) -> bytes:
    document = {
        "format_version": checkpoint.format_version,
        "stage": checkpoint.stage,
        "config": checkpoint.config.model_dump(mode="json", by_alias=True),
        "in_features": checkpoint.in_features,
        "n_aus": checkpoint.config.n_aus,
    }
    return json.dumps(document, sort_keys=True).encode("utf-8")


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> None:
    arrays: Dict[str, np.ndarray] = OrderedDict(checkpoint.parameters)
    if RATES_KEY in arrays or WEIGHTS_KEY in arrays:
        raise ContractError(f"parameter names {RATES_KEY!r} and {WEIGHTS_KEY!r} are reserved")
    arrays[RATES_KEY] = checkpoint.occurrence.rates
    arrays[WEIGHTS_KEY] = checkpoint.occurrence.weights
    save_parameters(path, arrays, _metadata(checkpoint))
    logger.info("checkpoint.saved", path=str(path), stage=checkpoint.stage, parameters=len(checkpoint.parameters))


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Raises:
        FileMissingError: If the file does not exist
        FileFormatError: If the metadata or reserved entries are malformed
        FileVersionError: If the checkpoint format version is unsupported
        FileTruncatedError, FileChecksumError: From the parameter file layer
    """
    path = Path(path)
    if not path.exists():
        raise FileMissingError(f"checkpoint file not found: {path}")
    arrays, raw = load_parameters(path)
    try:
        document = json.loads(raw.decode("utf-8"))
        version = document["format_version"]
        stage = document["stage"]
        config = TrainConfig.model_validate(document["config"])
        in_features = document["in_features"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValidationError) as e:
        raise FileFormatError(f"checkpoint metadata is malformed: {e}") from e
    if version != CHECKPOINT_VERSION:
        raise FileVersionError(f"checkpoint format version {version} not supported")
    if RATES_KEY not in arrays or WEIGHTS_KEY not in arrays:
        raise FileFormatError("checkpoint has no occurrence statistics")

    occurrence = OccurrenceStats(rates=arrays.pop(RATES_KEY), weights=arrays.pop(WEIGHTS_KEY))
    checkpoint = Checkpoint(stage, config, arrays, occurrence, in_features, version)
    logger.info("checkpoint.loaded", path=str(path), stage=stage)
    return checkpoint
