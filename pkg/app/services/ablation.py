"""
Ablation matrix: train and evaluate each setting over a list of seeds.

A setting fixes the component flags and the stage-1 label loss; the `/wbce`
rows train with weighted BCE so they can be read against their L_WA twins.
"""
from collections import OrderedDict
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import structlog
from pydantic import ValidationError

from app.core.errors import ConfigurationError
from app.core.logging import MetricsLog
from app.schemas.config import TrainConfig
from app.schemas.report import AblationRow
from app.services.corpus import Corpus, split
from app.services.metrics import evaluate
from app.services.trainer import train

logger = structlog.get_logger(__name__)

SETTINGS: "OrderedDict[str, Dict[str, Any]]" = OrderedDict(
    [
        ("backbone/wbce", dict(use_afg=False, use_fgg=False, use_mefl=False, use_edge_loss=False, stage1_loss="wbce")),
        ("afg/wbce", dict(use_afg=True, use_fgg=False, use_mefl=False, use_edge_loss=False, stage1_loss="wbce")),
        ("afg+fgg/wbce", dict(use_afg=True, use_fgg=True, use_mefl=False, use_edge_loss=False, stage1_loss="wbce")),
        ("backbone", dict(use_afg=False, use_fgg=False, use_mefl=False, use_edge_loss=False, stage1_loss="wa")),
        ("afg", dict(use_afg=True, use_fgg=False, use_mefl=False, use_edge_loss=False, stage1_loss="wa")),
        ("afg+fgg", dict(use_afg=True, use_fgg=True, use_mefl=False, use_edge_loss=False, stage1_loss="wa")),
        ("afg+mefl", dict(use_afg=True, use_fgg=False, use_mefl=True, use_edge_loss=False, stage1_loss="wa")),
        ("afg+mefl+le", dict(use_afg=True, use_fgg=False, use_mefl=True, use_edge_loss=True, stage1_loss="wa")),
        ("afg+fgg+mefl", dict(use_afg=True, use_fgg=True, use_mefl=True, use_edge_loss=False, stage1_loss="wa")),
        ("afg+fgg+mefl+le", dict(use_afg=True, use_fgg=True, use_mefl=True, use_edge_loss=True, stage1_loss="wa")),
    ]
)

ABLATION_COLUMNS = [
    "setting",
    "use_afg",
    "use_fgg",
    "use_mefl",
    "use_edge_loss",
    "stage1_loss",
    "train_f1",
    "eval_f1",
    "seeds",
]


def setting_config(base: TrainConfig, setting: str, seed: int) -> TrainConfig:
    """
    The base config with a setting's variant flags and seed applied.

    Raises:
        ConfigurationError: If the setting is unknown or the result is invalid
    """
    if setting not in SETTINGS:
        raise ConfigurationError(f"unknown ablation setting {setting!r}; choose from {list(SETTINGS)}")
    values = base.model_dump(by_alias=True)
    values.update(SETTINGS[setting], seed=seed)
    try:
        return TrainConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigurationError(f"setting {setting!r} is invalid: {e}") from e


def run_ablation(
    corpus: Corpus,
    base: TrainConfig,
    settings: Optional[Sequence[str]] = None,
    seeds: Sequence[int] = (0,),
    eval_fraction: float = 0.25,
    threshold: float = 0.5,
) -> List[AblationRow]:
    """
    One row per setting with train and held-out macro F1 averaged over seeds.

    Each seed draws its own train/eval split, so every setting sees the same
    splits.
    """
    settings = list(settings) if settings else list(SETTINGS)
    if not seeds:
        raise ConfigurationError("need at least one seed")
    if any(seed < 0 for seed in seeds):
        raise ConfigurationError(f"seeds must be non-negative, got {list(seeds)}")
    for name in settings:
        if name not in SETTINGS:
            raise ConfigurationError(f"unknown ablation setting {name!r}; choose from {list(SETTINGS)}")

    splits = {seed: split(corpus, 1.0 - eval_fraction, seed) for seed in seeds}
    rows: List[AblationRow] = []
    for name in settings:
        train_scores, eval_scores = [], []
        for seed in seeds:
            config = setting_config(base, name, seed)
            train_part, eval_part = splits[seed]
            checkpoint = train(train_part, config, MetricsLog())
            train_scores.append(evaluate(checkpoint, train_part, threshold).macro_f1 or 0.0)
            eval_scores.append(evaluate(checkpoint, eval_part, threshold).macro_f1 or 0.0)
        row = AblationRow(
            setting=name,
            **SETTINGS[name],
            train_f1=float(np.mean(train_scores)),
            eval_f1=float(np.mean(eval_scores)),
            seeds=list(seeds),
        )
        logger.info("ablation.row", setting=name, train_f1=row.train_f1, eval_f1=row.eval_f1)
        rows.append(row)
    return rows


def ablation_frame(rows: Sequence[AblationRow]) -> pd.DataFrame:
    records = [dict(row.model_dump(), seeds=" ".join(str(s) for s in row.seeds)) for row in rows]
    return pd.DataFrame(records, columns=ABLATION_COLUMNS)
