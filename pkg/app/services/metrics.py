"""
Evaluation metrics: per-AU precision, recall, frame-based F1 and rank AUC,
their macro means, and report emission.

Undefined values (zero denominators, single-class labels) are NaN in the raw
arrays and None in reports; they are left out of the macro means and the
affected AUs are listed in the report.
"""
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
import structlog

from app.core.errors import ContractError, EmptyInputError
from app.core.config import settings
from app.models.network import AuRelationNet
from app.schemas.report import AuMetrics, EvalReport
from app.services.checkpoint import Checkpoint
from app.services.corpus import Corpus
from app.services.inference import infer, predict

logger = structlog.get_logger(__name__)

REPORT_COLUMNS = ["au", "precision", "recall", "f1", "auc", "f1_defined", "auc_defined"]


def _columns(preds: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    preds = np.asarray(preds, dtype=np.float64)
    labels = np.asarray(labels)
    if preds.shape != labels.shape:
        raise ContractError(f"predictions {preds.shape} and labels {labels.shape} differ in shape")
    if preds.ndim == 1:
        preds, labels = preds[:, None], labels[:, None]
    if np.any((labels != 0) & (labels != 1)):
        raise ContractError("labels must be binary")
    return preds, labels.astype(bool)


def f1_score(
    preds: np.ndarray, labels: np.ndarray, threshold: float = 0.5
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-AU precision, recall and F1 after binarising at `threshold` (p >= threshold is active).

    Returns:
        (precision, recall, f1), each of length N, NaN where undefined.
        F1 is undefined when P, R or P + R has a zero denominator.
    """
    preds, labels = _columns(preds, labels)
    if np.any((preds < 0) | (preds > 1)):
        raise ContractError("predictions must lie in [0, 1]")
    predicted = preds >= threshold

    tp = (predicted & labels).sum(axis=0).astype(np.float64)
    fp = (predicted & ~labels).sum(axis=0).astype(np.float64)
    fn = (~predicted & labels).sum(axis=0).astype(np.float64)

    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(tp + fp > 0, tp / (tp + fp), np.nan)
        recall = np.where(tp + fn > 0, tp / (tp + fn), np.nan)
        f1 = np.where(precision + recall > 0, 2 * precision * recall / (precision + recall), np.nan)
    return precision, recall, f1


def auc_score(preds: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """
    Per-AU probability that a random positive outscores a random negative, ties counting half.

    Computed from average ranks; NaN for an AU whose labels have a single class.
    """
    preds, labels = _columns(preds, labels)
    aucs = np.full(preds.shape[1], np.nan)
    for i in range(preds.shape[1]):
        positive = labels[:, i]
        n_pos = int(positive.sum())
        n_neg = len(positive) - n_pos
        if n_pos == 0 or n_neg == 0:
            continue
        ranks = pd.Series(preds[:, i]).rank(method="average").to_numpy()
        u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
        aucs[i] = u / (n_pos * n_neg)
    return aucs


def _optional(value: float) -> Optional[float]:
    return None if np.isnan(value) else float(value)


def _macro(values: np.ndarray) -> Tuple[Optional[float], list]:
    defined = ~np.isnan(values)
    excluded = np.flatnonzero(~defined).tolist()
    return (float(values[defined].mean()) if defined.any() else None), excluded


def build_report(preds: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> EvalReport:
    """
    Raises:
        EmptyInputError: If there are no samples
    """
    if len(preds) == 0:
        raise EmptyInputError("cannot evaluate zero samples")
    precision, recall, f1 = f1_score(preds, labels, threshold)
    auc = auc_score(preds, labels)
    macro_f1, excluded_f1 = _macro(f1)
    macro_auc, excluded_auc = _macro(auc)

    per_au = [
        AuMetrics(
            au=i,
            precision=_optional(precision[i]),
            recall=_optional(recall[i]),
            f1=_optional(f1[i]),
            auc=_optional(auc[i]),
        )
        for i in range(len(f1))
    ]
    return EvalReport(
        per_au=per_au,
        macro_f1=macro_f1,
        macro_auc=macro_auc,
        n_samples=len(preds),
        threshold=threshold,
        excluded_f1=excluded_f1,
        excluded_auc=excluded_auc,
    )


def macro_f1(preds: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    """Macro F1 over the defined AUs; 0.0 when none is defined."""
    value, _ = _macro(f1_score(preds, labels, threshold)[2])
    return 0.0 if value is None else value


def evaluate(
    source: Union[Checkpoint, AuRelationNet],
    corpus: Corpus,
    threshold: Optional[float] = None,
    stage: Optional[int] = None,
) -> EvalReport:
    """
    Run inference over the corpus in record order and aggregate every metric.

    Args:
        source: A checkpoint (stage-2 path with fallback) or a live model
        corpus: Records to score
        threshold: Binarisation threshold (defaults to settings.EVAL_THRESHOLD)
        stage: Prediction path for a live model (defaults to 2 when available)

    Raises:
        EmptyInputError: If the corpus is empty
    """
    if len(corpus) == 0:
        raise EmptyInputError("cannot evaluate an empty corpus")
    threshold = settings.EVAL_THRESHOLD if threshold is None else threshold
    if isinstance(source, Checkpoint):
        probabilities = infer(corpus.features, source)
    else:
        stage = stage or (2 if source.has_stage2 else 1)
        probabilities = predict(source, corpus.features, stage)
    report = build_report(probabilities, corpus.labels, threshold)
    logger.info("evaluate.done", n_samples=report.n_samples, macro_f1=report.macro_f1, macro_auc=report.macro_auc)
    return report


def report_to_frame(report: EvalReport) -> pd.DataFrame:
    """One row per AU plus a `macro` summary row, columns in REPORT_COLUMNS order."""
    rows = [
        {
            "au": str(m.au),
            "precision": m.precision,
            "recall": m.recall,
            "f1": m.f1,
            "auc": m.auc,
            "f1_defined": m.f1_defined,
            "auc_defined": m.auc_defined,
        }
        for m in report.per_au
    ]
    rows.append(
        {
            "au": "macro",
            "precision": None,
            "recall": None,
            "f1": report.macro_f1,
            "auc": report.macro_auc,
            "f1_defined": report.macro_f1 is not None,
            "auc_defined": report.macro_auc is not None,
        }
    )
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def write_report(report: EvalReport, directory: Union[str, Path], name: str = "report") -> Tuple[Path, Path]:
    """Write `<name>.csv` and `<name>.json`; returns both paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{name}.csv"
    json_path = directory / f"{name}.json"
    report_to_frame(report).to_csv(csv_path, index=False)
    json_path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    return csv_path, json_path
