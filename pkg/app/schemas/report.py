from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class AuMetrics(BaseModel):
    au: int
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    auc: Optional[float] = None

    @property
    def f1_defined(self) -> bool:
        return self.f1 is not None

    @property
    def auc_defined(self) -> bool:
        return self.auc is not None


class EvalReport(BaseModel):
    """Per-AU metrics plus unweighted macro means over the defined values."""

    per_au: List[AuMetrics]
    macro_f1: Optional[float] = None
    macro_auc: Optional[float] = None
    n_samples: int = Field(..., ge=1)
    threshold: float
    excluded_f1: List[int] = Field(default_factory=list)
    excluded_auc: List[int] = Field(default_factory=list)


class EpochRecord(BaseModel):
    stage: int
    epoch: int
    loss: float
    l_wa: float
    l_e: float
    mean_f1: float
    lr: float


class AblationRow(BaseModel):
    setting: str
    use_afg: bool
    use_fgg: bool
    use_mefl: bool
    use_edge_loss: bool
    stage1_loss: Literal["wa", "wbce"]
    train_f1: float
    eval_f1: float
    seeds: List[int]
