from app.schemas.config import TrainConfig, RunConfig
from app.schemas.corpus import Coupling, CorrelationSpec
from app.schemas.report import AblationRow, AuMetrics, EpochRecord, EvalReport

__all__ = [
    "TrainConfig",
    "RunConfig",
    "Coupling",
    "CorrelationSpec",
    "AblationRow",
    "AuMetrics",
    "EpochRecord",
    "EvalReport",
]
