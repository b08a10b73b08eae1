from app.services.losses import OccurrenceStats, compute_weights
from app.services.optimizer import AdamW, cosine_lr

__all__ = ["OccurrenceStats", "compute_weights", "AdamW", "cosine_lr"]
