from pathlib import Path
from typing import Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class TrainConfig(BaseModel):
    """Every hyperparameter of both training stages."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    # Graph sizes
    n_aus: int = Field(6, ge=2)
    channels: int = Field(16, ge=1)
    spatial: int = Field(16, ge=1)
    k_neighbors: int = Field(3, ge=1)
    gcn_layers: int = Field(2, ge=1)

    # Losses
    lambda_: float = Field(0.05, ge=0, alias="lambda")
    stage1_loss: Literal["wa", "wbce"] = "wa"

    # Schedule
    stage1_epochs: int = Field(20, ge=0)
    stage2_epochs: int = Field(20, ge=0)
    stage1_lr: float = Field(1e-4, gt=0)
    stage2_lr: float = Field(1e-6, gt=0)
    batch_size: int = Field(64, ge=1)

    # AdamW
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    weight_decay: float = Field(5e-4, ge=0)
    eps: float = Field(1e-8, gt=0)

    seed: int = Field(0, ge=0)

    # Ablation variants
    use_afg: bool = True
    use_fgg: bool = True
    use_mefl: bool = True
    use_edge_loss: bool = True

    @model_validator(mode="after")
    def check_consistency(self) -> "TrainConfig":
        if not 1 <= self.k_neighbors <= self.n_aus - 1:
            raise ValueError(
                f"k_neighbors must lie in [1, n_aus - 1] = [1, {self.n_aus - 1}], got {self.k_neighbors}"
            )
        if (self.use_fgg or self.use_mefl) and not self.use_afg:
            raise ValueError("use_fgg and use_mefl need use_afg")
        if self.use_edge_loss and not self.use_mefl:
            raise ValueError("use_edge_loss needs use_mefl")
        return self

    @property
    def has_stage2(self) -> bool:
        return self.use_mefl


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Literal["gen-data", "train", "eval", "infer", "gradcheck", "ablate"]
    config_path: Optional[Path] = None
    overrides: Dict[str, str] = Field(default_factory=dict)
    output_dir: Path
