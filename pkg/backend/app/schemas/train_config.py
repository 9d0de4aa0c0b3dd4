# backend/app/schemas/train_config.py
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config import settings
from app.schemas.model_config import ModelConfig


class AdamConfig(BaseModel):
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    weight_decay: float = Field(0.0, ge=0.0)

    model_config = ConfigDict(frozen=True)


class TrainConfig(BaseModel):
    batch_size: int = Field(16, ge=1)
    epochs: int = Field(200, ge=1)
    lr_init: float = Field(5e-4, ge=0.0)
    lr_min: float = Field(0.0, ge=0.0)
    lr_schedule: Literal["cosine"] = "cosine"
    warmup_epochs: int = Field(0, ge=0)
    adam: AdamConfig = Field(default_factory=AdamConfig)
    loss: Literal["relative-l2"] = "relative-l2"
    val_fraction: float = Field(0.1, ge=0.0, lt=1.0)
    seed: int = 0

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_schedule(self) -> "TrainConfig":
        if self.lr_min > self.lr_init:
            raise ValueError(f"lr_min ({self.lr_min}) exceeds lr_init ({self.lr_init})")
        if self.warmup_epochs >= self.epochs and self.warmup_epochs > 0:
            raise ValueError("warmup must end before the last epoch")
        return self


class RunConfig(BaseModel):
    """Everything `train` needs, kept in one JSON file and echoed into the checkpoint."""
    dataset: Path
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    output_dir: Path = Field(default_factory=lambda: settings.RUNS_DIR / "run")
    embedding_file: Optional[Path] = Field(None, description="Precomputed symbol vectors (UEMB)")
