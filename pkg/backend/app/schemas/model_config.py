# backend/app/schemas/model_config.py
import enum
import math
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.exceptions import ConfigError

DOMAIN_ADAPTERS = ("symbols", "coefficients", "boundary")
POINT_ADAPTERS = ("force", "kappa", "geometry_mask", "boundary_values")


class BaselineKind(str, enum.Enum):
    UNISOLVER = "unisolver"
    ABLATED = "ablated"          # every condition zeroed
    CONCAT = "concat"            # conditions appended to the input as channels
    NO_SUBSPACE = "no-subspace"  # both condition MLPs span the full width


class ModelConfig(BaseModel):
    """
    Architecture of one conditional Transformer.

    `grid_h` x `grid_w` is the 2D layout the model sees: (n_t, n_x) in
    full-field mode, the spatial grid in frames mode. The training service fills
    in the layout, channel counts and coefficient names from the dataset.
    """
    baseline: BaselineKind = BaselineKind.UNISOLVER
    task_mode: Literal["full-field", "frames"] = "full-field"

    d_feature: int = Field(64, ge=2)
    alpha: float = Field(0.5, gt=0.0, lt=1.0, description="Share of the width modulated by domain-wise conditions")
    n_layers: int = Field(4, ge=1)
    n_heads: int = Field(4, ge=1)
    d_head: int = Field(16, ge=1)
    mlp_ratio: float = Field(1.0, gt=0.0)
    patch: int = Field(4, ge=1)
    in_channels: int = Field(1, ge=1)
    out_channels: int = Field(1, ge=1)
    grid_h: Optional[int] = Field(None, ge=1)
    grid_w: Optional[int] = Field(None, ge=1)
    ln_eps: float = Field(1e-6, gt=0.0)

    d_cond: int = Field(32, ge=1)
    cond_hidden: Optional[int] = Field(None, ge=1, description="Hidden width of component adapters; d_cond if unset")
    symbol_embedder: Literal["hashed", "precomputed"] = "hashed"
    symbol_dim: int = Field(64, ge=1)
    coefficient_names: List[str] = Field(default_factory=list)
    active_kinds: List[str] = Field(
        default_factory=lambda: list(DOMAIN_ADAPTERS + POINT_ADAPTERS),
        description="Adapters that start from a random init; the rest start at zero",
    )

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_shapes(self) -> "ModelConfig":
        if self.n_heads * self.d_head != self.d_feature:
            raise ValueError(
                f"n_heads * d_head must equal d_feature ({self.n_heads} * {self.d_head} != {self.d_feature})"
            )
        d_domain = math.floor(self.alpha * self.d_feature)
        if d_domain < 1 or self.d_feature - d_domain < 1:
            raise ValueError(f"alpha={self.alpha} leaves an empty subspace at d_feature={self.d_feature}")
        unknown = sorted(set(self.active_kinds) - set(DOMAIN_ADAPTERS + POINT_ADAPTERS))
        if unknown:
            raise ValueError(f"unknown adapter kinds {unknown}")
        for name in ("grid_h", "grid_w"):
            size = getattr(self, name)
            if size is not None and size % self.patch:
                raise ValueError(f"{name}={size} is not divisible by patch {self.patch}")
        return self

    @property
    def hidden_cond(self) -> int:
        return self.cond_hidden or self.d_cond

    @property
    def n_tokens(self) -> int:
        if self.grid_h is None or self.grid_w is None:
            raise ConfigError("model layout (grid_h, grid_w) is not resolved yet")
        return (self.grid_h // self.patch) * (self.grid_w // self.patch)
