# backend/app/models/condition_embedding.py
"""
Deep condition embedding.

Every component kind has its own adapter. Domain-wise adapters map one vector
per sample to width d_cond, point-wise adapters map each patch of a field to
width d_cond. Within a category the adapter outputs are summed, so an adapter
that starts at zero leaves the embedding unchanged until it is trained.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from app.autodiff import functional as F
from app.autodiff.nn import Embedding, Linear, Module, SiLUMLP
from app.autodiff.tensor import Tensor
from app.core.exceptions import ConfigError, DimensionError
from app.schemas.model_config import POINT_ADAPTERS, ModelConfig
from app.schemas.pde_components import BOUNDARY_KINDS, SIDES, BoundarySpec
from app.utils.patching import patch_grid, patchify

logger = logging.getLogger(__name__)

BOUNDARY_SLOTS = len(SIDES) * len(BOUNDARY_KINDS)


def boundary_one_hot(boundary: BoundarySpec) -> np.ndarray:
    """One slot per (side, kind); every declared side sets exactly one slot."""
    out = np.zeros(BOUNDARY_SLOTS)
    for side, kind in boundary.sides.items():
        out[SIDES.index(side) * len(BOUNDARY_KINDS) + BOUNDARY_KINDS.index(kind)] = 1.0
    return out


@dataclass
class ConditionBatch:
    """Raw condition inputs for a batch, as plain arrays."""
    symbols: np.ndarray                       # [B, symbol_dim]
    coefficients: np.ndarray                  # [B, n_coefficients]
    boundary: np.ndarray                      # [B, BOUNDARY_SLOTS]
    fields: Dict[str, np.ndarray] = field(default_factory=dict)          # kind -> [B, H, W]
    field_present: Dict[str, np.ndarray] = field(default_factory=dict)   # kind -> [B] bool

    @property
    def batch_size(self) -> int:
        return self.symbols.shape[0]


@dataclass
class DeepConditions:
    c_domain: Tensor  # [B, d_cond]
    c_point: Tensor   # [B, N, d_cond]

    @classmethod
    def zeros(cls, batch_size: int, n_tokens: int, d_cond: int) -> "DeepConditions":
        return cls(Tensor(np.zeros((batch_size, d_cond))), Tensor(np.zeros((batch_size, n_tokens, d_cond))))


def _masked(out: Tensor, present: Optional[np.ndarray]) -> Tensor:
    if present is None or np.all(present):
        return out
    mask = np.asarray(present, dtype=np.float64).reshape((-1,) + (1,) * (out.ndim - 1))
    return F.mul(out, np.broadcast_to(mask, out.shape).copy())


def _sum(parts) -> Tensor:
    total = parts[0]
    for part in parts[1:]:
        total = F.add(total, part)
    return total


class ConditionEmbedder(Module):
    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        d, hidden = config.d_cond, config.hidden_cond
        active = set(config.active_kinds)

        self.symbols = SiLUMLP(config.symbol_dim, hidden, d, rng, zero_out="symbols" not in active)
        self.n_coefficients = len(config.coefficient_names)
        self.coefficients = (
            SiLUMLP(self.n_coefficients, hidden, d, rng, zero_out="coefficients" not in active)
            if self.n_coefficients else None
        )
        self.boundary_table = Embedding(BOUNDARY_SLOTS, d, rng)
        self.boundary = SiLUMLP(d, hidden, d, rng, zero_out="boundary" not in active)

        p = config.patch
        self.point = {kind: Linear(p * p, d, rng, zero_init=kind not in active) for kind in POINT_ADAPTERS}

    def embed_domainwise(
        self,
        symbols: Optional[np.ndarray] = None,
        coefficients: Optional[np.ndarray] = None,
        boundary: Optional[np.ndarray] = None,
        coefficient_present: Optional[np.ndarray] = None,
        batch_size: int = 1,
    ) -> Tensor:
        """Sum of the domain-wise adapters over the components given; absent ones add nothing."""
        parts = []
        if symbols is not None:
            parts.append(self.symbols(Tensor(np.atleast_2d(symbols))))
        if coefficients is not None:
            coefficients = np.atleast_2d(coefficients)
            if coefficients.shape[-1] != self.n_coefficients:
                raise DimensionError(f"expected {self.n_coefficients} coefficients", shapes=[coefficients.shape])
            if self.coefficients is not None:
                parts.append(_masked(self.coefficients(Tensor(coefficients)), coefficient_present))
        if boundary is not None:
            parts.append(self.boundary(self.boundary_table(Tensor(np.atleast_2d(boundary)))))
        if not parts:
            return Tensor(np.zeros((batch_size, self.config.d_cond)))
        return _sum(parts)

    def embed_pointwise(
        self,
        fields: Dict[str, Optional[np.ndarray]],
        present: Optional[Dict[str, np.ndarray]] = None,
        batch_size: int = 1,
    ) -> Tensor:
        """
        Patchify each present field exactly like the model input and map every
        patch to d_cond; the result is summed over component kinds per token.
        """
        cfg = self.config
        present = present or {}
        unknown = sorted(set(fields) - set(POINT_ADAPTERS))
        if unknown:
            raise ConfigError(f"no point-wise adapter for {unknown}")
        parts = []
        for kind in POINT_ADAPTERS:
            values = fields.get(kind)
            if values is None:
                continue
            values = np.asarray(values, dtype=np.float64)
            if values.ndim == 2:
                values = values[None]
            if values.shape[1:] != (cfg.grid_h, cfg.grid_w):
                raise DimensionError(f"field '{kind}' does not share the input grid",
                                     shapes=[values.shape[1:], (cfg.grid_h, cfg.grid_w)])
            tokens = patchify(values[:, None], cfg.patch)
            parts.append(_masked(self.point[kind](Tensor(tokens)), present.get(kind)))
        if not parts:
            patch_grid(cfg.grid_h, cfg.grid_w, cfg.patch)
            return Tensor(np.zeros((batch_size, cfg.n_tokens, cfg.d_cond)))
        return _sum(parts)

    def __call__(self, batch: ConditionBatch) -> DeepConditions:
        c_domain = self.embed_domainwise(
            symbols=batch.symbols,
            coefficients=batch.coefficients if self.n_coefficients else None,
            boundary=batch.boundary,
            batch_size=batch.batch_size,
        )
        c_point = self.embed_pointwise(batch.fields, batch.field_present, batch_size=batch.batch_size)
        return DeepConditions(c_domain=c_domain, c_point=c_point)
