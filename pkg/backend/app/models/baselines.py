# backend/app/models/baselines.py
"""
Ablation variants of the conditional Transformer.

"ablated" runs the same network on all-zero conditions. "concat" also zeroes the
conditions but appends every coefficient as a constant channel and every
point-wise field as its own channel of the input. "no-subspace" keeps the
conditions but lets both condition projections span the full width.
"""
from typing import List

import numpy as np

from app.core.exceptions import DimensionError
from app.models.condition_embedding import ConditionBatch
from app.schemas.model_config import POINT_ADAPTERS, BaselineKind, ModelConfig


def uses_deep_conditions(config: ModelConfig) -> bool:
    return config.baseline not in (BaselineKind.ABLATED, BaselineKind.CONCAT)


def subspace_decoupled(config: ModelConfig) -> bool:
    return config.baseline != BaselineKind.NO_SUBSPACE


def concat_point_kinds(config: ModelConfig) -> List[str]:
    return [kind for kind in POINT_ADAPTERS if kind in config.active_kinds]


def extra_channels(config: ModelConfig) -> int:
    if config.baseline != BaselineKind.CONCAT:
        return 0
    return len(config.coefficient_names) + len(concat_point_kinds(config))


def append_condition_channels(x: np.ndarray, batch: ConditionBatch, config: ModelConfig) -> np.ndarray:
    """[B, C, H, W] -> [B, C + extra, H, W] for the concat variant; other variants pass through."""
    if config.baseline != BaselineKind.CONCAT:
        return x
    b, _, h, w = x.shape
    channels = [x]
    if config.coefficient_names:
        if batch.coefficients.shape != (b, len(config.coefficient_names)):
            raise DimensionError("coefficient block does not match the model's coefficient names",
                                 shapes=[batch.coefficients.shape])
        channels.append(np.broadcast_to(batch.coefficients[:, :, None, None], (b, len(config.coefficient_names), h, w)))
    for kind in concat_point_kinds(config):
        values = batch.fields.get(kind)
        channels.append(np.zeros((b, 1, h, w)) if values is None else values[:, None])
    return np.concatenate(channels, axis=1)
