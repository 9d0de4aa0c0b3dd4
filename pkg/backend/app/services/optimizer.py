# backend/app/services/optimizer.py
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from app.autodiff.tensor import Tensor
from app.core.exceptions import ConfigError, DimensionError
from app.schemas.train_config import AdamConfig


@dataclass
class AdamState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Dict[str, Tensor],
    grads: Dict[str, Optional[np.ndarray]],
    state: AdamState,
    lr: float,
    config: Optional[AdamConfig] = None,
) -> AdamState:
    """
    One Adam update with bias correction, applied in sorted parameter order.

    A parameter whose gradient is missing or all zero keeps its value while its
    moments decay.
    """
    config = config or AdamConfig()
    b1, b2 = config.beta1, config.beta2
    state.step += 1
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name in sorted(params):
        tensor = params[name]
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        v = state.v[name]
        if m.shape != tensor.shape:
            raise DimensionError(f"optimizer state for '{name}' has the wrong shape", shapes=[m.shape, tensor.shape])
        grad = grads.get(name)
        if grad is None or not np.any(grad):
            state.m[name] = b1 * m
            state.v[name] = b2 * v
            continue
        m = state.m[name] = b1 * m + (1.0 - b1) * grad
        v = state.v[name] = b2 * v + (1.0 - b2) * grad * grad
        update = lr * (m / c1) / (np.sqrt(v / c2) + config.eps)
        if config.weight_decay:
            update = update + lr * config.weight_decay * tensor.data
        tensor.data = tensor.data - update
    return state


def cosine_lr(step: int, total_steps: int, lr_init: float, lr_min: float = 0.0, warmup_steps: int = 0) -> float:
    """Linear warmup to lr_init, then cosine annealing down to lr_min at total_steps."""
    if not 0 <= step <= total_steps:
        raise ConfigError(f"step {step} outside [0, {total_steps}]")
    if warmup_steps and step < warmup_steps:
        return lr_init * step / warmup_steps
    span = total_steps - warmup_steps
    progress = 1.0 if span <= 0 else (step - warmup_steps) / span
    return lr_min + 0.5 * (lr_init - lr_min) * (1.0 + math.cos(math.pi * progress))
