# backend/app/autodiff/gradcheck.py
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Union

import numpy as np

from app.autodiff.tensor import Tensor, backward
from app.core.exceptions import ConfigError, DimensionError

logger = logging.getLogger(__name__)

ScalarFn = Callable[[Tensor], Union[Tensor, float]]


def _scalar(value: Union[Tensor, float]) -> float:
    if isinstance(value, Tensor):
        return value.item()
    return float(value)


def finite_diff_gradient(f: ScalarFn, x: Tensor, h: float = 1e-5) -> Tensor:
    """Central differences (f(x+h e_i) - f(x-h e_i)) / 2h for every element of x."""
    if h <= 0:
        raise ConfigError(f"finite difference step must be positive, got {h}")
    base = x.data
    grad = np.zeros_like(base)
    flat = grad.reshape(-1)
    for i in range(base.size):
        step = np.zeros(base.size)
        step[i] = h
        step = step.reshape(base.shape)
        up = _scalar(f(Tensor(base + step)))
        down = _scalar(f(Tensor(base - step)))
        flat[i] = (up - down) / (2.0 * h)
    return Tensor(grad)


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """
    Largest elementwise deviation, scaled by the magnitude of the tensor.

    Normalizing by the tensor's largest entry keeps near-zero entries from
    turning finite-difference round-off into huge ratios.
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.shape != numeric.shape:
        raise DimensionError("gradient shapes differ", shapes=[analytic.shape, numeric.shape])
    if analytic.size == 0:
        return 0.0
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric)) / scale)


@dataclass
class GradCheckResult:
    max_rel_error: float
    per_parameter: Dict[str, float] = field(default_factory=dict)

    def worst(self) -> Optional[str]:
        if not self.per_parameter:
            return None
        return max(self.per_parameter, key=self.per_parameter.get)


def check_parameter_gradients(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    h: float = 1e-5,
    max_elements: Optional[int] = 16,
    seed: int = 0,
) -> GradCheckResult:
    """
    Compare backward() against central differences for every named parameter.

    `loss_fn` must rebuild the graph on each call. At most `max_elements`
    randomly chosen entries of each parameter are perturbed.
    """
    for tensor in params.values():
        tensor.grad = None
    backward(loss_fn())
    rng = np.random.default_rng(seed)
    result = GradCheckResult(max_rel_error=0.0)

    for name, tensor in params.items():
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        flat = tensor.data.reshape(-1)
        if max_elements is None or flat.size <= max_elements:
            picks = np.arange(flat.size)
        else:
            picks = np.sort(rng.choice(flat.size, size=max_elements, replace=False))

        numeric = np.empty(picks.size)
        for j, idx in enumerate(picks):
            original = flat[idx]
            flat[idx] = original + h
            up = loss_fn().item()
            flat[idx] = original - h
            down = loss_fn().item()
            flat[idx] = original
            numeric[j] = (up - down) / (2.0 * h)

        err = max_relative_error(analytic.reshape(-1)[picks], numeric)
        result.per_parameter[name] = err
        result.max_rel_error = max(result.max_rel_error, err)

    logger.info(f"Gradient check over {len(params)} tensors: max relative error {result.max_rel_error:.3e}")
    return result
