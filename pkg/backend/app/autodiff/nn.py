# backend/app/autodiff/nn.py
"""Parameter containers built on the autodiff tensors."""
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from app.autodiff import functional as F
from app.autodiff.tensor import Tensor
from app.core.exceptions import ConfigMismatchError, DimensionError


def parameter(data: np.ndarray, name: Optional[str] = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class Module:
    """
    Base class for anything holding parameters.

    Parameters are discovered from attributes: trainable tensors, child modules,
    and lists or dicts of child modules. Names are dotted attribute paths.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for attr, value in vars(self).items():
            if isinstance(value, Tensor):
                if value.requires_grad:
                    yield f"{prefix}{attr}", value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{attr}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{attr}.{i}.")
            elif isinstance(value, dict):
                for key in sorted(value):
                    if isinstance(value[key], Module):
                        yield from value[key].named_parameters(f"{prefix}{attr}.{key}.")

    def parameters(self) -> Dict[str, Tensor]:
        return dict(sorted(self.named_parameters()))

    def parameter_count(self) -> int:
        return int(sum(t.size for t in self.parameters().values()))

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.parameters().items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise ConfigMismatchError(missing + unexpected, "Parameter names differ from the architecture: "
                                      f"missing {missing}, unexpected {unexpected}")
        for name, tensor in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise DimensionError(f"parameter '{name}' has the wrong shape", shapes=[value.shape, tensor.shape])
            tensor.data = value.copy()

    def zero_grad(self) -> None:
        for tensor in self.parameters().values():
            tensor.grad = None


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: Optional[np.random.Generator] = None, zero_init: bool = False):
        self.d_in, self.d_out = d_in, d_out
        if zero_init or rng is None:
            self.weight = parameter(np.zeros((d_in, d_out)))
        else:
            self.weight = parameter(xavier_uniform(rng, d_in, d_out))
        self.bias = parameter(np.zeros(d_out))

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.d_in:
            raise DimensionError(f"Linear expects width {self.d_in}", shapes=[x.shape])
        return F.linear(x, self.weight, self.bias)


class LayerNorm(Module):
    def __init__(self, d: int, eps: float = 1e-6):
        self.eps = eps
        self.gain = parameter(np.ones(d))
        self.bias = parameter(np.zeros(d))

    def __call__(self, x: Tensor) -> Tensor:
        return F.layer_norm(x, self.gain, self.bias, self.eps)


class SiLUMLP(Module):
    """Linear -> SiLU -> Linear; the output layer can start at zero."""

    def __init__(self, d_in: int, d_hidden: int, d_out: int, rng: np.random.Generator, zero_out: bool = False):
        self.fc1 = Linear(d_in, d_hidden, rng)
        self.fc2 = Linear(d_hidden, d_out, rng, zero_init=zero_out)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(F.silu(self.fc1(x)))


class Embedding(Module):
    """Learned table looked up through one-hot rows so the lookup stays differentiable."""

    def __init__(self, n: int, d: int, rng: np.random.Generator):
        self.n = n
        self.table = parameter(rng.normal(0.0, 0.02, size=(n, d)))

    def __call__(self, one_hot: Tensor) -> Tensor:
        if one_hot.shape[-1] != self.n:
            raise DimensionError(f"Embedding expects {self.n} categories", shapes=[one_hot.shape])
        return F.matmul(one_hot, self.table)
