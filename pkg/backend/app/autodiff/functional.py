# backend/app/autodiff/functional.py
"""
Differentiable operations on `Tensor`.

Broadcasting is restricted to three cases: equal shapes, a scalar operand, or an
operand whose shape is exactly the trailing part of the other's shape. Anything
else must go through an explicit `expand`.
"""
import math
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erf, expit

from app.autodiff.tensor import Function, Tensor, as_tensor
from app.core.exceptions import DimensionError

_SQRT_2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _normalize_axis(axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise DimensionError(f"axis {axis} is invalid for a tensor of rank {ndim}")
    return axis % ndim


def _is_scalar_shape(shape: Tuple[int, ...]) -> bool:
    return len(shape) <= 1 and int(np.prod(shape)) == 1


def _check_broadcast(a: Tuple[int, ...], b: Tuple[int, ...], op: str) -> None:
    if a == b or _is_scalar_shape(a) or _is_scalar_shape(b):
        return
    small, big = (a, b) if len(a) < len(b) else (b, a)
    if len(small) < len(big) and big[len(big) - len(small):] == small:
        return
    raise DimensionError(f"{op}: operands are not trailing-axis compatible", shapes=[a, b])


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


# --- elementwise binary ---------------------------------------------------------

class Add(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_broadcast(a.shape, b.shape, "add")
        return a + b

    def backward(self, grad):
        a, b = self.inputs
        return unbroadcast(grad, a.shape), unbroadcast(grad, b.shape)


class Sub(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_broadcast(a.shape, b.shape, "sub")
        return a - b

    def backward(self, grad):
        a, b = self.inputs
        return unbroadcast(grad, a.shape), unbroadcast(-grad, b.shape)


class Mul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_broadcast(a.shape, b.shape, "mul")
        return a * b

    def backward(self, grad):
        a, b = self.inputs
        return unbroadcast(grad * b.data, a.shape), unbroadcast(grad * a.data, b.shape)


class Div(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _check_broadcast(a.shape, b.shape, "div")
        return a / b

    def backward(self, grad):
        a, b = self.inputs
        grad_a = grad / b.data
        grad_b = -grad * a.data / (b.data * b.data)
        return unbroadcast(grad_a, a.shape), unbroadcast(grad_b, b.shape)


class Scale(Function):
    def forward(self, x: np.ndarray, factor: float) -> np.ndarray:
        self.factor = float(factor)
        return x * self.factor

    def backward(self, grad):
        return (grad * self.factor,)


# --- linear algebra -------------------------------------------------------------

class MatMul(Function):
    """a[..., m, k] @ b[k, n] (shared weights) or a[..., m, k] @ b[..., k, n] with equal batch dims."""

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
            raise DimensionError("matmul: inner dimensions differ", shapes=[a.shape, b.shape])
        if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
            raise DimensionError("matmul: batch dimensions differ", shapes=[a.shape, b.shape])
        return np.matmul(a, b)

    def backward(self, grad):
        a, b = self.inputs
        grad_a = np.matmul(grad, np.swapaxes(b.data, -1, -2))
        if b.ndim == 2:
            k, n = b.shape
            grad_b = a.data.reshape(-1, k).T @ grad.reshape(-1, n)
        else:
            grad_b = np.matmul(np.swapaxes(a.data, -1, -2), grad)
        return grad_a, grad_b


# --- reductions and shape ops ---------------------------------------------------

class Sum(Function):
    def forward(self, x: np.ndarray, axis: Optional[int] = None, keepdims: bool = False) -> np.ndarray:
        self.axis = None if axis is None else _normalize_axis(axis, x.ndim)
        self.keepdims = keepdims
        return np.sum(x, axis=self.axis, keepdims=keepdims)

    def backward(self, grad):
        (x,) = self.inputs
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, x.shape).copy(),)


class Mean(Function):
    def forward(self, x: np.ndarray, axis: Optional[int] = None, keepdims: bool = False) -> np.ndarray:
        self.axis = None if axis is None else _normalize_axis(axis, x.ndim)
        self.keepdims = keepdims
        self.count = x.size if self.axis is None else x.shape[self.axis]
        return np.mean(x, axis=self.axis, keepdims=keepdims)

    def backward(self, grad):
        (x,) = self.inputs
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad / self.count, x.shape).copy(),)


class Reshape(Function):
    def forward(self, x: np.ndarray, shape: Sequence[int]) -> np.ndarray:
        try:
            return x.reshape(tuple(shape))
        except ValueError as exc:
            raise DimensionError(f"reshape: {exc}", shapes=[x.shape, tuple(shape)]) from exc

    def backward(self, grad):
        return (grad.reshape(self.inputs[0].shape),)


class Transpose(Function):
    def forward(self, x: np.ndarray, axes: Optional[Sequence[int]] = None) -> np.ndarray:
        if axes is None:
            axes = tuple(reversed(range(x.ndim)))
        if sorted(_normalize_axis(a, x.ndim) for a in axes) != list(range(x.ndim)):
            raise DimensionError(f"transpose: {tuple(axes)} is not a permutation", shapes=[x.shape])
        self.axes = tuple(_normalize_axis(a, x.ndim) for a in axes)
        return np.transpose(x, self.axes)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes)),)


class Concat(Function):
    def forward(self, *arrays: np.ndarray, axis: int = -1) -> np.ndarray:
        ndim = arrays[0].ndim
        self.axis = _normalize_axis(axis, ndim)
        for arr in arrays[1:]:
            other = arr.shape[:self.axis] + arr.shape[self.axis + 1:]
            first = arrays[0].shape[:self.axis] + arrays[0].shape[self.axis + 1:]
            if arr.ndim != ndim or other != first:
                raise DimensionError("concat: shapes differ off the concat axis", shapes=[a.shape for a in arrays])
        self.sizes = [a.shape[self.axis] for a in arrays]
        return np.concatenate(arrays, axis=self.axis)

    def backward(self, grad):
        cuts = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, cuts, axis=self.axis))


class Narrow(Function):
    def forward(self, x: np.ndarray, axis: int, start: int, stop: int) -> np.ndarray:
        self.axis = _normalize_axis(axis, x.ndim)
        if not 0 <= start <= stop <= x.shape[self.axis]:
            raise DimensionError(f"narrow: [{start}, {stop}) outside axis {axis}", shapes=[x.shape])
        self.start, self.stop = start, stop
        index = [slice(None)] * x.ndim
        index[self.axis] = slice(start, stop)
        self.index = tuple(index)
        return x[self.index].copy()

    def backward(self, grad):
        out = np.zeros_like(self.inputs[0].data)
        out[self.index] = grad
        return (out,)


class Expand(Function):
    def forward(self, x: np.ndarray, shape: Sequence[int]) -> np.ndarray:
        try:
            return np.broadcast_to(x, tuple(shape)).copy()
        except ValueError as exc:
            raise DimensionError("expand: shapes are not broadcastable", shapes=[x.shape, tuple(shape)]) from exc

    def backward(self, grad):
        return (unbroadcast(grad, self.inputs[0].shape),)


# --- nonlinearities -------------------------------------------------------------

class SiLU(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self.sig = expit(x)
        return x * self.sig

    def backward(self, grad):
        x = self.inputs[0].data
        return (grad * self.sig * (1.0 + x * (1.0 - self.sig)),)


class GELU(Function):
    """Exact (erf) GELU."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.cdf = 0.5 * (1.0 + erf(x / _SQRT_2))
        return x * self.cdf

    def backward(self, grad):
        x = self.inputs[0].data
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        return (grad * (self.cdf + x * pdf),)


class Sqrt(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self.out = np.sqrt(x)
        return self.out

    def backward(self, grad):
        # subgradient 0 at the origin
        safe = np.where(self.out > 0.0, 2.0 * self.out, 1.0)
        return (np.where(self.out > 0.0, grad / safe, 0.0),)


class Softmax(Function):
    def forward(self, x: np.ndarray, axis: int = -1) -> np.ndarray:
        self.axis = _normalize_axis(axis, x.ndim)
        shifted = x - np.max(x, axis=self.axis, keepdims=True)
        e = np.exp(shifted)
        self.out = e / np.sum(e, axis=self.axis, keepdims=True)
        return self.out

    def backward(self, grad):
        y = self.out
        return (y * (grad - np.sum(grad * y, axis=self.axis, keepdims=True)),)


class LayerNorm(Function):
    def forward(self, x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = 1e-5) -> np.ndarray:
        d = x.shape[-1]
        if d < 1 or gain.shape != (d,) or bias.shape != (d,):
            raise DimensionError("layer_norm: gain/bias must match the last axis", shapes=[x.shape, gain.shape, bias.shape])
        if eps <= 0:
            raise DimensionError("layer_norm: eps must be positive")
        centered = x - x.mean(axis=-1, keepdims=True)
        var = np.mean(centered * centered, axis=-1, keepdims=True)
        self.inv_std = 1.0 / np.sqrt(var + eps)
        self.x_hat = centered * self.inv_std
        return self.x_hat * gain + bias

    def backward(self, grad):
        _, gain, _ = self.inputs
        d_x_hat = grad * gain.data
        lead = tuple(range(grad.ndim - 1))
        grad_gain = np.sum(grad * self.x_hat, axis=lead)
        grad_bias = np.sum(grad, axis=lead)
        grad_x = self.inv_std * (
            d_x_hat
            - d_x_hat.mean(axis=-1, keepdims=True)
            - self.x_hat * np.mean(d_x_hat * self.x_hat, axis=-1, keepdims=True)
        )
        return grad_x, grad_gain, grad_bias


# --- public API -----------------------------------------------------------------

def add(a: Any, b: Any) -> Tensor:
    return Add.apply(as_tensor(a), as_tensor(b))


def sub(a: Any, b: Any) -> Tensor:
    return Sub.apply(as_tensor(a), as_tensor(b))


def mul(a: Any, b: Any) -> Tensor:
    return Mul.apply(as_tensor(a), as_tensor(b))


def div(a: Any, b: Any) -> Tensor:
    return Div.apply(as_tensor(a), as_tensor(b))


def scale(x: Tensor, factor: float) -> Tensor:
    return Scale.apply(as_tensor(x), factor=factor)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return MatMul.apply(as_tensor(a), as_tensor(b))


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    out = matmul(x, weight)
    return out if bias is None else add(out, bias)


def sum(x: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return Sum.apply(as_tensor(x), axis=axis, keepdims=keepdims)


def mean(x: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    return Mean.apply(as_tensor(x), axis=axis, keepdims=keepdims)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(as_tensor(x), shape=tuple(shape))


def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    return Transpose.apply(as_tensor(x), axes=None if axes is None else tuple(axes))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if len(tensors) == 1:
        return tensors[0]
    return Concat.apply(*tensors, axis=axis)


def narrow(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    return Narrow.apply(as_tensor(x), axis=axis, start=start, stop=stop)


def split(x: Tensor, sizes: Sequence[int], axis: int = -1) -> List[Tensor]:
    x = as_tensor(x)
    axis = _normalize_axis(axis, x.ndim)
    if np.sum(sizes) != x.shape[axis]:
        raise DimensionError(f"split: sizes {list(sizes)} do not cover axis {axis}", shapes=[x.shape])
    parts, start = [], 0
    for size in sizes:
        parts.append(narrow(x, axis, start, start + size))
        start += size
    return parts


def expand(x: Tensor, shape: Sequence[int]) -> Tensor:
    return Expand.apply(as_tensor(x), shape=tuple(shape))


def silu(x: Tensor) -> Tensor:
    return SiLU.apply(as_tensor(x))


def gelu(x: Tensor) -> Tensor:
    return GELU.apply(as_tensor(x))


def sqrt(x: Tensor) -> Tensor:
    return Sqrt.apply(as_tensor(x))


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    return Softmax.apply(as_tensor(x), axis=axis)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    return LayerNorm.apply(as_tensor(x), as_tensor(gain), as_tensor(bias), eps=eps)
