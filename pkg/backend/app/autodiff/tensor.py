# backend/app/autodiff/tensor.py
"""
Dense float64 tensors with define-by-run reverse-mode differentiation.

Every differentiable op is a `Function` subclass. `Function.apply` runs the
forward pass on raw numpy arrays and wraps the result in a `Tensor` that
remembers its creator. Tensor ids come from a global counter, so sorting the
nodes of a graph by id is a valid topological order.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import DimensionError

logger = logging.getLogger(__name__)

_tensor_ids = itertools.count()

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]


class Function:
    """
    Base class for differentiable operations.

    Subclasses implement `forward` on numpy arrays and `backward`, which maps the
    gradient of the output to one gradient (or None) per input.
    """

    def __init__(self, *inputs: "Tensor"):
        self.inputs = inputs

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no forward pass")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"{type(self).__name__} has no backward pass")

    @classmethod
    def apply(cls, *inputs: "Tensor", **kwargs: Any) -> "Tensor":
        func = cls(*inputs)
        out = func.forward(*(t.data for t in inputs), **kwargs)
        requires_grad = any(t.requires_grad for t in inputs)
        return Tensor(out, requires_grad=requires_grad, creator=func if requires_grad else None)

    @property
    def name(self) -> str:
        return type(self).__name__


class Tensor:
    """A float64 numpy array plus the bookkeeping needed for backpropagation."""

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        creator: Optional[Function] = None,
        name: Optional[str] = None,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.creator = creator
        self.name = name
        self.grad: Optional[np.ndarray] = None
        self.id = next(_tensor_ids)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self.creator is None

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError("item() needs a single-element tensor", shapes=[self.shape])
        return float(self.data.reshape(()))

    # Arithmetic is delegated to app.autodiff.functional to keep one op registry
    def __add__(self, other: Any) -> "Tensor":
        from app.autodiff import functional as F
        return F.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from app.autodiff import functional as F
        return F.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        from app.autodiff import functional as F
        return F.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from app.autodiff import functional as F
        return F.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from app.autodiff import functional as F
        return F.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from app.autodiff import functional as F
        return F.mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        from app.autodiff import functional as F
        return F.div(self, other)

    def __rtruediv__(self, other: Any) -> "Tensor":
        from app.autodiff import functional as F
        return F.div(other, self)

    def __neg__(self) -> "Tensor":
        from app.autodiff import functional as F
        return F.scale(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from app.autodiff import functional as F
        return F.matmul(self, other)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        from app.autodiff import functional as F
        return F.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        from app.autodiff import functional as F
        return F.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> "Tensor":
        from app.autodiff import functional as F
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        from app.autodiff import functional as F
        return F.transpose(self, axes or None)

    def backward(self) -> Dict[int, np.ndarray]:
        return backward(self)


def as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False)


@dataclass
class Graph:
    """Topologically ordered nodes reachable from an output."""
    nodes: List[Tensor] = field(default_factory=list)
    leaves: List[Tensor] = field(default_factory=list)

    @classmethod
    def trace(cls, output: Tensor) -> "Graph":
        seen: Dict[int, Tensor] = {}
        stack = [output]
        while stack:
            node = stack.pop()
            if node.id in seen or not node.requires_grad:
                continue
            seen[node.id] = node
            if node.creator is not None:
                stack.extend(node.creator.inputs)
        nodes = sorted(seen.values(), key=lambda t: t.id)
        return cls(nodes=nodes, leaves=[t for t in nodes if t.is_leaf])


def backward(loss: Tensor) -> Dict[int, np.ndarray]:
    """
    Reverse-mode accumulation from a scalar loss.

    Returns the gradient of every reachable leaf keyed by tensor id and also
    stores it on `leaf.grad`.
    """
    if loss.data.size != 1:
        raise DimensionError("backward() needs a scalar loss", shapes=[loss.shape])
    if not loss.requires_grad:
        return {}

    graph = Graph.trace(loss)
    pending: Dict[int, np.ndarray] = {loss.id: np.ones_like(loss.data)}
    leaf_grads: Dict[int, np.ndarray] = {}

    for node in reversed(graph.nodes):
        grad = pending.pop(node.id, None)
        if grad is None:
            continue
        if node.creator is None:
            node.grad = grad
            leaf_grads[node.id] = grad
            continue
        input_grads = node.creator.backward(grad)
        for inp, inp_grad in zip(node.creator.inputs, input_grads):
            if inp_grad is None or not inp.requires_grad:
                continue
            if inp_grad.shape != inp.shape:
                raise DimensionError(
                    f"{node.creator.name} produced a gradient of the wrong shape",
                    shapes=[inp_grad.shape, inp.shape],
                )
            if inp.id in pending:
                pending[inp.id] = pending[inp.id] + inp_grad
            else:
                pending[inp.id] = inp_grad

    return leaf_grads
