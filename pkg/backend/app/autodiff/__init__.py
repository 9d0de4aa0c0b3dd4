# backend/app/autodiff/__init__.py
from app.autodiff.tensor import Function, Graph, Tensor, as_tensor, backward

__all__ = ["Function", "Graph", "Tensor", "as_tensor", "backward"]
