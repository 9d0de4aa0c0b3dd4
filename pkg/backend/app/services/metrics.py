# backend/app/services/metrics.py
import numpy as np

from app.autodiff import functional as F
from app.autodiff.tensor import Tensor
from app.core.exceptions import DimensionError, MetricError


def relative_l2(pred: np.ndarray, truth: np.ndarray) -> float:
    """||pred - truth|| / ||truth|| over all points and channels."""
    pred, truth = np.asarray(pred, dtype=np.float64), np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise DimensionError("relative_l2 needs equal shapes", shapes=[pred.shape, truth.shape])
    denom = np.linalg.norm(truth.ravel())
    if denom == 0.0:
        raise MetricError("relative L2 is undefined for an all-zero truth")
    return float(np.linalg.norm((pred - truth).ravel()) / denom)


def per_sample_relative_l2(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    if pred.shape != truth.shape:
        raise DimensionError("relative_l2 needs equal shapes", shapes=[pred.shape, truth.shape])
    return np.array([relative_l2(p, t) for p, t in zip(pred, truth)])


def relative_promotion(eps_ours: float, eps_second: float) -> float:
    """1 - eps_ours / eps_second."""
    if not eps_second > 0.0:
        raise MetricError(f"promotion needs a positive reference error, got {eps_second}")
    return 1.0 - eps_ours / eps_second


def relative_l2_loss(pred: Tensor, truth: np.ndarray) -> Tensor:
    """Batch mean of per-sample relative L2; differentiable in `pred`."""
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise DimensionError("loss needs equal shapes", shapes=[pred.shape, truth.shape])
    b = truth.shape[0]
    norms = np.linalg.norm(truth.reshape(b, -1), axis=1)
    if np.any(norms == 0.0):
        raise MetricError("relative L2 loss is undefined for an all-zero target")
    diff = F.reshape(F.sub(pred, truth), (b, -1))
    err = F.sqrt(F.sum(F.mul(diff, diff), axis=1))
    return F.mean(F.div(err, norms))
