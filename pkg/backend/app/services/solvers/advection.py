# backend/app/services/solvers/advection.py
import logging
from typing import Optional

import numpy as np

from app.core.exceptions import ConfigError, DimensionError
from app.schemas.pde_components import GridSpec

logger = logging.getLogger(__name__)


def spectral_shift(u: np.ndarray, shift: float, length: float) -> np.ndarray:
    """u(x - shift) for a periodic sample of u, exact for band-limited data."""
    n = u.shape[-1]
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=length / n)
    return np.fft.irfft(np.fft.rfft(u) * np.exp(-1j * k * shift), n=n)


def solve_advection_exact(u0: np.ndarray, beta: float, grid: GridSpec,
                          times: Optional[np.ndarray] = None) -> np.ndarray:
    """
    u(t, x) = u0(x - beta t) on a periodic grid, shaped [n_t, n_x].

    `times` overrides the grid's snapshot times.
    """
    if not grid.periodic:
        raise ConfigError("exact advection needs a periodic boundary")
    u0 = np.asarray(u0, dtype=np.float64)
    if u0.shape != (grid.n_x,):
        raise DimensionError("u0 does not match the grid", shapes=[u0.shape, (grid.n_x,)])
    length = grid.x_range[1] - grid.x_range[0]
    ts = grid.t_points() if times is None else np.asarray(times, dtype=np.float64)
    if beta == 0.0:
        return np.tile(u0, (ts.size, 1))
    return np.stack([spectral_shift(u0, beta * t, length) for t in ts])
