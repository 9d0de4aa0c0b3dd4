# backend/app/schemas/string_problem.py
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, field_validator
from scipy.interpolate import RegularGridInterpolator

from app.config import settings
from app.core.exceptions import ConfigError, DimensionError

Profile = Callable[[np.ndarray], np.ndarray]
Forcing = Callable[[np.ndarray, np.ndarray], np.ndarray]

_ENDPOINT_TOL = 1e-12


class QuadSpec(BaseModel):
    """Composite Simpson panel counts for the spatial and temporal integrals."""
    panels_x: int = Field(default_factory=lambda: settings.DEFAULT_QUAD_PANELS)
    panels_t: int = Field(default_factory=lambda: settings.DEFAULT_QUAD_PANELS)

    @field_validator("panels_x", "panels_t")
    @classmethod
    def even_and_at_least_four(cls, value: int) -> int:
        if value < 4 or value % 2:
            raise ValueError(f"Simpson panel count must be even and >= 4, got {value}")
        return value


class SineSeries:
    """sum_n A_n sin(n pi x / L): vanishes at 0 and L for any amplitudes."""

    def __init__(self, amplitudes: Sequence[float], modes: Sequence[int], L: float = 1.0):
        if len(amplitudes) != len(modes):
            raise DimensionError("one amplitude per mode", shapes=[(len(amplitudes),), (len(modes),)])
        self.amplitudes = np.asarray(amplitudes, dtype=np.float64)
        self.modes = np.asarray(modes, dtype=np.float64)
        self.L = L

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        k = self.modes * np.pi / self.L
        return np.sum(self.amplitudes * np.sin(np.multiply.outer(x, k)), axis=-1)


class SampledProfile:
    """A profile given on a grid over [0, L], linearly interpolated."""

    def __init__(self, xs: np.ndarray, values: np.ndarray):
        self.xs = np.asarray(xs, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)
        if self.xs.shape != self.values.shape:
            raise DimensionError("sampled profile needs one value per node", shapes=[self.xs.shape, self.values.shape])

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.xs, self.values)


class SampledForcing:
    """f(x, t) given on an (x, t) grid, bilinear in between."""

    def __init__(self, xs: np.ndarray, ts: np.ndarray, values: np.ndarray):
        self._interp = RegularGridInterpolator(
            (np.asarray(xs, dtype=np.float64), np.asarray(ts, dtype=np.float64)),
            np.asarray(values, dtype=np.float64),
            method="linear",
            bounds_error=False,
            fill_value=None,
        )

    def __call__(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        x, t = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))
        points = np.stack([x.reshape(-1), t.reshape(-1)], axis=-1)
        return self._interp(points).reshape(x.shape)


@dataclass(frozen=True)
class StringProblem:
    """u_tt = a^2 u_xx + f on [0, L] x [0, T] with u = 0 at both ends."""
    a: float
    L: float
    T: float
    phi: Profile
    psi: Optional[Profile] = None
    f: Optional[Forcing] = None

    def __post_init__(self):
        for name in ("a", "L", "T"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        ends = np.asarray(self.phi(np.array([0.0, self.L])), dtype=np.float64)
        if np.any(np.abs(ends) > _ENDPOINT_TOL):
            raise ConfigError(
                f"phi must vanish at both ends (phi(0)={ends[0]:.3e}, phi(L)={ends[1]:.3e}); "
                "nonzero endpoint values are outside the oracle's scope"
            )
