# backend/app/schemas/solver_specs.py
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.pde_components import BoundarySpec, GridSpec

# c_ik for i in {0, 1} (reaction, flux) and k in {1, 2, 3} (power of u)
FAMILY1D_COEFFICIENTS = ("c_01", "c_02", "c_03", "c_11", "c_12", "c_13")


class Family1DSpec(BaseModel):
    """
    u_t + f0(u) + s(x) + d/dx f1(u) = d/dx(kappa(x) du/dx) on a 1D grid,
    with f_i(u) = c[i,0] u + c[i,1] u^2 + c[i,2] u^3.

    Fields (g, s, kappa) are sampled on `grid.x_points()`.
    """
    c: np.ndarray
    g: np.ndarray
    kappa: np.ndarray
    s: Optional[np.ndarray] = None
    boundary: BoundarySpec
    grid: GridSpec

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def check_fields(self) -> "Family1DSpec":
        if self.c.shape != (2, 3):
            raise ValueError(f"c must be 2x3, got {self.c.shape}")
        n = self.grid.n_x
        for name in ("g", "kappa", "s"):
            field = getattr(self, name)
            if field is not None and field.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {field.shape}")
        if np.any(self.kappa < 0):
            raise ValueError("kappa must be nonnegative")
        if self.boundary.is_periodic != self.grid.periodic:
            raise ValueError("grid periodicity must match the boundary spec")
        return self


class HeterNSSpec(BaseModel):
    """Vorticity-form Navier-Stokes on the unit torus with a prescribed forcing."""
    nu: float = Field(..., gt=0)
    omega: float = Field(..., gt=0, description="Force frequency")
    w0: np.ndarray
    force: Optional[np.ndarray] = None
    T: float = Field(..., gt=0)
    n_t: int = Field(..., ge=2, description="Snapshots at linspace(0, T, n_t)")
    max_dt: float = Field(1e-2, gt=0)
    cfl: float = Field(0.5, gt=0)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def check_fields(self) -> "HeterNSSpec":
        if self.w0.ndim != 2 or self.w0.shape[0] != self.w0.shape[1]:
            raise ValueError(f"w0 must be square, got {self.w0.shape}")
        n = self.w0.shape[0]
        if n & (n - 1):
            raise ValueError(f"grid size must be a power of two, got {n}")
        if self.force is not None and self.force.shape != self.w0.shape:
            raise ValueError("force must share the vorticity grid")
        return self

    @property
    def n(self) -> int:
        return self.w0.shape[0]
