# backend/app/schemas/pde_components.py
import enum
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ComponentKind(str, enum.Enum):
    EQUATION_FORMULATION = "equation_formulation"
    COEFFICIENT = "coefficient"
    BOUNDARY_TYPE = "boundary_type"
    FORCE = "force"
    GEOMETRY = "geometry"
    BOUNDARY_VALUE = "boundary_value"


class ComponentCategory(str, enum.Enum):
    DOMAIN_WISE = "domain_wise"
    POINT_WISE = "point_wise"


class BoundaryKind(str, enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    ROBIN = "robin"


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"


class SplitTag(str, enum.Enum):
    ID = "ID"
    OOD = "OOD"


class Family(str, enum.Enum):
    STRING = "string"
    ADVECTION = "advection"
    FAMILY1D = "family1d"
    HETERNS_MINI = "heterns-mini"


# Fixed orderings used wherever an enum is turned into an index
BOUNDARY_KINDS: Tuple[BoundaryKind, ...] = tuple(BoundaryKind)
SIDES: Tuple[Side, ...] = tuple(Side)


class GridSpec(BaseModel):
    dims: int = Field(1, ge=1, le=2, description="Spatial dimensions")
    n_x: int = Field(..., ge=2)
    n_y: Optional[int] = Field(None, ge=2)
    n_t: int = Field(..., ge=2, description="Time snapshots (or frames)")
    x_range: Tuple[float, float] = (0.0, 1.0)
    y_range: Tuple[float, float] = (0.0, 1.0)
    t_range: Tuple[float, float] = (0.0, 1.0)
    periodic: bool = True

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_ranges(self) -> "GridSpec":
        for name in ("x_range", "y_range", "t_range"):
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise ValueError(f"{name} must be nondegenerate, got {(lo, hi)}")
        if self.dims == 2 and self.n_y is None:
            raise ValueError("2D grids need n_y")
        return self

    @property
    def spatial_shape(self) -> Tuple[int, ...]:
        if self.dims == 1:
            return (self.n_x,)
        return (self.n_x, self.n_y)

    @property
    def dx(self) -> float:
        lo, hi = self.x_range
        return (hi - lo) / (self.n_x if self.periodic else self.n_x - 1)

    def x_points(self) -> np.ndarray:
        lo, hi = self.x_range
        if self.periodic:
            return lo + (hi - lo) * np.arange(self.n_x) / self.n_x
        return np.linspace(lo, hi, self.n_x)

    def t_points(self) -> np.ndarray:
        return np.linspace(self.t_range[0], self.t_range[1], self.n_t)


class RobinParams(BaseModel):
    """alpha * u + beta * du/dn = gamma at one endpoint (outward normal)."""
    alpha: float
    beta: float
    gamma: float

    model_config = ConfigDict(frozen=True)


class BoundarySpec(BaseModel):
    sides: Dict[Side, BoundaryKind]
    robin: Dict[Side, RobinParams] = Field(default_factory=dict)

    model_config = ConfigDict(frozen=True)

    @classmethod
    def periodic(cls, dims: int = 1) -> "BoundarySpec":
        sides = SIDES[:2 * dims]
        return cls(sides={side: BoundaryKind.PERIODIC for side in sides})

    @property
    def is_periodic(self) -> bool:
        return all(kind == BoundaryKind.PERIODIC for kind in self.sides.values())

    def label(self) -> str:
        """Compact class label such as 'periodic' or 'dirichlet/robin'."""
        if self.is_periodic:
            return BoundaryKind.PERIODIC.value
        return "/".join(self.sides[side].value for side in SIDES if side in self.sides)


class PDEComponents(BaseModel):
    """
    One sample's complete condition set.

    Absent point-wise fields are None. A zero array means a present field whose
    values happen to be zero.
    """
    symbols: str
    coefficients: Dict[str, float] = Field(default_factory=dict)
    boundary: BoundarySpec
    force: Optional[np.ndarray] = None
    kappa: Optional[np.ndarray] = None
    geometry_mask: Optional[np.ndarray] = None
    boundary_values: Optional[np.ndarray] = None

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def point_fields(self) -> Dict[str, Optional[np.ndarray]]:
        return {
            "force": self.force,
            "kappa": self.kappa,
            "geometry_mask": self.geometry_mask,
            "boundary_values": self.boundary_values,
        }

    def presence(self) -> Dict[str, bool]:
        return {name: value is not None for name, value in self.point_fields().items()}


class Sample(BaseModel):
    input: np.ndarray
    output: np.ndarray
    components: PDEComponents
    split: SplitTag = SplitTag.ID
    family: Family

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def condition_key(self, names: Optional[Tuple[str, ...]] = None) -> Tuple[float, ...]:
        """Coefficient values used to group samples in evaluation."""
        names = names if names is not None else tuple(sorted(self.components.coefficients))
        return tuple(float(self.components.coefficients[name]) for name in names)
