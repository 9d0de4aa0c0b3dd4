# backend/app/services/component_service.py
import logging
from typing import Dict, List, Optional, Union

import numpy as np

from app.core.exceptions import ConfigError
from app.schemas.pde_components import (
    BoundaryKind,
    ComponentCategory,
    ComponentKind,
    Family,
    GridSpec,
    PDEComponents,
    Sample,
    Side,
)

logger = logging.getLogger(__name__)

_CATEGORIES: Dict[ComponentKind, ComponentCategory] = {
    ComponentKind.EQUATION_FORMULATION: ComponentCategory.DOMAIN_WISE,
    ComponentKind.COEFFICIENT: ComponentCategory.DOMAIN_WISE,
    ComponentKind.BOUNDARY_TYPE: ComponentCategory.DOMAIN_WISE,
    ComponentKind.FORCE: ComponentCategory.POINT_WISE,
    ComponentKind.GEOMETRY: ComponentCategory.POINT_WISE,
    ComponentKind.BOUNDARY_VALUE: ComponentCategory.POINT_WISE,
}

# Sample field name -> component kind; diffusion fields ride with the force kind
FIELD_KINDS: Dict[str, ComponentKind] = {
    "symbols": ComponentKind.EQUATION_FORMULATION,
    "coefficients": ComponentKind.COEFFICIENT,
    "boundary": ComponentKind.BOUNDARY_TYPE,
    "force": ComponentKind.FORCE,
    "kappa": ComponentKind.FORCE,
    "geometry_mask": ComponentKind.GEOMETRY,
    "boundary_values": ComponentKind.BOUNDARY_VALUE,
}

_AXIS_PAIRS = ((Side.LEFT, Side.RIGHT), (Side.BOTTOM, Side.TOP))

FULL_FIELD_FAMILIES = (Family.STRING, Family.ADVECTION, Family.FAMILY1D)


def boundary_mask(shape: tuple) -> np.ndarray:
    """True on the one-cell border of a 1D or 2D grid."""
    mask = np.zeros(shape, dtype=bool)
    if len(shape) == 1:
        mask[0] = mask[-1] = True
    else:
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
    return mask


class ComponentService:
    def categorize(self, kind: Union[ComponentKind, str]) -> ComponentCategory:
        if isinstance(kind, str) and not isinstance(kind, ComponentKind):
            if kind in FIELD_KINDS:
                kind = FIELD_KINDS[kind]
            else:
                try:
                    kind = ComponentKind(kind)
                except ValueError:
                    raise ConfigError(f"Unknown component kind '{kind}'")
        return _CATEGORIES[kind]

    def validate(self, sample: Sample, grid: Optional[GridSpec] = None) -> List[str]:
        """Every invariant violation of a sample, as messages. Empty means ok."""
        violations: List[str] = []
        violations.extend(self._check_components(sample.components, grid))

        for name, arr in (("input", sample.input), ("output", sample.output)):
            if not np.all(np.isfinite(arr)):
                violations.append(f"{name} contains non-finite values")

        if grid is not None:
            violations.extend(self._check_layout(sample, grid))
        return violations

    def is_valid(self, sample: Sample, grid: Optional[GridSpec] = None) -> bool:
        return not self.validate(sample, grid)

    def _check_components(self, comps: PDEComponents, grid: Optional[GridSpec]) -> List[str]:
        out: List[str] = []
        if not comps.symbols.strip():
            out.append("symbols string is empty")
        for name, value in comps.coefficients.items():
            if not np.isfinite(value):
                out.append(f"coefficient '{name}' is not finite")

        sides = comps.boundary.sides
        for a, b in _AXIS_PAIRS:
            if a in sides and b in sides:
                if (sides[a] == BoundaryKind.PERIODIC) != (sides[b] == BoundaryKind.PERIODIC):
                    out.append(f"periodic boundary on {a.value} must pair with {b.value}")
        for side, kind in sides.items():
            if kind == BoundaryKind.ROBIN:
                params = comps.boundary.robin.get(side)
                if params is None:
                    out.append(f"robin boundary on {side.value} has no parameters")
                elif params.alpha == 0.0 and params.beta == 0.0:
                    out.append(f"robin boundary on {side.value} has alpha = beta = 0")

        expected = grid.spatial_shape if grid is not None else None
        for name, field in comps.point_fields().items():
            if field is None:
                continue
            if expected is not None and field.shape != expected:
                out.append(f"{name} shape {field.shape} does not match grid {expected}")
                continue
            if not np.all(np.isfinite(field)):
                out.append(f"{name} contains non-finite values")

        if comps.kappa is not None and np.any(comps.kappa < 0):
            out.append("kappa is negative somewhere")

        mask = comps.geometry_mask
        if mask is not None and not np.all((mask == 0.0) | (mask == 1.0)):
            out.append("mask not binary")

        values = comps.boundary_values
        if values is not None and values.ndim in (1, 2):
            border = boundary_mask(values.shape)
            if np.any(values[~border] != 0.0):
                out.append("boundary values nonzero at interior point")
            if comps.boundary.is_periodic and np.any(values != 0.0):
                out.append("periodic boundary carries boundary values")
        return out

    def _check_layout(self, sample: Sample, grid: GridSpec) -> List[str]:
        out: List[str] = []
        spatial = grid.spatial_shape
        if sample.family in FULL_FIELD_FAMILIES:
            if sample.input.shape != spatial:
                out.append(f"input shape {sample.input.shape} does not match grid {spatial}")
            if sample.output.shape != (grid.n_t,) + spatial:
                out.append(f"output shape {sample.output.shape} does not match grid {(grid.n_t,) + spatial}")
        else:
            if sample.input.shape[1:] != spatial or sample.output.shape[1:] != spatial:
                out.append(f"frame shapes {sample.input.shape}/{sample.output.shape} do not match grid {spatial}")
            elif sample.input.shape[0] + sample.output.shape[0] != grid.n_t:
                out.append(f"input and output frames do not add up to {grid.n_t}")
        return out


component_service = ComponentService()
