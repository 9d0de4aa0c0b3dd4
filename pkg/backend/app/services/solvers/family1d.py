# backend/app/services/solvers/family1d.py
"""
Method-of-lines solver and sampler for the 1D family

    u_t + f0(u) + s(x) + d/dx f1(u) = d/dx(kappa(x) du/dx),
    f_i(u) = c_i1 u + c_i2 u^2 + c_i3 u^3,   (x, t) in [-1, 1] x [0, 1].
"""
import logging
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from app.core.exceptions import ConfigError, DivergedError
from app.schemas.pde_components import (
    BoundaryKind,
    BoundarySpec,
    GridSpec,
    PDEComponents,
    RobinParams,
    Side,
)
from app.schemas.solver_specs import FAMILY1D_COEFFICIENTS, Family1DSpec
from app.services.solvers.initial_conditions import sample_trig_superposition

logger = logging.getLogger(__name__)

COEFFICIENT_NAMES: Tuple[str, ...] = FAMILY1D_COEFFICIENTS

DEFAULT_GRID = GridSpec(dims=1, n_x=64, n_t=16, x_range=(-1.0, 1.0), t_range=(0.0, 1.0), periodic=True)

BLOWUP_LIMIT = 1e6
NON_PERIODIC_KINDS = (BoundaryKind.DIRICHLET, BoundaryKind.NEUMANN, BoundaryKind.ROBIN)

SeedLike = Union[int, np.random.SeedSequence, None]


def _poly(c_row: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u * (c_row[0] + u * (c_row[1] + u * c_row[2]))


def _poly_prime(c_row: np.ndarray, u: np.ndarray) -> np.ndarray:
    return c_row[0] + u * (2.0 * c_row[1] + 3.0 * u * c_row[2])


def _van_leer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    prod = a * b
    denom = np.where(prod > 0, a + b, 1.0)
    return np.where(prod > 0, 2.0 * prod / denom, 0.0)


def _term(coef_symbol: str, power: int) -> str:
    return f"{coef_symbol} u" if power == 1 else f"{coef_symbol} u^{power}"


def family_symbols(c: np.ndarray, has_source: bool, has_diffusion: bool = True) -> str:
    """LaTeX formulation with zero-coefficient terms left out."""
    flux = [_term(f"c_{{1{k + 1}}}", k + 1) for k in range(3) if c[1, k] != 0.0]
    reaction = [_term(f"c_{{0{k + 1}}}", k + 1) for k in range(3) if c[0, k] != 0.0]
    lhs = [r"\partial_t u", *reaction]
    if has_source:
        lhs.append("s(x)")
    if flux:
        lhs.append(r"\partial_x(" + " + ".join(flux) + ")")
    rhs = r"\partial_x(\kappa(x) \partial_x u)" if has_diffusion else "0"
    return f"{' + '.join(lhs)} = {rhs}"


def coefficient_map(c: np.ndarray) -> Dict[str, float]:
    return {name: float(value) for name, value in zip(COEFFICIENT_NAMES, c.reshape(-1))}


def sample_1d_pde(
    rng_seed: SeedLike,
    grid: Optional[GridSpec] = None,
    n_waves: int = 2,
    max_mode: int = 4,
    ic_scale: float = 0.25,
    source_scale: float = 0.1,
) -> Family1DSpec:
    """
    Draw one member of the family.

    Each c_ik is zero with probability 1/2 and uniform on [-3, 3] otherwise.
    Half the draws are periodic; the rest pick Dirichlet, Neumann or Robin
    independently per endpoint, with parameters chosen so that g satisfies
    the boundary condition at t = 0.
    """
    rng = np.random.default_rng(rng_seed)
    c = np.where(rng.random((2, 3)) < 0.5, 0.0, rng.uniform(-3.0, 3.0, size=(2, 3)))
    periodic = bool(rng.random() < 0.5)

    grid = (grid or DEFAULT_GRID).model_copy(update={"periodic": periodic})
    xs = grid.x_points()
    length = grid.x_range[1] - grid.x_range[0]

    g_fn = sample_trig_superposition(rng, length, n_waves, max_mode)
    g = ic_scale * g_fn(xs)

    s = None
    if rng.random() >= 0.5:
        s = source_scale * sample_trig_superposition(rng, length, n_waves, max_mode)(xs)

    kappa_scale = 10.0 ** rng.uniform(-3.0, -1.0)
    kappa = kappa_scale * (1.0 + 0.5 * sample_trig_superposition(rng, length, n_waves, max_mode)(xs))

    if periodic:
        boundary = BoundarySpec.periodic(1)
    else:
        sides, robin = {}, {}
        for side, x_b, normal in ((Side.LEFT, grid.x_range[0], -1.0), (Side.RIGHT, grid.x_range[1], 1.0)):
            kind = NON_PERIODIC_KINDS[int(rng.integers(len(NON_PERIODIC_KINDS)))]
            value = ic_scale * float(g_fn(x_b))
            normal_slope = ic_scale * normal * float(g_fn.derivative(x_b))
            if kind == BoundaryKind.DIRICHLET:
                params = RobinParams(alpha=1.0, beta=0.0, gamma=value)
            elif kind == BoundaryKind.NEUMANN:
                params = RobinParams(alpha=0.0, beta=1.0, gamma=normal_slope)
            else:
                alpha = float(rng.uniform(0.5, 2.0))
                params = RobinParams(alpha=alpha, beta=1.0, gamma=alpha * value + normal_slope)
            sides[side] = kind
            robin[side] = params
        boundary = BoundarySpec(sides=sides, robin=robin)

    return Family1DSpec(c=c, g=g, kappa=kappa, s=s, boundary=boundary, grid=grid)


def burgers_spec(nu: float, g: np.ndarray, grid: GridSpec) -> Family1DSpec:
    """u_t + (2u^2)_x = (8 nu / pi) u_xx: viscous Burgers after rescaling onto [-1, 1] x [0, 1]."""
    c = np.zeros((2, 3))
    c[1, 1] = 2.0
    kappa = np.full(grid.n_x, 8.0 * nu / np.pi)
    return Family1DSpec(c=c, g=np.asarray(g, dtype=np.float64), kappa=kappa,
                        boundary=BoundarySpec.periodic(1), grid=grid.model_copy(update={"periodic": True}))


def advection_family_spec(beta: float, g: np.ndarray, grid: GridSpec) -> Family1DSpec:
    """u_t + (4 beta u)_x = 0: linear advection after rescaling onto [-1, 1] x [0, 1]."""
    c = np.zeros((2, 3))
    c[1, 0] = 4.0 * beta
    return Family1DSpec(c=c, g=np.asarray(g, dtype=np.float64), kappa=np.zeros(grid.n_x),
                        boundary=BoundarySpec.periodic(1), grid=grid.model_copy(update={"periodic": True}))


def family_components(spec: Family1DSpec) -> PDEComponents:
    boundary_values = None
    if not spec.boundary.is_periodic:
        boundary_values = np.zeros(spec.grid.n_x)
        boundary_values[0] = spec.boundary.robin[Side.LEFT].gamma
        boundary_values[-1] = spec.boundary.robin[Side.RIGHT].gamma
    return PDEComponents(
        symbols=family_symbols(spec.c, spec.s is not None, bool(np.any(spec.kappa > 0))),
        coefficients=coefficient_map(spec.c),
        boundary=spec.boundary,
        force=None if spec.s is None else spec.s.copy(),
        kappa=spec.kappa.copy(),
        boundary_values=boundary_values,
    )


class _Closure:
    """Ghost-point boundary closure for one spec."""

    def __init__(self, spec: Family1DSpec, dx: float):
        self.dx = dx
        self.periodic = spec.boundary.is_periodic
        self.ends: Dict[Side, RobinParams] = {}
        if not self.periodic:
            for side in (Side.LEFT, Side.RIGHT):
                params = spec.boundary.robin.get(side)
                if params is None:
                    raise ConfigError(f"non-periodic endpoint {side.value} needs (alpha, beta, gamma) parameters")
                if params.alpha == 0.0 and params.beta == 0.0:
                    raise ConfigError(f"endpoint {side.value} has alpha = beta = 0")
                self.ends[side] = params

    def is_fixed(self, side: Side) -> bool:
        return not self.periodic and self.ends[side].beta == 0.0

    def _ghosts(self, boundary: float, inner1: float, inner2: float, p: RobinParams) -> Tuple[float, float]:
        if p.beta == 0.0:
            value = p.gamma / p.alpha
            return 2.0 * value - inner1, 2.0 * value - inner2
        mismatch = p.gamma - p.alpha * boundary
        return inner1 + 2.0 * self.dx / p.beta * mismatch, inner2 + 4.0 * self.dx / p.beta * mismatch

    def extend(self, u: np.ndarray) -> np.ndarray:
        """u with two ghost values on each side."""
        if self.periodic:
            return np.concatenate([u[-2:], u, u[:2]])
        g1l, g2l = self._ghosts(u[0], u[1], u[2], self.ends[Side.LEFT])
        g1r, g2r = self._ghosts(u[-1], u[-2], u[-3], self.ends[Side.RIGHT])
        return np.concatenate([[g2l, g1l], u, [g1r, g2r]])

    def extend_kappa(self, kappa: np.ndarray) -> np.ndarray:
        if self.periodic:
            return np.concatenate([kappa[-1:], kappa, kappa[:1]])
        return np.pad(kappa, 1, mode="edge")


def _rhs_factory(spec: Family1DSpec, closure: _Closure) -> Callable[[np.ndarray], np.ndarray]:
    dx = closure.dx
    c0, c1 = spec.c[0], spec.c[1]
    has_flux = bool(np.any(c1 != 0.0))
    has_reaction = bool(np.any(c0 != 0.0))
    kappa_ext = closure.extend_kappa(spec.kappa)
    kappa_half = 0.5 * (kappa_ext[:-1] + kappa_ext[1:])
    has_diffusion = bool(np.any(kappa_half > 0.0))
    source = spec.s
    fixed_left = closure.is_fixed(Side.LEFT)
    fixed_right = closure.is_fixed(Side.RIGHT)

    def rhs(u: np.ndarray) -> np.ndarray:
        ext = closure.extend(u)
        out = np.zeros_like(u)
        if has_flux:
            slope = _van_leer(ext[1:-1] - ext[:-2], ext[2:] - ext[1:-1])
            u_left = ext[1:-2] + 0.5 * slope[:-1]
            u_right = ext[2:-1] - 0.5 * slope[1:]
            speed = np.maximum(np.abs(_poly_prime(c1, u_left)), np.abs(_poly_prime(c1, u_right)))
            flux = 0.5 * (_poly(c1, u_left) + _poly(c1, u_right)) - 0.5 * speed * (u_right - u_left)
            out -= (flux[1:] - flux[:-1]) / dx
        if has_diffusion:
            inner = ext[1:-1]
            q = kappa_half * (inner[1:] - inner[:-1]) / dx
            out += (q[1:] - q[:-1]) / dx
        if has_reaction:
            out -= _poly(c0, u)
        if source is not None:
            out -= source
        if fixed_left:
            out[0] = 0.0
        if fixed_right:
            out[-1] = 0.0
        return out

    return rhs


def stable_dt(spec: Family1DSpec, u: np.ndarray, dx: float, cfl: float = 0.4) -> float:
    """cfl * min(dx / max|f1'(u)|, dx^2 / (2 max kappa)); inf when neither term is active."""
    limits = []
    speed = float(np.max(np.abs(_poly_prime(spec.c[1], u))))
    if speed > 0.0:
        limits.append(dx / speed)
    kappa_max = float(np.max(spec.kappa))
    if kappa_max > 0.0:
        limits.append(dx * dx / (2.0 * kappa_max))
    return cfl * min(limits) if limits else np.inf


def solve_1d_family(spec: Family1DSpec, cfl: float = 0.4, max_steps: int = 2_000_000) -> np.ndarray:
    """
    Space-time solution shaped [n_t, n_x], with row 0 equal to g.

    Classical RK4 in time; the step is recomputed every step from the current
    state and clipped to land exactly on each snapshot time.
    """
    grid = spec.grid
    dx = grid.dx
    closure = _Closure(spec, dx)
    rhs = _rhs_factory(spec, closure)

    ts = grid.t_points()
    u = spec.g.astype(np.float64).copy()
    frames = [u.copy()]
    t = float(ts[0])
    step = 0

    for t_next in ts[1:]:
        while t < t_next:
            remaining = float(t_next - t)
            dt = stable_dt(spec, u, dx, cfl)
            last = dt >= remaining
            if last:
                dt = remaining
            k1 = rhs(u)
            k2 = rhs(u + 0.5 * dt * k1)
            k3 = rhs(u + 0.5 * dt * k2)
            k4 = rhs(u + dt * k3)
            u = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t = float(t_next) if last else t + dt
            step += 1
            if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > BLOWUP_LIMIT:
                raise DivergedError(f"1D family solution blew up at step {step} (t={t:.4g})", step=step, time=t)
            if step >= max_steps:
                raise DivergedError(f"step budget of {max_steps} exhausted at t={t:.4g}", step=step, time=t)
        frames.append(u.copy())

    logger.debug(f"1D family solve finished after {step} steps")
    return np.stack(frames)
