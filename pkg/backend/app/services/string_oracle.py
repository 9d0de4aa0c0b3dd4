# backend/app/services/string_oracle.py
"""
Analytical solution of the forced vibrating string with fixed ends.

u(x, t) = 1/2 (Phi(x+at) + Phi(x-at))
        + 1/(2a) int_{x-at}^{x+at} Psi
        + 1/(2a) int_0^t int_{x-a(t-tau)}^{x+a(t-tau)} F(xi, tau) dxi dtau

where Phi, Psi and F are the odd 2L-periodic extensions (in x) of phi, psi and f.
"""
import logging
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson

from app.core.exceptions import OutOfDomainError
from app.schemas.string_problem import QuadSpec, StringProblem

logger = logging.getLogger(__name__)

_DOMAIN_TOL = 1e-12


class ExtendedFunction:
    """Odd, 2L-periodic extension in the first argument of a function on [0, L]."""

    def __init__(self, base: Callable[..., np.ndarray], L: float):
        self.base = base
        self.L = L

    def __call__(self, x, *args) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        folded = np.mod(x, 2.0 * self.L)
        upper = folded > self.L
        y = np.where(upper, 2.0 * self.L - folded, folded)
        sign = np.where(upper, -1.0, 1.0)
        return sign * np.asarray(self.base(y, *args), dtype=np.float64)


def extend_odd_periodic(g: Callable[..., np.ndarray], L: float) -> ExtendedFunction:
    return ExtendedFunction(g, L)


def dalembert_position(Phi: ExtendedFunction, a: float, x, t) -> np.ndarray:
    return 0.5 * (Phi(x + a * t) + Phi(x - a * t))


def velocity_integral(Psi: Optional[ExtendedFunction], a: float, x: float, t: float,
                      quad: Optional[QuadSpec] = None) -> float:
    """(1/2a) times the Simpson integral of Psi over [x - at, x + at]. Negative t integrates backwards."""
    if Psi is None or t == 0.0:
        return 0.0
    quad = quad or QuadSpec()
    xi = np.linspace(x - a * t, x + a * t, quad.panels_x + 1)
    return float(simpson(Psi(xi), x=xi) / (2.0 * a))


def duhamel_integral(F: Optional[ExtendedFunction], a: float, x: float, t: float,
                     quad: Optional[QuadSpec] = None) -> float:
    """
    Nested Simpson over the characteristic triangle.

    The inner integral over xi is mapped onto eta in [-1, 1] with
    xi = x + a (t - tau) eta, so every tau row uses the same nodes.
    """
    if F is None or t == 0.0:
        return 0.0
    quad = quad or QuadSpec()
    tau = np.linspace(0.0, t, quad.panels_t + 1)
    eta = np.linspace(-1.0, 1.0, quad.panels_x + 1)
    half_width = a * (t - tau)
    xi = x + half_width[:, None] * eta[None, :]
    values = F(xi, np.broadcast_to(tau[:, None], xi.shape))
    inner = half_width * simpson(values, x=eta, axis=1)
    return float(simpson(inner, x=tau) / (2.0 * a))


def _extensions(problem: StringProblem):
    Phi = extend_odd_periodic(problem.phi, problem.L)
    Psi = extend_odd_periodic(problem.psi, problem.L) if problem.psi is not None else None
    F = extend_odd_periodic(problem.f, problem.L) if problem.f is not None else None
    return Phi, Psi, F


def evaluate_solution(problem: StringProblem, x: float, t: float, quad: Optional[QuadSpec] = None) -> float:
    if not (-_DOMAIN_TOL <= x <= problem.L + _DOMAIN_TOL and -_DOMAIN_TOL <= t <= problem.T + _DOMAIN_TOL):
        raise OutOfDomainError(f"(x={x}, t={t}) is outside [0, {problem.L}] x [0, {problem.T}]")
    quad = quad or QuadSpec()
    Phi, Psi, F = _extensions(problem)
    a = problem.a
    return float(
        dalembert_position(Phi, a, x, t)
        + velocity_integral(Psi, a, x, t, quad)
        + duhamel_integral(F, a, x, t, quad)
    )


def evaluate_grid(problem: StringProblem, xs: np.ndarray, ts: np.ndarray,
                  quad: Optional[QuadSpec] = None) -> np.ndarray:
    """Solution on the tensor grid, shaped [len(ts), len(xs)]."""
    quad = quad or QuadSpec()
    xs = np.asarray(xs, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.float64)
    if xs.min() < -_DOMAIN_TOL or xs.max() > problem.L + _DOMAIN_TOL or ts.min() < -_DOMAIN_TOL or ts.max() > problem.T + _DOMAIN_TOL:
        raise OutOfDomainError(f"grid leaves [0, {problem.L}] x [0, {problem.T}]")

    Phi, Psi, F = _extensions(problem)
    a = problem.a
    out = dalembert_position(Phi, a, xs[None, :], ts[:, None])
    if Psi is not None or F is not None:
        for i, t in enumerate(ts):
            for j, x in enumerate(xs):
                out[i, j] += velocity_integral(Psi, a, x, t, quad) + duhamel_integral(F, a, x, t, quad)
    logger.debug(f"Evaluated string solution on a {len(ts)}x{len(xs)} grid")
    return out


# Closed forms for single sine modes on [0, L]

def standing_wave(x, t, a: float, L: float) -> np.ndarray:
    """phi = sin(pi x / L), psi = 0, f = 0."""
    return np.sin(np.pi * x / L) * np.cos(a * np.pi * t / L)


def sine_velocity_solution(x, t, a: float, L: float) -> np.ndarray:
    """phi = 0, psi = sin(pi x / L), f = 0."""
    return (L / (a * np.pi)) * np.sin(np.pi * x / L) * np.sin(a * np.pi * t / L)


def sine_forcing_solution(x, t, a: float, L: float) -> np.ndarray:
    """phi = psi = 0, f = sin(pi x / L) constant in time."""
    return (L / (a * np.pi)) ** 2 * (1.0 - np.cos(a * np.pi * t / L)) * np.sin(np.pi * x / L)
