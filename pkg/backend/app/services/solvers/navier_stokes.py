# backend/app/services/solvers/navier_stokes.py
"""
Pseudo-spectral vorticity solver on the unit torus:

    w_t + u . grad w = nu lap w + f,   u = (psi_y, -psi_x),   -lap psi = w.
"""
import logging
from typing import Optional

import numpy as np

from app.core.exceptions import DivergedError
from app.schemas.solver_specs import HeterNSSpec

logger = logging.getLogger(__name__)

TRAIN_OMEGAS = (1.0, 2.0, 3.0)
OOD_OMEGAS = (0.5, 1.5, 2.5, 3.5)

_MIN_DT = 1e-8


def torus_grid(n: int):
    x = np.arange(n) / n
    return np.meshgrid(x, x, indexing="ij")


def heterns_force(omega: float, n: int) -> np.ndarray:
    """0.1 (sin(omega pi (x + y)) + cos(omega pi (x + y))) on the n x n torus grid."""
    xx, yy = torus_grid(n)
    phase = omega * np.pi * (xx + yy)
    return 0.1 * (np.sin(phase) + np.cos(phase))


class SpectralTorus:
    """Wavenumbers, dealiasing mask and transforms for one grid size."""

    def __init__(self, n: int):
        self.n = n
        k = np.fft.fftfreq(n, d=1.0 / n)
        kx_int, ky_int = np.meshgrid(k, k, indexing="ij")
        self.kx = 2.0 * np.pi * kx_int
        self.ky = 2.0 * np.pi * ky_int
        self.k2 = self.kx ** 2 + self.ky ** 2
        self.k2_safe = np.where(self.k2 == 0.0, 1.0, self.k2)
        cutoff = n / 3.0
        self.dealias = (np.abs(kx_int) < cutoff) & (np.abs(ky_int) < cutoff)

    def velocity(self, w_hat: np.ndarray):
        psi_hat = w_hat / self.k2_safe
        psi_hat[0, 0] = 0.0
        u = np.real(np.fft.ifft2(1j * self.ky * psi_hat))
        v = np.real(np.fft.ifft2(-1j * self.kx * psi_hat))
        return u, v

    def advection(self, w_hat: np.ndarray) -> np.ndarray:
        """Dealiased spectrum of -(u . grad w); the mean mode is exactly zero."""
        u, v = self.velocity(w_hat)
        wx = np.real(np.fft.ifft2(1j * self.kx * w_hat))
        wy = np.real(np.fft.ifft2(1j * self.ky * w_hat))
        out = -np.fft.fft2(u * wx + v * wy) * self.dealias
        out[0, 0] = 0.0
        return out


def solve_ns2d_spectral(spec: HeterNSSpec, torus: Optional[SpectralTorus] = None) -> np.ndarray:
    """
    Vorticity frames at linspace(0, T, n_t), shaped [n_t, n, n].

    Integrating-factor RK4: the viscous term is integrated exactly, the
    advection and forcing with RK4. The forcing's mean is dropped because the
    vorticity of a periodic velocity field has zero circulation.
    """
    n = spec.n
    torus = torus or SpectralTorus(n)
    w_hat = np.fft.fft2(spec.w0)
    if spec.force is not None:
        f_hat = np.fft.fft2(spec.force) * torus.dealias
        f_hat[0, 0] = 0.0
    else:
        f_hat = None

    def nonlinear(wh: np.ndarray) -> np.ndarray:
        out = torus.advection(wh)
        if f_hat is not None:
            out = out + f_hat
        return out

    dx = 1.0 / n
    ts = np.linspace(0.0, spec.T, spec.n_t)
    frames = [np.real(np.fft.ifft2(w_hat))]
    t = 0.0
    step = 0

    for t_next in ts[1:]:
        while t < t_next:
            u, v = torus.velocity(w_hat)
            speed = float(np.max(np.sqrt(u * u + v * v)))
            dt = spec.max_dt if speed == 0.0 else min(spec.max_dt, spec.cfl * dx / speed)
            if not np.isfinite(dt) or dt < _MIN_DT:
                raise DivergedError(f"CFL step collapsed to {dt:.3e} at step {step} (t={t:.4g})", step=step, time=t)
            remaining = float(t_next - t)
            last = dt >= remaining
            if last:
                dt = remaining

            half = np.exp(-spec.nu * torus.k2 * dt / 2.0)
            full = half * half
            a = nonlinear(w_hat)
            b = nonlinear(half * (w_hat + 0.5 * dt * a))
            c = nonlinear(half * w_hat + 0.5 * dt * b)
            d = nonlinear(full * w_hat + dt * half * c)
            w_hat = full * w_hat + dt / 6.0 * (full * a + 2.0 * half * (b + c) + d)

            t = float(t_next) if last else t + dt
            step += 1
            if not np.all(np.isfinite(w_hat)):
                raise DivergedError(f"vorticity became non-finite at step {step} (t={t:.4g})", step=step, time=t)
        frames.append(np.real(np.fft.ifft2(w_hat)))

    logger.debug(f"NS solve (n={n}, nu={spec.nu}) finished after {step} steps")
    return np.stack(frames)


def enstrophy(w: np.ndarray) -> float:
    return float(np.mean(w * w))
