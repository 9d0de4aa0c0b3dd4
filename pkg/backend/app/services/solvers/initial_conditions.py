# backend/app/services/solvers/initial_conditions.py
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrigSuperposition:
    """u(x) = sum_i A_i sin(k_i x + phase_i) with k_i = 2 pi n_i / length."""
    amplitudes: np.ndarray
    wavenumbers: np.ndarray
    phases: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        arg = np.multiply.outer(np.asarray(x, dtype=np.float64), self.wavenumbers) + self.phases
        return np.sum(self.amplitudes * np.sin(arg), axis=-1)

    def derivative(self, x: np.ndarray) -> np.ndarray:
        arg = np.multiply.outer(np.asarray(x, dtype=np.float64), self.wavenumbers) + self.phases
        return np.sum(self.amplitudes * self.wavenumbers * np.cos(arg), axis=-1)


def sample_trig_superposition(
    rng: np.random.Generator,
    length: float,
    n_waves: int = 2,
    max_mode: int = 4,
) -> TrigSuperposition:
    """
    Random sine superposition, periodic over `length`.

    Amplitudes are uniform on [-1, 1] and rescaled so their absolute values sum
    to one, which bounds |u| by 1.
    """
    modes = rng.integers(1, max_mode + 1, size=n_waves)
    amplitudes = rng.uniform(-1.0, 1.0, size=n_waves)
    total = np.sum(np.abs(amplitudes))
    if total > 0:
        amplitudes = amplitudes / total
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_waves)
    return TrigSuperposition(
        amplitudes=amplitudes,
        wavenumbers=2.0 * np.pi * modes / length,
        phases=phases,
    )


def gaussian_random_field(
    rng: np.random.Generator,
    n: int,
    max_mode: int = 8,
    alpha: float = 2.5,
    tau: float = 7.0,
) -> np.ndarray:
    """
    Band-limited random field on the n x n unit torus, zero mean and unit std.

    Modes with |k|_inf <= max_mode carry Gaussian coefficients damped by
    (|2 pi k|^2 + tau^2)^(-alpha/2).
    """
    k = np.fft.fftfreq(n, d=1.0 / n)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    band = (np.abs(kx) <= max_mode) & (np.abs(ky) <= max_mode)
    band[0, 0] = False
    decay = ((2.0 * np.pi) ** 2 * (kx ** 2 + ky ** 2) + tau ** 2) ** (-alpha / 2.0)
    coeffs = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * decay * band
    field = np.real(np.fft.ifft2(coeffs))
    field -= field.mean()
    std = field.std()
    return field / std if std > 0 else field
