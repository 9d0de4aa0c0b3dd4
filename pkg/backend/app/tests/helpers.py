# backend/app/tests/helpers.py
"""Reference implementations and factories shared by the test modules."""
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from scipy.special import erf

from app.schemas.dataset import Dataset, DatasetHeader
from app.schemas.model_config import ModelConfig
from app.schemas.pde_components import (
    BoundarySpec,
    Family,
    GridSpec,
    PDEComponents,
    Sample,
    SplitTag,
)
from app.schemas.task_spec import ConditionGroup

# Small architecture used across model tests: 4x4 grid, patch 2 -> 4 tokens
TINY_MODEL = dict(
    d_feature=16,
    n_layers=2,
    n_heads=2,
    d_head=8,
    patch=2,
    grid_h=4,
    grid_w=4,
    d_cond=8,
    symbol_dim=8,
    coefficient_names=["nu"],
)


def tiny_config(**overrides) -> ModelConfig:
    return ModelConfig(**{**TINY_MODEL, **overrides})


def randomize_parameters(module, seed: int = 0, std: float = 0.3) -> None:
    """Overwrite every parameter (zero-initialized ones included) with random values."""
    rng = np.random.default_rng(seed)
    for tensor in module.parameters().values():
        tensor.data = rng.normal(0.0, std, size=tensor.shape)


# --- string equation ------------------------------------------------------------

def leapfrog_wave(
    a: float,
    L: float,
    T: float,
    n_x: int,
    phi: Callable[[np.ndarray], np.ndarray],
    psi: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    f: Optional[Callable[[np.ndarray, float], np.ndarray]] = None,
    cfl: float = 0.5,
    save_every: int = 1,
):
    """
    Second-order leapfrog for u_tt = a^2 u_xx + f with u = 0 at both ends.

    Returns (xs, ts, frames) with frames[i] the solution at ts[i].
    """
    xs = np.linspace(0.0, L, n_x)
    dx = xs[1] - xs[0]
    n_steps = int(round(T / (cfl * dx / a)))
    dt = T / n_steps
    r2 = (a * dt / dx) ** 2

    def lap(u):
        out = np.zeros_like(u)
        out[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
        return out

    def force(t):
        return np.zeros(n_x) if f is None else f(xs, t)

    prev = phi(xs).astype(np.float64)
    prev[0] = prev[-1] = 0.0
    vel = np.zeros(n_x) if psi is None else psi(xs)
    curr = prev + dt * vel + 0.5 * r2 * lap(prev) + 0.5 * dt * dt * force(0.0)
    curr[0] = curr[-1] = 0.0

    ts, frames = [0.0], [prev.copy()]
    if save_every == 1:
        ts.append(dt)
        frames.append(curr.copy())
    for step in range(1, n_steps):
        nxt = 2.0 * curr - prev + r2 * lap(curr) + dt * dt * force(step * dt)
        nxt[0] = nxt[-1] = 0.0
        prev, curr = curr, nxt
        if (step + 1) % save_every == 0:
            ts.append((step + 1) * dt)
            frames.append(curr.copy())
    return xs, np.array(ts), np.stack(frames)


# --- plain pre-norm ViT on the same weights ---------------------------------------

def _layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * gain + bias


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def plain_vit(state: Dict[str, np.ndarray], pos_embed: np.ndarray, config: ModelConfig, x: np.ndarray) -> np.ndarray:
    """Standard pre-norm ViT regressor: no condition pathway at all."""
    b, c, H, W = x.shape
    p, d = config.patch, config.d_feature
    h, w = H // p, W // p
    nh, dh = config.n_heads, config.d_head

    patches = x.reshape(b, c, h, p, w, p).transpose(0, 2, 4, 1, 3, 5).reshape(b, h * w, c * p * p)
    z = patches @ state["patch_embed.weight"] + state["patch_embed.bias"] + pos_embed

    for i in range(config.n_layers):
        pre = f"blocks.{i}."
        y = _layer_norm(z, state[pre + "norm1.gain"], state[pre + "norm1.bias"], config.ln_eps)
        qkv = y @ state[pre + "qkv.weight"] + state[pre + "qkv.bias"]
        q, k, v = (qkv[..., j * d:(j + 1) * d].reshape(b, h * w, nh, dh).transpose(0, 2, 1, 3) for j in range(3))
        attn = _softmax(q @ k.transpose(0, 1, 3, 2) / np.sqrt(dh)) @ v
        attn = attn.transpose(0, 2, 1, 3).reshape(b, h * w, d)
        z = z + attn @ state[pre + "proj.weight"] + state[pre + "proj.bias"]

        y = _layer_norm(z, state[pre + "norm2.gain"], state[pre + "norm2.bias"], config.ln_eps)
        hidden = y @ state[pre + "fc1.weight"] + state[pre + "fc1.bias"]
        hidden = hidden * 0.5 * (1.0 + erf(hidden / np.sqrt(2.0)))
        z = z + hidden @ state[pre + "fc2.weight"] + state[pre + "fc2.bias"]

    z = _layer_norm(z, state["norm_final.gain"], state["norm_final.bias"], config.ln_eps)
    out = z @ state["head.weight"] + state["head.bias"]
    co = config.out_channels
    return out.reshape(b, h, w, co, p, p).transpose(0, 3, 1, 4, 2, 5).reshape(b, co, H, W)


# --- synthetic datasets -----------------------------------------------------------

def frames_dataset(
    groups: Sequence[ConditionGroup],
    samples_per_group: Dict[int, int],
    n: int = 8,
    k_in: int = 2,
    seed: int = 0,
) -> Dataset:
    """HeterNS-shaped dataset with random frames; group i gets samples_per_group.get(i, 1) samples."""
    rng = np.random.default_rng(seed)
    grid = GridSpec(dims=2, n_x=n, n_y=n, n_t=k_in + 1, periodic=True)
    samples = []
    for i, group in enumerate(groups):
        for _ in range(samples_per_group.get(i, 1)):
            samples.append(Sample(
                input=rng.normal(size=(k_in, n, n)),
                output=rng.normal(size=(1, n, n)),
                components=PDEComponents(
                    symbols=r"\partial_t w = \nu \Delta w + f",
                    coefficients=dict(group.values),
                    boundary=BoundarySpec.periodic(2),
                    force=rng.normal(size=(n, n)),
                ),
                split=group.split,
                family=Family.HETERNS_MINI,
            ))
    header = DatasetHeader(family=Family.HETERNS_MINI, grid=grid, coefficient_names=("nu", "omega"),
                           condition_groups=list(groups))
    return Dataset(header=header, samples=samples)


def heterns_groups():
    return [
        ConditionGroup(values={"nu": 1e-3, "omega": 1.0}, split=SplitTag.ID),
        ConditionGroup(values={"nu": 1e-3, "omega": 2.0}, split=SplitTag.ID),
        ConditionGroup(values={"nu": 1e-3, "omega": 1.5}, split=SplitTag.OOD),
    ]
