# backend/app/utils/patching.py
"""Patch layout shared by the model input and the point-wise condition fields."""
from typing import Tuple

import numpy as np
from einops import rearrange

from app.core.exceptions import DimensionError


def patch_grid(height: int, width: int, patch: int) -> Tuple[int, int]:
    """Number of patches along each axis; the grid must tile exactly."""
    if patch < 1:
        raise DimensionError(f"patch size must be positive, got {patch}")
    if height % patch or width % patch:
        raise DimensionError(
            f"grid {height}x{width} is not divisible by patch {patch}",
            shapes=[(height, width), (patch, patch)],
        )
    return height // patch, width // patch


def patchify(fields: np.ndarray, patch: int) -> np.ndarray:
    """[B, C, H, W] -> [B, (H/p)(W/p), C*p*p], patches in row-major order."""
    if fields.ndim != 4:
        raise DimensionError("patchify expects [batch, channels, height, width]", shapes=[fields.shape])
    patch_grid(fields.shape[2], fields.shape[3], patch)
    return rearrange(fields, "b c (h p1) (w p2) -> b (h w) (c p1 p2)", p1=patch, p2=patch)


def unpatchify(tokens: np.ndarray, patch: int, grid_h: int, grid_w: int) -> np.ndarray:
    """Inverse of `patchify` for a grid of grid_h x grid_w points."""
    h, w = patch_grid(grid_h, grid_w, patch)
    if tokens.ndim != 3 or tokens.shape[1] != h * w or tokens.shape[2] % (patch * patch):
        raise DimensionError(f"tokens do not tile a {grid_h}x{grid_w} grid with patch {patch}",
                             shapes=[tokens.shape])
    return rearrange(tokens, "b (h w) (c p1 p2) -> b c (h p1) (w p2)", h=h, w=w, p1=patch, p2=patch)


def _sincos_1d(dim: int, positions: np.ndarray) -> np.ndarray:
    omega = 1.0 / 10000 ** (np.arange(dim // 2, dtype=np.float64) / (dim / 2.0))
    out = np.outer(positions.reshape(-1), omega)
    return np.concatenate([np.sin(out), np.cos(out)], axis=1)


def sincos_position_encoding(dim: int, grid_h: int, grid_w: int) -> np.ndarray:
    """
    Fixed 2D sine/cosine encoding of shape [grid_h * grid_w, dim].

    Half of the usable width encodes the row, half the column. When `dim` is not
    a multiple of four the leftover channels are zero.
    """
    usable = dim - dim % 4
    out = np.zeros((grid_h * grid_w, dim))
    if usable == 0:
        return out
    rows, cols = np.meshgrid(np.arange(grid_h, dtype=np.float64), np.arange(grid_w, dtype=np.float64), indexing="ij")
    out[:, :usable // 2] = _sincos_1d(usable // 2, rows)
    out[:, usable // 2:usable] = _sincos_1d(usable // 2, cols)
    return out
