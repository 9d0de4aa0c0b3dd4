# backend/app/models/unisolver.py
"""
The conditional Transformer.

Each block modulates its two sub-layers with (scale, shift, select) triples:

    x <- x + select * Attention(scale * LN(x) + shift)
    x <- x + select' * FFN(scale' * LN(x) + shift')

The first d_domain feature channels of every triple come from the domain-wise
condition (the same values for every token), the remaining d_point channels
from the point-wise condition of each token. All condition projections start at
zero with scale stored as 1 + delta, so each block is the identity at init.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.autodiff import functional as F
from app.autodiff.nn import LayerNorm, Linear, Module
from app.autodiff.tensor import Tensor
from app.core.exceptions import ConfigError, DimensionError
from app.models.baselines import subspace_decoupled, uses_deep_conditions
from app.models.condition_embedding import ConditionBatch, ConditionEmbedder, DeepConditions
from app.schemas.model_config import ModelConfig
from app.utils.patching import patch_grid, patchify, sincos_position_encoding

logger = logging.getLogger(__name__)

Triple = Tuple[Tensor, Tensor, Tensor]
SITES = ("attention", "feedforward")


def split_subspace(config: Union[ModelConfig, int], alpha: Optional[float] = None) -> Tuple[int, int]:
    """(d_domain, d_point) with d_domain = floor(alpha * d_feature)."""
    if isinstance(config, ModelConfig):
        d_feature, alpha = config.d_feature, config.alpha
    else:
        d_feature = config
    if alpha is None or not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    d_domain = math.floor(alpha * d_feature)
    d_point = d_feature - d_domain
    if d_domain < 1 or d_point < 1:
        raise ConfigError(f"alpha={alpha} at d_feature={d_feature} gives an empty subspace ({d_domain}, {d_point})")
    return d_domain, d_point


def modulate(x: Tensor, scale: Tensor, shift: Tensor) -> Tensor:
    return F.add(F.mul(x, scale), shift)


def pinned_triple(shape: Sequence[int]) -> Triple:
    """(scale, shift, select) = (1, 0, 1): the block becomes a plain pre-norm Transformer block."""
    return Tensor(np.ones(shape)), Tensor(np.zeros(shape)), Tensor(np.ones(shape))


class ConditionProjection(Module):
    """
    SiLU followed by a zero-initialized linear map, once for the domain-wise and
    once for the point-wise condition. Emits `n_out` full-width tensors.
    """

    def __init__(self, config: ModelConfig, n_out: int, rng: np.random.Generator):
        self.n_out = n_out
        self.decoupled = subspace_decoupled(config)
        if self.decoupled:
            self.d_domain, self.d_point = split_subspace(config)
        else:
            self.d_domain = self.d_point = config.d_feature
        self.domain = Linear(config.d_cond, n_out * self.d_domain, rng, zero_init=True)
        self.point = Linear(config.d_cond, n_out * self.d_point, rng, zero_init=True)

    def __call__(self, conditions: DeepConditions, n_tokens: int) -> List[Tensor]:
        c_domain, c_point = conditions.c_domain, conditions.c_point
        batch = c_domain.shape[0]
        if c_point.ndim != 3 or c_point.shape[:2] != (batch, n_tokens):
            raise DimensionError(f"point-wise conditions must cover {n_tokens} tokens",
                                 shapes=[c_point.shape, (batch, n_tokens)])
        width = self.n_out * self.d_domain
        dom = F.reshape(self.domain(F.silu(c_domain)), (batch, 1, width))
        dom = F.expand(dom, (batch, n_tokens, width))
        pt = self.point(F.silu(c_point))
        dom_parts = F.split(dom, [self.d_domain] * self.n_out, axis=-1)
        pt_parts = F.split(pt, [self.d_point] * self.n_out, axis=-1)
        if self.decoupled:
            return [F.concat([a, b], axis=-1) for a, b in zip(dom_parts, pt_parts)]
        return [F.add(a, b) for a, b in zip(dom_parts, pt_parts)]


class TransformerBlock(Module):
    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        d = config.d_feature
        hidden = max(1, int(round(d * config.mlp_ratio)))
        self.n_heads, self.d_head = config.n_heads, config.d_head
        self.norm1 = LayerNorm(d, config.ln_eps)
        self.qkv = Linear(d, 3 * d, rng)
        self.proj = Linear(d, d, rng)
        self.norm2 = LayerNorm(d, config.ln_eps)
        self.fc1 = Linear(d, hidden, rng)
        self.fc2 = Linear(hidden, d, rng)
        self.attn_condition = ConditionProjection(config, 3, rng)
        self.ffn_condition = ConditionProjection(config, 3, rng)

    def attention(self, h: Tensor) -> Tensor:
        # heads are contiguous d_head slices of the feature axis
        b, n, d = h.shape
        qkv = F.reshape(self.qkv(h), (b, n, 3, self.n_heads, self.d_head))
        qkv = F.transpose(qkv, (2, 0, 3, 1, 4))
        shape = (b, self.n_heads, n, self.d_head)
        q, k, v = (F.reshape(part, shape) for part in F.split(qkv, [1, 1, 1], axis=0))
        scores = F.scale(F.matmul(q, F.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(self.d_head))
        out = F.matmul(F.softmax(scores, axis=-1), v)
        out = F.reshape(F.transpose(out, (0, 2, 1, 3)), (b, n, d))
        return self.proj(out)

    def feedforward(self, h: Tensor) -> Tensor:
        return self.fc2(F.gelu(self.fc1(h)))

    def triples(self, conditions: DeepConditions, n_tokens: int) -> Tuple[Triple, Triple]:
        attn = self.attn_condition(conditions, n_tokens)
        ffn = self.ffn_condition(conditions, n_tokens)
        return _as_triple(attn), _as_triple(ffn)

    def __call__(self, x: Tensor, attn: Triple, ffn: Triple) -> Tensor:
        return block_forward(self, x, attn, ffn)


def _as_triple(deltas: List[Tensor]) -> Triple:
    delta_scale, shift, select = deltas
    return F.add(delta_scale, 1.0), shift, select


def block_forward(block: TransformerBlock, x: Tensor, attn: Triple, ffn: Triple) -> Tensor:
    for triple in (attn, ffn):
        for part in triple:
            if part.shape != x.shape:
                raise DimensionError("condition triple does not match the token block", shapes=[part.shape, x.shape])
    scale, shift, select = attn
    x = F.add(x, F.mul(select, block.attention(modulate(block.norm1(x), scale, shift))))
    scale, shift, select = ffn
    return F.add(x, F.mul(select, block.feedforward(modulate(block.norm2(x), scale, shift))))


class UnisolverModel(Module):
    def __init__(self, config: ModelConfig, rng: Optional[np.random.Generator] = None):
        if config.grid_h is None or config.grid_w is None:
            raise ConfigError("model layout (grid_h, grid_w) must be resolved before building the model")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = config
        p, d = config.patch, config.d_feature
        self.grid_tokens = patch_grid(config.grid_h, config.grid_w, p)
        self.n_tokens = self.grid_tokens[0] * self.grid_tokens[1]

        self.patch_embed = Linear(config.in_channels * p * p, d, rng)
        self.pos_embed = sincos_position_encoding(d, *self.grid_tokens)
        self.embedder = ConditionEmbedder(config, rng)
        self.blocks = [TransformerBlock(config, rng) for _ in range(config.n_layers)]
        self.norm_final = LayerNorm(d, config.ln_eps)
        self.head_condition = ConditionProjection(config, 2, rng)
        self.head = Linear(d, p * p * config.out_channels, rng)
        logger.debug(f"Built {config.baseline.value} model with {self.parameter_count()} parameters")

    def patchify(self, x: np.ndarray) -> Tensor:
        """[B, C, H, W] fields -> [B, N, d_feature] tokens with the positional encoding added."""
        cfg = self.config
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[1:] != (cfg.in_channels, cfg.grid_h, cfg.grid_w):
            raise DimensionError(
                f"input must be [batch, {cfg.in_channels}, {cfg.grid_h}, {cfg.grid_w}]", shapes=[x.shape]
            )
        return F.add(self.patch_embed(Tensor(patchify(x, cfg.patch))), self.pos_embed)

    def unpatchify(self, tokens: Tensor) -> Tensor:
        """[B, N, p*p*C] -> [B, C, H, W]; the inverse of the einops layout used by `patchify`."""
        cfg, p = self.config, self.config.patch
        h, w = self.grid_tokens
        b = tokens.shape[0]
        out = F.reshape(tokens, (b, h, w, cfg.out_channels, p, p))
        out = F.transpose(out, (0, 3, 1, 4, 2, 5))
        return F.reshape(out, (b, cfg.out_channels, cfg.grid_h, cfg.grid_w))

    def embed(self, batch: ConditionBatch) -> DeepConditions:
        if not uses_deep_conditions(self.config):
            return DeepConditions.zeros(batch.batch_size, self.n_tokens, self.config.d_cond)
        return self.embedder(batch)

    def condition_triple(self, conditions: DeepConditions, layer: int, site: str = "attention") -> Triple:
        if site not in SITES:
            raise ConfigError(f"site must be one of {SITES}, got '{site}'")
        attn, ffn = self.blocks[layer].triples(conditions, self.n_tokens)
        return attn if site == "attention" else ffn

    def forward(self, x: np.ndarray, conditions: DeepConditions, pinned: bool = False) -> Tensor:
        h = self.patchify(x)
        if conditions.c_domain.shape[0] != h.shape[0]:
            raise DimensionError("conditions and inputs disagree on the batch size",
                                 shapes=[conditions.c_domain.shape, h.shape])
        for block in self.blocks:
            if pinned:
                attn = ffn = pinned_triple(h.shape)
            else:
                attn, ffn = block.triples(conditions, self.n_tokens)
            h = block(h, attn, ffn)
        if pinned:
            scale, shift, _ = pinned_triple(h.shape)
        else:
            delta_scale, shift = self.head_condition(conditions, self.n_tokens)
            scale = F.add(delta_scale, 1.0)
        return self.unpatchify(self.head(modulate(self.norm_final(h), scale, shift)))

    def __call__(self, x: np.ndarray, batch: ConditionBatch) -> Tensor:
        return self.forward(x, self.embed(batch))


def rollout(model: UnisolverModel, frames: np.ndarray, conditions: DeepConditions, steps: int,
            condition_channels: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Feed predictions back as inputs: [B, K, H, W] -> [B, steps * M, H, W].

    `condition_channels` ([B, E, H, W]) are appended to every window for the
    concat variant.
    """
    if model.config.task_mode != "frames":
        raise ConfigError("rollout needs a frames-mode model")
    if steps < 1:
        raise ConfigError(f"steps must be positive, got {steps}")
    extra = None if condition_channels is None else np.asarray(condition_channels, dtype=np.float64)
    k = model.config.in_channels - (0 if extra is None else extra.shape[1])
    window = np.asarray(frames, dtype=np.float64)
    if window.shape[1] != k:
        raise DimensionError(f"rollout expects {k} input frames", shapes=[window.shape])
    outputs = []
    for _ in range(steps):
        x = window if extra is None else np.concatenate([window, extra], axis=1)
        pred = model.forward(x, conditions).data
        outputs.append(pred)
        window = np.concatenate([window, pred], axis=1)[:, -k:]
    return np.concatenate(outputs, axis=1)
