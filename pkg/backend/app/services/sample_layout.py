# backend/app/services/sample_layout.py
"""
Turns samples into model batches.

1D families are learned as a whole (t, x) field: the initial condition is tiled
over the n_t rows and the target is the [n_t, n_x] solution. HeterNS-mini maps
K input frames to M output frames on the spatial grid.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Union

import numpy as np

from app.core.exceptions import ConfigError, DimensionError
from app.db.embedding_file import load_embedding_table
from app.models.baselines import append_condition_channels, extra_channels
from app.models.condition_embedding import ConditionBatch, boundary_one_hot
from app.models.symbol_embedder import HashedSymbolEmbedder, PrecomputedSymbolEmbedder
from app.schemas.dataset import Dataset
from app.schemas.model_config import DOMAIN_ADAPTERS, POINT_ADAPTERS, ModelConfig
from app.schemas.pde_components import Sample
from app.services.component_service import FULL_FIELD_FAMILIES
from app.utils.patching import patch_grid

logger = logging.getLogger(__name__)

SymbolEmbedder = Union[HashedSymbolEmbedder, PrecomputedSymbolEmbedder]


@dataclass
class ModelBatch:
    inputs: np.ndarray   # [B, C_in, H, W]
    targets: np.ndarray  # [B, C_out, H, W]
    conditions: ConditionBatch
    indices: List[int]

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def take(self, positions: Sequence[int]) -> "ModelBatch":
        """Rows `positions` of this batch, in that order."""
        pos = np.asarray(positions, dtype=np.int64)
        cond = self.conditions
        return ModelBatch(
            inputs=self.inputs[pos],
            targets=self.targets[pos],
            conditions=ConditionBatch(
                symbols=cond.symbols[pos],
                coefficients=cond.coefficients[pos],
                boundary=cond.boundary[pos],
                fields={kind: values[pos] for kind, values in cond.fields.items()},
                field_present={kind: flags[pos] for kind, flags in cond.field_present.items()},
            ),
            indices=[self.indices[i] for i in pos],
        )


def is_full_field(sample: Sample) -> bool:
    return sample.family in FULL_FIELD_FAMILIES


def layout_input(sample: Sample) -> np.ndarray:
    if is_full_field(sample):
        n_t = sample.output.shape[0]
        return np.tile(sample.input[None, :], (n_t, 1))[None]
    return sample.input


def layout_target(sample: Sample) -> np.ndarray:
    return sample.output[None] if is_full_field(sample) else sample.output


def layout_point_field(values: np.ndarray, sample: Sample) -> np.ndarray:
    if is_full_field(sample):
        return np.tile(values[None, :], (sample.output.shape[0], 1))
    return values


class SampleLayoutService:
    def make_symbol_embedder(self, config: ModelConfig, embedding_file: Optional[Path] = None) -> SymbolEmbedder:
        if config.symbol_embedder == "hashed":
            return HashedSymbolEmbedder(config.symbol_dim)
        if embedding_file is None:
            raise ConfigError("the precomputed symbol embedder needs an embedding file")
        embedder = PrecomputedSymbolEmbedder(load_embedding_table(embedding_file))
        if embedder.dim != config.symbol_dim:
            raise DimensionError(f"embedding file has width {embedder.dim}, config declares symbol_dim "
                                 f"{config.symbol_dim}")
        return embedder

    def resolve_model_config(self, config: ModelConfig, dataset: Dataset) -> ModelConfig:
        """Fill in layout, channel counts, coefficient names and active adapters from the dataset."""
        if not dataset.samples:
            raise ConfigError("cannot resolve a model layout from an empty dataset")
        first = dataset.samples[0]
        x, y = layout_input(first), layout_target(first)
        grid_h, grid_w = y.shape[1:]
        patch_grid(grid_h, grid_w, config.patch)

        available = {"symbols", "boundary"}
        if dataset.header.coefficient_names:
            available.add("coefficients")
        for sample in dataset.samples:
            available.update(kind for kind, present in sample.components.presence().items() if present)
        active = [kind for kind in DOMAIN_ADAPTERS + POINT_ADAPTERS if kind in config.active_kinds and kind in available]

        updates = {
            "task_mode": "full-field" if is_full_field(first) else "frames",
            "grid_h": grid_h,
            "grid_w": grid_w,
            "out_channels": y.shape[0],
            "coefficient_names": list(dataset.header.coefficient_names),
            "active_kinds": active,
        }
        resolved = ModelConfig.model_validate({**config.model_dump(), **updates, "in_channels": x.shape[0]})
        extra = extra_channels(resolved)
        if extra:
            resolved = ModelConfig.model_validate({**resolved.model_dump(), "in_channels": x.shape[0] + extra})
        logger.info(f"Resolved model layout {grid_h}x{grid_w}, {resolved.in_channels} -> {resolved.out_channels} "
                    f"channels, active adapters {active}")
        return resolved

    def check_compatible(self, config: ModelConfig, dataset: Dataset) -> None:
        """Raise a DimensionError naming every dimension where a checkpoint and a dataset disagree."""
        expected = self.resolve_model_config(config, dataset)
        mismatched = [
            f"{name} (checkpoint {getattr(config, name)}, dataset {getattr(expected, name)})"
            for name in ("grid_h", "grid_w", "in_channels", "out_channels", "coefficient_names")
            if getattr(config, name) != getattr(expected, name)
        ]
        if mismatched:
            raise DimensionError(f"checkpoint does not fit the dataset: {'; '.join(mismatched)}")

    def build_batch(self, samples: Sequence[Sample], config: ModelConfig, embedder: SymbolEmbedder,
                    indices: Optional[List[int]] = None) -> ModelBatch:
        names = config.coefficient_names
        symbol_cache: Dict[str, np.ndarray] = {}

        def symbols_vec(text: str) -> np.ndarray:
            if text not in symbol_cache:
                symbol_cache[text] = embedder(text)
            return symbol_cache[text]

        fields: Dict[str, np.ndarray] = {}
        present: Dict[str, np.ndarray] = {}
        for kind in POINT_ADAPTERS:
            flags = np.array([s.components.point_fields()[kind] is not None for s in samples])
            if not flags.any():
                continue
            fields[kind] = np.stack([
                layout_point_field(s.components.point_fields()[kind], s) if flag
                else np.zeros(layout_target(s).shape[1:])
                for s, flag in zip(samples, flags)
            ])
            present[kind] = flags

        conditions = ConditionBatch(
            symbols=np.stack([symbols_vec(s.components.symbols) for s in samples]),
            coefficients=np.array([[s.components.coefficients.get(n, 0.0) for n in names] for s in samples],
                                  dtype=np.float64).reshape(len(samples), len(names)),
            boundary=np.stack([boundary_one_hot(s.components.boundary) for s in samples]),
            fields=fields,
            field_present=present,
        )
        inputs = np.stack([layout_input(s) for s in samples]).astype(np.float64)
        return ModelBatch(
            inputs=append_condition_channels(inputs, conditions, config),
            targets=np.stack([layout_target(s) for s in samples]).astype(np.float64),
            conditions=conditions,
            indices=list(indices) if indices is not None else list(range(len(samples))),
        )

    def iter_batches(self, samples: Sequence[Sample], config: ModelConfig, embedder: SymbolEmbedder,
                     batch_size: int, order: Optional[Sequence[int]] = None) -> Iterator[ModelBatch]:
        order = list(order) if order is not None else list(range(len(samples)))
        for start in range(0, len(order), batch_size):
            chunk = order[start:start + batch_size]
            yield self.build_batch([samples[i] for i in chunk], config, embedder, chunk)


sample_layout_service = SampleLayoutService()
