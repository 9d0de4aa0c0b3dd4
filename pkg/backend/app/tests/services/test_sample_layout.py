# backend/app/tests/services/test_sample_layout.py
import numpy as np
import pytest

from app.core.exceptions import ConfigError, DimensionError
from app.models.symbol_embedder import HashedSymbolEmbedder
from app.schemas.model_config import BaselineKind, ModelConfig
from app.services.sample_layout import sample_layout_service
from app.tests.helpers import frames_dataset, heterns_groups


class TestResolve:
    def test_full_field_layout(self, small_advection_dataset, tiny_model_config):
        config = sample_layout_service.resolve_model_config(tiny_model_config, small_advection_dataset)
        assert config.task_mode == "full-field"
        assert (config.grid_h, config.grid_w) == (8, 8)
        assert (config.in_channels, config.out_channels) == (1, 1)
        assert list(config.coefficient_names) == ["beta"]
        assert list(config.active_kinds) == ["symbols", "coefficients", "boundary"]

    def test_concat_widens_input(self, small_advection_dataset, tiny_model_config):
        concat = tiny_model_config.model_copy(update={"baseline": BaselineKind.CONCAT})
        config = sample_layout_service.resolve_model_config(concat, small_advection_dataset)
        assert config.in_channels == 2

    def test_frames_layout(self):
        dataset = frames_dataset(heterns_groups(), {})
        config = sample_layout_service.resolve_model_config(ModelConfig(patch=4, d_cond=8), dataset)
        assert config.task_mode == "frames"
        assert (config.in_channels, config.out_channels) == (2, 1)
        assert tuple(config.coefficient_names) == ("nu", "omega")
        assert "force" in config.active_kinds and "kappa" not in config.active_kinds

    def test_grid_must_divide_by_patch(self, small_advection_dataset):
        with pytest.raises(DimensionError):
            sample_layout_service.resolve_model_config(ModelConfig(patch=3), small_advection_dataset)


class TestCompatibility:
    def test_matching_dataset(self, small_advection_dataset, tiny_model_config):
        config = sample_layout_service.resolve_model_config(tiny_model_config, small_advection_dataset)
        sample_layout_service.check_compatible(config, small_advection_dataset)

    def test_grid_mismatch_named(self, small_advection_dataset, tiny_model_config):
        config = sample_layout_service.resolve_model_config(tiny_model_config, small_advection_dataset)
        wider = config.model_copy(update={"grid_w": 16})
        with pytest.raises(DimensionError) as exc:
            sample_layout_service.check_compatible(wider, small_advection_dataset)
        assert "grid_w" in exc.value.message


class TestBatches:
    def test_inputs_are_tiled_over_time(self, small_advection_dataset, tiny_model_config):
        config = sample_layout_service.resolve_model_config(tiny_model_config, small_advection_dataset)
        samples = small_advection_dataset.samples[:3]
        batch = sample_layout_service.build_batch(samples, config, HashedSymbolEmbedder(config.symbol_dim))
        assert batch.inputs.shape == (3, 1, 8, 8)
        for row in range(8):
            np.testing.assert_array_equal(batch.inputs[1, 0, row], samples[1].input)
        np.testing.assert_array_equal(batch.targets[2, 0], samples[2].output)
        assert batch.conditions.coefficients.shape == (3, 1)
        assert batch.conditions.coefficients[0, 0] == samples[0].components.coefficients["beta"]
        assert batch.conditions.fields == {}

    def test_precomputed_embedder_needs_file(self):
        with pytest.raises(ConfigError):
            sample_layout_service.make_symbol_embedder(ModelConfig(symbol_embedder="precomputed"))

    def test_iter_batches_follows_order(self, small_advection_dataset, tiny_model_config):
        config = sample_layout_service.resolve_model_config(tiny_model_config, small_advection_dataset)
        embedder = HashedSymbolEmbedder(config.symbol_dim)
        batches = list(sample_layout_service.iter_batches(small_advection_dataset.samples, config, embedder,
                                                          batch_size=2, order=[5, 1, 3]))
        assert [b.indices for b in batches] == [[5, 1], [3]]
        np.testing.assert_array_equal(batches[1].targets[0, 0], small_advection_dataset.samples[3].output)

    def test_take(self, small_advection_dataset, tiny_model_config):
        config = sample_layout_service.resolve_model_config(tiny_model_config, small_advection_dataset)
        batch = sample_layout_service.build_batch(small_advection_dataset.samples[:4], config,
                                                  HashedSymbolEmbedder(config.symbol_dim))
        part = batch.take([3, 0])
        assert len(part) == 2 and part.indices == [3, 0]
        np.testing.assert_array_equal(part.inputs[0], batch.inputs[3])
        np.testing.assert_array_equal(part.conditions.symbols[1], batch.conditions.symbols[0])

    def test_missing_fields_are_zero_and_flagged(self):
        dataset = frames_dataset(heterns_groups(), {})
        config = sample_layout_service.resolve_model_config(ModelConfig(patch=4, d_cond=8), dataset)
        bare = dataset.samples[0].model_copy(update={
            "components": dataset.samples[0].components.model_copy(update={"force": None}),
        })
        batch = sample_layout_service.build_batch([bare, dataset.samples[1]], config,
                                                  HashedSymbolEmbedder(config.symbol_dim))
        np.testing.assert_array_equal(batch.conditions.field_present["force"], [False, True])
        assert not batch.conditions.fields["force"][0].any()
