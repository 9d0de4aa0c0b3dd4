# backend/app/tests/core/test_presets.py
import json

import pytest

from app.core.exceptions import ConfigError, NotFoundException
from app.core.presets import (
    ADVECTION_OOD_BETAS,
    ADVECTION_TRAIN_BETAS,
    ALPHA_SENSITIVITY,
    DESK_MODEL,
    FULL_HETERNS_MODEL,
    FULL_HETERNS_TRAIN,
    HETERNS_OOD_NUS,
    HETERNS_TRAIN_NUS,
    advection_task,
    heterns_mini_task,
)
from app.models.unisolver import split_subspace
from app.schemas.model_config import ModelConfig
from app.schemas.pde_components import SplitTag
from app.schemas.task_spec import TaskSpec
from app.utils.config_files import dump_config, load_config


class TestPresets:
    def test_full_heterns_model(self):
        assert split_subspace(FULL_HETERNS_MODEL) == (128, 128)
        assert FULL_HETERNS_MODEL.n_heads * FULL_HETERNS_MODEL.d_head == FULL_HETERNS_MODEL.d_feature
        assert FULL_HETERNS_TRAIN.epochs == 300

    def test_alpha_sensitivity_values_are_valid(self):
        for alpha in ALPHA_SENSITIVITY:
            d_domain, d_point = split_subspace(DESK_MODEL.model_copy(update={"alpha": alpha}))
            assert d_domain > 0 and d_point > 0

    def test_ood_values_are_unseen(self):
        assert not set(ADVECTION_OOD_BETAS) & set(ADVECTION_TRAIN_BETAS)
        assert not set(HETERNS_OOD_NUS) & set(HETERNS_TRAIN_NUS)

    def test_advection_groups(self):
        groups = advection_task().condition_groups()
        assert [g.split for g in groups] == [SplitTag.ID] * 3 + [SplitTag.OOD] * 2

    def test_heterns_mini_frames(self):
        task = heterns_mini_task(frames_in=4, frames_out=2)
        assert task.grid.n_t == 6


class TestConfigFiles:
    def test_round_trip(self, tmp_path):
        path = dump_config(tmp_path / "nested" / "model.json", ModelConfig(alpha=0.25, patch=2))
        loaded = load_config(path, ModelConfig)
        assert loaded.alpha == 0.25 and loaded.patch == 2

    def test_task_spec(self, tmp_path):
        task = advection_task(n_samples=6)
        assert load_config(dump_config(tmp_path / "task.json", task), TaskSpec) == task

    def test_invalid_values(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"alpha": 1.5}))
        with pytest.raises(ConfigError) as exc:
            load_config(path, ModelConfig)
        assert "ModelConfig" in exc.value.message

    def test_not_json(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("alpha = 0.5")
        with pytest.raises(ConfigError):
            load_config(path, ModelConfig)

    def test_missing(self, tmp_path):
        with pytest.raises(NotFoundException):
            load_config(tmp_path / "absent.json", ModelConfig)
