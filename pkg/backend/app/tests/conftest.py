# backend/app/tests/conftest.py
import logging

import numpy as np
import pytest

from app.core.presets import advection_task
from app.schemas.model_config import ModelConfig
from app.schemas.train_config import TrainConfig
from app.services.dataset_service import generate_dataset

logger = logging.getLogger(__name__)


@pytest.hookimpl(tryfirst=True)
def pytest_configure(config):
    config.addinivalue_line("markers", "slow: scaled-down experiments that take minutes")
    logger.info("Pytest configuration complete.")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_advection_task():
    """12 periodic advection samples on an 8x8 (t, x) layout, two ID betas and one OOD beta."""
    task = advection_task(n_samples=12, seed=3, n_x=8, n_t=8)
    return task.model_copy(update={"conditions": {"beta": [0.2, 1.0]}, "ood_conditions": {"beta": [0.5]}})


@pytest.fixture(scope="session")
def small_advection_dataset(small_advection_task):
    dataset = generate_dataset(small_advection_task)
    logger.info(f"Built fixture dataset with {len(dataset)} samples")
    return dataset


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    return ModelConfig(d_feature=16, n_layers=2, n_heads=2, d_head=8, patch=4, d_cond=8, symbol_dim=16)


@pytest.fixture
def tiny_train_config() -> TrainConfig:
    return TrainConfig(batch_size=4, epochs=3, lr_init=1e-3, val_fraction=0.25, seed=7)
