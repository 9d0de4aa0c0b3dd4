# backend/app/tests/db/test_checkpoint.py
import numpy as np
import pytest

from app.core.exceptions import DimensionError, FormatError, FormatVersionError, NotFoundException
from app.db.checkpoint import Checkpoint, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from app.db.embedding_file import (
    decode_embedding_table,
    encode_embedding_table,
    load_embedding_table,
    save_embedding_table,
)
from app.models.unisolver import UnisolverModel
from app.schemas.train_config import TrainConfig
from app.tests.helpers import tiny_config


@pytest.fixture
def checkpoint(rng):
    model = UnisolverModel(tiny_config(), rng)
    return Checkpoint(
        model_config=model.config,
        train_config=TrainConfig(epochs=5, seed=3),
        params=model.state_dict(),
        epoch=4,
        rng_state=rng.bit_generator.state,
    )


class TestCheckpoint:
    def test_round_trip(self, checkpoint, tmp_path):
        path = save_checkpoint(tmp_path / "runs" / "model.uckp", checkpoint)
        loaded = load_checkpoint(path)
        assert loaded.path == path
        assert loaded.model_config == checkpoint.model_config
        assert loaded.train_config == checkpoint.train_config
        assert loaded.epoch == 4
        assert loaded.rng_state == checkpoint.rng_state
        assert loaded.params.keys() == checkpoint.params.keys()
        for name, value in checkpoint.params.items():
            np.testing.assert_array_equal(loaded.params[name], value)

    def test_loads_into_model(self, checkpoint):
        model = UnisolverModel(checkpoint.model_config, np.random.default_rng(99))
        model.load_state_dict(decode_checkpoint(encode_checkpoint(checkpoint)).params)
        np.testing.assert_array_equal(model.state_dict()["head.weight"], checkpoint.params["head.weight"])

    def test_future_version(self, checkpoint):
        data = bytearray(encode_checkpoint(checkpoint))
        data[4:6] = (7).to_bytes(2, "little")
        with pytest.raises(FormatVersionError) as exc:
            decode_checkpoint(bytes(data))
        assert exc.value.message == "checkpoint format version 7 unsupported"

    def test_truncated(self, checkpoint):
        with pytest.raises(FormatError):
            decode_checkpoint(encode_checkpoint(checkpoint)[:40])

    def test_missing(self, tmp_path):
        with pytest.raises(NotFoundException):
            load_checkpoint(tmp_path / "none.uckp")


class TestEmbeddingTable:
    def test_round_trip_in_single_precision(self, tmp_path):
        table = {"u_t + u_x = 0": np.array([0.1, -0.2, 0.3]), "u_t = u_xx": np.array([1.0, 2.0, 3.0])}
        loaded = load_embedding_table(save_embedding_table(tmp_path / "symbols.uemb", table))
        assert loaded.keys() == table.keys()
        np.testing.assert_allclose(loaded["u_t + u_x = 0"], table["u_t + u_x = 0"], rtol=1e-7)
        assert loaded["u_t = u_xx"].dtype == np.float64

    def test_widths_must_agree(self):
        with pytest.raises(DimensionError):
            encode_embedding_table({"a": np.ones(3), "b": np.ones(4)})

    def test_bad_magic(self):
        data = encode_embedding_table({"a": np.ones(2)})
        with pytest.raises(FormatError):
            decode_embedding_table(b"UPDE" + data[4:])
