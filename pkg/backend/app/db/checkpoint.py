# backend/app/db/checkpoint.py
"""
UCKP checkpoint container, version 1.

Header: magic, version, ModelConfig JSON, TrainConfig JSON, epoch, bit-generator
state JSON. Body: parameter count, then (name, float64 array) in sorted name order.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from pydantic import ValidationError

from app.core.exceptions import FormatError, NotFoundException
from app.db.codec import BinaryReader, BinaryWriter
from app.schemas.model_config import ModelConfig
from app.schemas.train_config import TrainConfig

logger = logging.getLogger(__name__)

MAGIC = b"UCKP"
VERSION = 1
KIND = "checkpoint"


@dataclass
class Checkpoint:
    model_config: ModelConfig
    train_config: TrainConfig
    params: Dict[str, np.ndarray]
    epoch: int = 0
    rng_state: Dict[str, Any] = field(default_factory=dict)
    path: Optional[Path] = None


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    w = BinaryWriter()
    w.header(MAGIC, VERSION)
    w.string(ckpt.model_config.model_dump_json())
    w.string(ckpt.train_config.model_dump_json())
    w.u32(ckpt.epoch)
    w.string(json.dumps(ckpt.rng_state, sort_keys=True))
    w.u32(len(ckpt.params))
    for name in sorted(ckpt.params):
        w.string(name)
        w.array(ckpt.params[name], "f64")
    return w.getvalue()


def decode_checkpoint(data: bytes) -> Checkpoint:
    r = BinaryReader(data, KIND)
    r.header(MAGIC, VERSION)
    try:
        model_config = ModelConfig.model_validate_json(r.string())
        train_config = TrainConfig.model_validate_json(r.string())
    except ValidationError as exc:
        raise FormatError(f"{KIND} holds an invalid config snapshot: {exc}") from exc
    epoch = r.u32()
    try:
        rng_state = json.loads(r.string())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{KIND} holds an unreadable rng state") from exc
    params = {}
    for _ in range(r.u32()):
        name = r.string()
        params[name], _ = r.array()
    r.expect_end()
    return Checkpoint(model_config=model_config, train_config=train_config, params=params, epoch=epoch,
                      rng_state=rng_state)


def save_checkpoint(path: Path, ckpt: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(ckpt))
    logger.debug(f"Saved checkpoint for epoch {ckpt.epoch} to {path}")
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise NotFoundException(f"checkpoint {path} not found")
    ckpt = decode_checkpoint(path.read_bytes())
    ckpt.path = path
    return ckpt
