# backend/app/db/embedding_file.py
"""UEMB table of precomputed symbol vectors: header (magic, version, dim, count), then (symbols, dim f32) records."""
from pathlib import Path
from typing import Dict

import numpy as np

from app.core.exceptions import DimensionError, NotFoundException
from app.db.codec import BinaryReader, BinaryWriter

MAGIC = b"UEMB"
VERSION = 1
KIND = "embedding file"


def encode_embedding_table(table: Dict[str, np.ndarray]) -> bytes:
    dims = {np.asarray(v).shape for v in table.values()}
    if len(dims) > 1:
        raise DimensionError("embedding vectors must share one width", shapes=sorted(dims))
    dim = next(iter(dims))[0] if dims else 0
    w = BinaryWriter()
    w.header(MAGIC, VERSION)
    w.u32(dim)
    w.u32(len(table))
    for symbols in sorted(table):
        w.string(symbols)
        w.raw(np.asarray(table[symbols], dtype="<f4").tobytes())
    return w.getvalue()


def decode_embedding_table(data: bytes) -> Dict[str, np.ndarray]:
    r = BinaryReader(data, KIND)
    r.header(MAGIC, VERSION)
    dim, count = r.u32(), r.u32()
    table = {}
    for _ in range(count):
        symbols = r.string()
        table[symbols] = np.frombuffer(r.raw(4 * dim), dtype="<f4").astype(np.float64)
    r.expect_end()
    return table


def save_embedding_table(path: Path, table: Dict[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_embedding_table(table))
    return path


def load_embedding_table(path: Path) -> Dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise NotFoundException(f"embedding file {path} not found")
    return decode_embedding_table(path.read_bytes())
