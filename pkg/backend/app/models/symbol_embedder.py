# backend/app/models/symbol_embedder.py
"""
Equation-symbol embedders.

The hashed embedder is the default: a bag of LaTeX lexemes and lexeme bigrams,
each hashed into a fixed number of buckets. The precomputed embedder looks up
vectors produced offline (for example mean-pooled language-model states) from a
UEMB table.
"""
import hashlib
import logging
import re
from typing import Dict, Iterable, List

import numpy as np

from app.core.exceptions import ConfigError, DimensionError, NotFoundException

logger = logging.getLogger(__name__)

# control words, single letters, numbers, then any other non-space character
_LEXEME = re.compile(r"\\[A-Za-z]+|[A-Za-z]|\d+(?:\.\d+)?|\S")


def tokenize_symbols(symbols: str) -> List[str]:
    return _LEXEME.findall(symbols)


def _bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % dim


class HashedSymbolEmbedder:
    mode = "hashed"

    def __init__(self, dim: int = 64):
        if dim < 1:
            raise ConfigError(f"embedding width must be positive, got {dim}")
        self.dim = dim

    def __call__(self, symbols: str) -> np.ndarray:
        tokens = tokenize_symbols(symbols)
        if not tokens:
            raise ConfigError("cannot embed an empty symbols string")
        grams = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
        vec = np.zeros(self.dim)
        for gram in grams:
            vec[_bucket(gram, self.dim)] += 1.0
        return vec / np.linalg.norm(vec)


class PrecomputedSymbolEmbedder:
    mode = "precomputed"

    def __init__(self, table: Dict[str, np.ndarray]):
        if not table:
            raise ConfigError("precomputed symbol table is empty")
        dims = {np.asarray(v).shape for v in table.values()}
        if len(dims) != 1 or len(next(iter(dims))) != 1:
            raise DimensionError("precomputed symbol vectors must share one width", shapes=sorted(dims))
        self.table = {key: np.asarray(value, dtype=np.float64) for key, value in table.items()}
        self.dim = next(iter(dims))[0]

    def __call__(self, symbols: str) -> np.ndarray:
        if not symbols.strip():
            raise ConfigError("cannot embed an empty symbols string")
        try:
            return self.table[symbols].copy()
        except KeyError:
            raise NotFoundException(f"no precomputed embedding for symbols '{symbols}'") from None

    def check_coverage(self, symbols: Iterable[str]) -> None:
        missing = sorted(set(symbols) - set(self.table))
        if missing:
            raise NotFoundException(f"no precomputed embedding for symbols {missing}")


_default_embedder = HashedSymbolEmbedder()


def embed_symbols(symbols: str, embedder=None) -> np.ndarray:
    """Embed one symbols string with `embedder`, or the 64-wide hashed embedder when none is given."""
    return (embedder or _default_embedder)(symbols)
