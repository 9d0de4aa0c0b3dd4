# backend/app/db/codec.py
"""Little-endian primitives shared by every binary container."""
import struct
from typing import Tuple

import numpy as np

from app.core.exceptions import DimensionError, FormatError, FormatVersionError

DTYPE_CODES = {"f64": 0, "f32": 1}
_NUMPY_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}


class BinaryWriter:
    def __init__(self):
        self._buf = bytearray()

    def getvalue(self) -> bytes:
        return bytes(self._buf)

    def raw(self, data: bytes) -> None:
        self._buf += data

    def u8(self, value: int) -> None:
        self._buf += struct.pack("<B", value)

    def u16(self, value: int) -> None:
        self._buf += struct.pack("<H", value)

    def u32(self, value: int) -> None:
        self._buf += struct.pack("<I", value)

    def f64(self, value: float) -> None:
        self._buf += struct.pack("<d", value)

    def string(self, value: str) -> None:
        data = value.encode("utf-8")
        self.u32(len(data))
        self._buf += data

    def header(self, magic: bytes, version: int) -> None:
        self.raw(magic)
        self.u16(version)

    def array(self, arr: np.ndarray, dtype: str = "f64") -> None:
        """ndim, dims, dtype code, then raw little-endian values."""
        arr = np.asarray(arr)
        if arr.ndim > 255:
            raise DimensionError("array rank too large to store", shapes=[arr.shape])
        self.u8(arr.ndim)
        for size in arr.shape:
            self.u32(size)
        code = DTYPE_CODES[dtype]
        self.u8(code)
        self._buf += np.ascontiguousarray(arr, dtype=_NUMPY_DTYPES[code]).tobytes()


class BinaryReader:
    def __init__(self, data: bytes, kind: str = "file"):
        self._data = data
        self._pos = 0
        self.kind = kind

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise FormatError(f"{self.kind} is truncated at byte {self._pos} (needed {n} more)")
        chunk = self._data[self._pos:self._pos + n]
        self._pos += n
        return chunk

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def _unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self._take(struct.calcsize(fmt)))

    def u8(self) -> int:
        return self._unpack("<B")[0]

    def u16(self) -> int:
        return self._unpack("<H")[0]

    def u32(self) -> int:
        return self._unpack("<I")[0]

    def f64(self) -> float:
        return self._unpack("<d")[0]

    def string(self) -> str:
        raw = self._take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{self.kind} holds an invalid UTF-8 string") from exc

    def header(self, magic: bytes, version: int) -> int:
        found = self._take(len(magic))
        if found != magic:
            raise FormatError(f"not a {self.kind}: magic {found!r}, expected {magic!r}")
        found_version = self.u16()
        if found_version != version:
            raise FormatVersionError(found_version, self.kind)
        return found_version

    def array(self) -> Tuple[np.ndarray, str]:
        """Returns the array as float64 plus the storage dtype name."""
        ndim = self.u8()
        shape = tuple(self.u32() for _ in range(ndim))
        code = self.u8()
        if code not in _NUMPY_DTYPES:
            raise FormatError(f"{self.kind} uses unknown dtype code {code}")
        dtype = _NUMPY_DTYPES[code]
        count = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(self._take(count * dtype.itemsize), dtype=dtype).reshape(shape)
        name = next(k for k, v in DTYPE_CODES.items() if v == code)
        return values.astype(np.float64), name

    def expect_end(self) -> None:
        if self.remaining:
            raise FormatError(f"{self.kind} has {self.remaining} trailing bytes")
