"""
Binary parameter file format.

Byte layout (all integers little-endian):

    magic           8 bytes   b"RGPARAMS"
    version         u16
    metadata_len    u32
    metadata        metadata_len bytes (opaque to this layer, UTF-8 JSON by convention)
    count           u32
    count x entry:
        name_len    u16
        name        name_len bytes UTF-8
        ndim        u8
        shape       ndim x u32
        data        prod(shape) x float64 little-endian, row-major
    crc32           u32 over every preceding byte
"""
import math
import struct
import zlib
from collections import OrderedDict
from pathlib import Path
from typing import Mapping, Tuple, Union

import numpy as np

from app.core.errors import (
    ContractError,
    FileChecksumError,
    FileFormatError,
    FileTruncatedError,
    FileVersionError,
)

PARAMS_MAGIC = b"RGPARAMS"
PARAMS_VERSION = 1
FLOAT_LE = np.dtype("<f8")


class ByteReader:
    """Sequential reader that reports truncation instead of returning short reads."""

    def __init__(self, buffer: bytes, what: str = "file"):
        self.buffer = buffer
        self.offset = 0
        self.what = what

    def take(self, n: int) -> bytes:
        end = self.offset + n
        if n < 0 or end > len(self.buffer):
            raise FileTruncatedError(
                f"{self.what} is truncated: needed {n} bytes at offset {self.offset}, "
                f"{len(self.buffer) - self.offset} left"
            )
        chunk = self.buffer[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count * FLOAT_LE.itemsize), dtype=FLOAT_LE).astype(np.float64)

    @property
    def remaining(self) -> int:
        return len(self.buffer) - self.offset

    def expect(self, n: int, what: str) -> None:
        """Fail before allocating when a header promises more bytes than are left."""
        if n > self.remaining:
            raise FileTruncatedError(f"{self.what} is truncated: {what} needs {n} bytes, {self.remaining} left")


def verify_checksum(reader: ByteReader) -> None:
    """Check the CRC32 trailer that must follow the parsed payload exactly."""
    covered = reader.offset
    (stored,) = reader.unpack("<I")
    if reader.remaining:
        raise FileFormatError(f"{reader.what} has {reader.remaining} trailing bytes")
    if zlib.crc32(reader.buffer[:covered]) & 0xFFFFFFFF != stored:
        raise FileChecksumError(f"{reader.what} checksum mismatch")


def with_checksum(payload: bytes) -> bytes:
    return payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)


def check_magic(reader: ByteReader, magic: bytes, versions: Tuple[int, ...]) -> int:
    found = reader.take(len(magic))
    if found != magic:
        raise FileFormatError(f"{reader.what} has bad magic {found!r}, expected {magic!r}")
    (version,) = reader.unpack("<H")
    if version not in versions:
        raise FileVersionError(f"{reader.what} version {version} not supported (supported: {versions})")
    return version


def encode_parameters(arrays: Mapping[str, np.ndarray], metadata: bytes = b"") -> bytes:
    parts = [PARAMS_MAGIC, struct.pack("<HI", PARAMS_VERSION, len(metadata)), metadata]
    parts.append(struct.pack("<I", len(arrays)))
    for name, array in arrays.items():
        array = np.asarray(array, dtype=np.float64)
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF or array.ndim > 0xFF:
            raise ContractError(f"parameter {name!r} cannot be encoded")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack(f"<B{array.ndim}I", array.ndim, *array.shape))
        parts.append(np.ascontiguousarray(array, dtype=FLOAT_LE).tobytes())
    return with_checksum(b"".join(parts))


def decode_parameters(buffer: bytes) -> Tuple["OrderedDict[str, np.ndarray]", bytes]:
    """
    Decode a parameter file.

    Returns:
        (ordered name -> array mapping, metadata bytes)

    Raises:
        FileFormatError, FileVersionError, FileTruncatedError, FileChecksumError
    """
    reader = ByteReader(buffer, "parameter file")
    check_magic(reader, PARAMS_MAGIC, (PARAMS_VERSION,))
    (metadata_len,) = reader.unpack("<I")
    metadata = reader.take(metadata_len)
    (count,) = reader.unpack("<I")

    arrays: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        (ndim,) = reader.unpack("<B")
        shape = reader.unpack(f"<{ndim}I")
        size = math.prod(shape)
        arrays[name] = reader.floats(size).reshape(shape)
    verify_checksum(reader)
    return arrays, metadata


def save_parameters(path: Union[str, Path], arrays: Mapping[str, np.ndarray], metadata: bytes = b"") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_parameters(arrays, metadata))


def load_parameters(path: Union[str, Path]) -> Tuple["OrderedDict[str, np.ndarray]", bytes]:
    return decode_parameters(Path(path).read_bytes())
