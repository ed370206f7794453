"""Little-endian binary framing shared by the model and feature-cache
file formats: a 4-byte magic, a u32 version, a format-specific payload,
and a trailing CRC32 over everything before it.

Check order on read: magic before checksum (so a wrong file type is
reported as such even when its checksum happens to be garbage), checksum
before any payload field.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .imgcore import TruncatedPayload


class FormatError(ValueError):
    pass


class BadMagic(FormatError):
    pass


class VersionMismatch(FormatError):
    pass


class ChecksumMismatch(FormatError):
    pass


class ByteWriter:
    def __init__(self):
        self._parts: list[bytes] = []

    def raw(self, data: bytes) -> None:
        self._parts.append(data)

    def u32(self, value: int) -> None:
        self._parts.append(struct.pack("<I", value))

    def u64(self, value: int) -> None:
        self._parts.append(struct.pack("<Q", value))

    def f64(self, value: float) -> None:
        self._parts.append(struct.pack("<d", value))

    def string(self, text: str) -> None:
        encoded = text.encode("utf-8")
        self.u32(len(encoded))
        self.raw(encoded)

    def f64_array(self, values: np.ndarray) -> None:
        self._parts.append(np.ascontiguousarray(values, dtype="<f8").tobytes())

    def f32_array(self, values: np.ndarray) -> None:
        self._parts.append(np.ascontiguousarray(values, dtype="<f4").tobytes())

    def finish(self) -> bytes:
        """Payload plus the CRC32 of everything written so far."""
        payload = b"".join(self._parts)
        return payload + struct.pack("<I", zlib.crc32(payload))


class ByteReader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def take(self, count: int) -> bytes:
        if self._pos + count > len(self._data):
            raise TruncatedPayload(
                f"needed {count} bytes at offset {self._pos}, "
                f"only {len(self._data) - self._pos} remain"
            )
        chunk = self._data[self._pos : self._pos + count]
        self._pos += count
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")

    def f64_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)

    def f32_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype="<f4").astype(np.float32)

    @property
    def exhausted(self) -> bool:
        return self._pos == len(self._data)


def open_checked(data: bytes, magic: bytes, version: int) -> ByteReader:
    """Validate framing and return a reader positioned after the version
    field, covering everything up to (not including) the checksum."""
    if len(data) < len(magic) + 8:  # magic + version + CRC at minimum
        raise TruncatedPayload(f"file holds only {len(data)} bytes")
    if data[: len(magic)] != magic:
        raise BadMagic(f"expected magic {magic!r}, found {data[:len(magic)]!r}")
    stored = struct.unpack("<I", data[-4:])[0]
    actual = zlib.crc32(data[:-4])
    if stored != actual:
        raise ChecksumMismatch(f"stored CRC {stored:#010x}, computed {actual:#010x}")
    reader = ByteReader(data[: -4])
    reader.take(len(magic))
    found = reader.u32()
    if found != version:
        raise VersionMismatch(f"expected version {version}, found {found}")
    return reader
