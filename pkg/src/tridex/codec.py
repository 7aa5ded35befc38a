"""Varint helpers used by the posting values and the delta wire format."""

from __future__ import annotations

import struct


class DecodeError(ValueError):
    pass


def encode_varint(n: int) -> bytes:
    if n < 0:
        raise ValueError("varint must be non-negative")
    out = bytearray()
    while n >= 0x80:
        out.append((n & 0x7F) | 0x80)
        n >>= 7
    out.append(n)
    return bytes(out)


def zigzag(n: int) -> int:
    return n * 2 if n >= 0 else -n * 2 - 1


def unzigzag(n: int) -> int:
    return n >> 1 if not n & 1 else -((n + 1) >> 1)


def pack_u64(n: int) -> bytes:
    return struct.pack(">Q", n)


def unpack_u64(raw: bytes) -> int:
    return struct.unpack(">Q", raw)[0]


class Reader:
    """Cursor over a byte buffer; every read checks for truncation."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise DecodeError("truncated input")
        chunk = self.data[self.pos : end]
        self.pos = end
        return chunk

    def byte(self) -> int:
        return self.take(1)[0]

    def varint(self) -> int:
        shift = 0
        result = 0
        data = self.data
        while True:
            if self.pos >= len(data):
                raise DecodeError("truncated varint")
            b = data[self.pos]
            self.pos += 1
            result |= (b & 0x7F) << shift
            if not b & 0x80:
                return result
            shift += 7
            if shift > 63:
                raise DecodeError("varint too long")

    def at_end(self) -> bool:
        return self.pos == len(self.data)


def decode_varint(raw: bytes) -> int:
    if len(raw) == 1 and raw[0] < 0x80:
        return raw[0]
    r = Reader(raw)
    n = r.varint()
    if not r.at_end():
        raise DecodeError("trailing bytes after varint")
    return n
