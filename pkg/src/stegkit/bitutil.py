"""Bit-string helpers shared across the toolkit.

Bit strings are plain Python strings of '0'/'1' characters, most significant
bit first. Byte conversions use big-endian bit order within each byte.
"""

from __future__ import annotations


def check_bits(bits: str) -> str:
    """Validate a bit string and return it unchanged."""
    if not isinstance(bits, str) or bits.strip("01") != "":
        raise ValueError(f"not a bit string: {bits!r}")
    return bits


def bits_to_int(bits: str) -> int:
    return int(bits, 2) if bits else 0


def int_to_bits(value: int, width: int) -> str:
    if value < 0 or value >> width:
        raise ValueError(f"value {value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""


def bits_to_bytes(bits: str) -> bytes:
    """Pack a bit string whose length is a multiple of 8 into bytes."""
    if len(bits) % 8:
        raise ValueError(f"bit length {len(bits)} is not a multiple of 8")
    return bits_to_int(bits).to_bytes(len(bits) // 8, "big") if bits else b""


def bytes_to_bits(data: bytes) -> str:
    return int_to_bits(int.from_bytes(data, "big"), 8 * len(data)) if data else ""


def pack_bits(bits: str) -> bytes:
    """Pack an arbitrary-length bit string, zero-padding the final byte."""
    pad = (-len(bits)) % 8
    return bits_to_bytes(bits + "0" * pad)


def unpack_bits(data: bytes, nbits: int) -> str:
    if len(data) != (nbits + 7) // 8:
        raise ValueError(f"{len(data)} bytes cannot hold exactly {nbits} bits")
    return bytes_to_bits(data)[:nbits]


def xor_bits(a: str, b: str) -> str:
    if len(a) != len(b):
        raise ValueError("xor of unequal bit lengths")
    return int_to_bits(bits_to_int(a) ^ bits_to_int(b), len(a))
