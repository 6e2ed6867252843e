"""Binary frame format spoken over the broker socket.

    frame = 0x53 0x4D ("SM") | version 0x01 | opcode | app-id length (1)
          | app-id bytes | payload length (4, big-endian) | payload

Requests use opcodes 0x01..0x05; replies echo the opcode with the high bit
set (0x81..0x85); error replies use opcode 0x7F with a UTF-8 reason payload.
App ids are 1..64 bytes of UTF-8 without NUL.
"""

from __future__ import annotations

import struct

MAGIC = b"SM"
VERSION = 0x01

OP_PUBLISH = 0x01
OP_CONSUME = 0x02
OP_DECODE = 0x03
OP_RETRIEVE = 0x04
OP_STATUS = 0x05
OP_ERROR = 0x7F
REPLY_BIT = 0x80

_REQUEST_OPS = {OP_PUBLISH, OP_CONSUME, OP_DECODE, OP_RETRIEVE, OP_STATUS}
_VALID_OPS = _REQUEST_OPS | {op | REPLY_BIT for op in _REQUEST_OPS} | {OP_ERROR}

MAX_APP_ID = 64
MAX_PAYLOAD = 1 << 28


class ProtocolError(Exception):
    pass


def check_app_id(app_id: bytes) -> bytes:
    if not isinstance(app_id, bytes):
        raise ProtocolError("app id must be bytes")
    if not 1 <= len(app_id) <= MAX_APP_ID:
        raise ProtocolError(f"app id length {len(app_id)} outside 1..{MAX_APP_ID}")
    if b"\x00" in app_id:
        raise ProtocolError("app id contains NUL")
    try:
        app_id.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProtocolError("app id is not UTF-8") from exc
    return app_id


def encode_frame(opcode: int, app_id: bytes, payload: bytes = b"") -> bytes:
    if opcode not in _VALID_OPS:
        raise ProtocolError(f"unknown opcode {opcode:#x}")
    check_app_id(app_id)
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError("payload too large")
    return (
        MAGIC
        + bytes([VERSION, opcode, len(app_id)])
        + app_id
        + struct.pack(">I", len(payload))
        + payload
    )


def decode_frame(data: bytes) -> tuple[int, bytes, bytes]:
    """Decode one complete frame; raises on malformed or trailing bytes."""
    opcode, app_id, payload, used = decode_frame_prefix(data)
    if used != len(data):
        raise ProtocolError(f"{len(data) - used} trailing bytes after frame")
    return opcode, app_id, payload


def decode_frame_prefix(data: bytes) -> tuple[int, bytes, bytes, int]:
    """Decode a frame from the start of `data`; returns bytes consumed too."""
    if len(data) < 5:
        raise ProtocolError("frame shorter than fixed header")
    if data[:2] != MAGIC:
        raise ProtocolError("bad magic")
    if data[2] != VERSION:
        raise ProtocolError(f"unsupported version {data[2]}")
    opcode = data[3]
    if opcode not in _VALID_OPS:
        raise ProtocolError(f"unknown opcode {opcode:#x}")
    alen = data[4]
    if len(data) < 5 + alen + 4:
        raise ProtocolError("truncated frame")
    app_id = check_app_id(data[5 : 5 + alen])
    (plen,) = struct.unpack(">I", data[5 + alen : 9 + alen])
    end = 9 + alen + plen
    if len(data) < end:
        raise ProtocolError("truncated payload")
    return opcode, app_id, data[9 + alen : end], end


def read_frame(stream) -> tuple[int, bytes, bytes] | None:
    """Read one frame from a file-like stream; None on clean EOF."""
    head = stream.read(5)
    if not head:
        return None
    if len(head) < 5:
        raise ProtocolError("connection closed mid-header")
    if head[:2] != MAGIC or head[2] != VERSION:
        raise ProtocolError("bad magic or version")
    opcode = head[3]
    if opcode not in _VALID_OPS:
        raise ProtocolError(f"unknown opcode {opcode:#x}")
    alen = head[4]
    rest = stream.read(alen + 4)
    if len(rest) < alen + 4:
        raise ProtocolError("connection closed mid-frame")
    app_id = check_app_id(rest[:alen])
    (plen,) = struct.unpack(">I", rest[alen:])
    if plen > MAX_PAYLOAD:
        raise ProtocolError("payload too large")
    payload = stream.read(plen) if plen else b""
    if len(payload) < plen:
        raise ProtocolError("connection closed mid-payload")
    return opcode, app_id, payload


# -- payload sub-formats ---------------------------------------------------------


def pack_count(n: int) -> bytes:
    return struct.pack(">I", n)


def unpack_count(payload: bytes) -> int:
    if len(payload) != 4:
        raise ProtocolError(f"expected a 4-byte count, got {len(payload)} bytes")
    return struct.unpack(">I", payload)[0]


def pack_chunks(chunks: list[bytes]) -> bytes:
    """Length-prefixed concatenation used for block and hiddentext lists."""
    return b"".join(struct.pack(">I", len(c)) + c for c in chunks)


def unpack_chunks(payload: bytes) -> list[bytes]:
    chunks = []
    pos = 0
    while pos < len(payload):
        if pos + 4 > len(payload):
            raise ProtocolError("truncated chunk length")
        (clen,) = struct.unpack(">I", payload[pos : pos + 4])
        pos += 4
        if pos + clen > len(payload):
            raise ProtocolError("truncated chunk")
        chunks.append(payload[pos : pos + clen])
        pos += clen
    return chunks
