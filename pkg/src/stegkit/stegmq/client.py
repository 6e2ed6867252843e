"""Socket client for the broker's frame protocol."""

from __future__ import annotations

import socket
import struct

from .broker import BrokerError
from .wire import (
    OP_CONSUME,
    OP_DECODE,
    OP_ERROR,
    OP_PUBLISH,
    OP_RETRIEVE,
    OP_STATUS,
    REPLY_BIT,
    ProtocolError,
    encode_frame,
    pack_chunks,
    pack_count,
    read_frame,
    unpack_chunks,
    unpack_count,
)


class BrokerClient:
    """One connection to a broker socket. Not thread-safe; use one per
    thread. Raises BrokerError when the broker replies with an error frame."""

    def __init__(self, socket_path: str):
        self._sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        self._sock.connect(socket_path)
        self._rfile = self._sock.makefile("rb")

    def close(self) -> None:
        self._rfile.close()
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _roundtrip(self, opcode: int, app: str, payload: bytes) -> bytes:
        app_id = app.encode("utf-8")
        self._sock.sendall(encode_frame(opcode, app_id, payload))
        frame = read_frame(self._rfile)
        if frame is None:
            raise ProtocolError("connection closed before reply")
        rop, rapp, rpayload = frame
        if rop == OP_ERROR:
            raise BrokerError(rpayload.decode("utf-8", "replace"))
        if rop != (opcode | REPLY_BIT):
            raise ProtocolError(f"unexpected reply opcode {rop:#x}")
        return rpayload

    def publish(self, app: str, hiddentext: bytes) -> int:
        return unpack_count(self._roundtrip(OP_PUBLISH, app, hiddentext))

    def consume(self, app: str, max_blocks: int = 0xFFFFFFFF) -> list[bytes]:
        return unpack_chunks(self._roundtrip(OP_CONSUME, app, pack_count(max_blocks)))

    def decode(self, app: str, blocks: list[bytes]) -> tuple[int, int]:
        payload = self._roundtrip(OP_DECODE, app, pack_chunks(blocks))
        enqueued, skipped = struct.unpack(">II", payload)
        return enqueued, skipped

    def retrieve(self, app: str, max_messages: int = 0xFFFFFFFF) -> list[bytes]:
        return unpack_chunks(self._roundtrip(OP_RETRIEVE, app, pack_count(max_messages)))

    def status(self, app: str) -> dict[str, str]:
        text = self._roundtrip(OP_STATUS, app, b"").decode("utf-8")
        out = {}
        for line in text.splitlines():
            key, _, val = line.partition("=")
            out[key] = val
        return out
