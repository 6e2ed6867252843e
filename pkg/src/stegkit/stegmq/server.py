"""Threaded Unix-domain-socket front end for the broker."""

from __future__ import annotations

import os
import socketserver
import struct
import threading

from .broker import Broker
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


def _status_text(status: dict) -> bytes:
    return "".join(f"{k}={v}\n" for k, v in status.items()).encode("utf-8")


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        broker: Broker = self.server.broker  # type: ignore[attr-defined]
        while True:
            try:
                frame = read_frame(self.rfile)
            except ProtocolError as exc:
                self._error(b"?", str(exc))
                return
            if frame is None:
                return
            opcode, app_id, payload = frame
            try:
                reply = self._dispatch(broker, opcode, app_id, payload)
            except Exception as exc:
                # every failure becomes an error reply; the connection and
                # the broker outlive bad requests
                self._error(app_id, str(exc))
                continue
            self.wfile.write(reply)
            self.wfile.flush()

    def _dispatch(self, broker: Broker, opcode: int, app_id: bytes, payload: bytes) -> bytes:
        app = app_id.decode("utf-8")
        if opcode == OP_PUBLISH:
            count = broker.publish(app, payload)
            return encode_frame(opcode | REPLY_BIT, app_id, pack_count(count))
        if opcode == OP_CONSUME:
            blocks = broker.consume(app, unpack_count(payload))
            return encode_frame(opcode | REPLY_BIT, app_id, pack_chunks(blocks))
        if opcode == OP_DECODE:
            enqueued, skipped = broker.decode_incoming(app, unpack_chunks(payload))
            return encode_frame(
                opcode | REPLY_BIT, app_id, struct.pack(">II", enqueued, skipped)
            )
        if opcode == OP_RETRIEVE:
            msgs = broker.retrieve(app, unpack_count(payload))
            return encode_frame(opcode | REPLY_BIT, app_id, pack_chunks(msgs))
        if opcode == OP_STATUS:
            return encode_frame(
                opcode | REPLY_BIT, app_id, _status_text(broker.status(app))
            )
        raise ProtocolError(f"opcode {opcode:#x} is not a request")

    def _error(self, app_id: bytes, reason: str) -> None:
        if not 1 <= len(app_id) <= 64 or b"\x00" in app_id:
            app_id = b"?"
        try:
            self.wfile.write(encode_frame(OP_ERROR, app_id, reason.encode("utf-8")))
            self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass


class BrokerServer(socketserver.ThreadingMixIn, socketserver.UnixStreamServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, broker: Broker, socket_path: str):
        if os.path.exists(socket_path):
            os.unlink(socket_path)
        super().__init__(socket_path, _Handler)
        self.broker = broker
        self.socket_path = socket_path

    def serve_in_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if os.path.exists(self.socket_path):
            os.unlink(self.socket_path)
