"""Append-only record logs with per-record checksums.

Each record is `length (4, big-endian) | crc32 (4, big-endian) | body`.
Replay stops at the first record whose checksum fails or whose length runs
past the file: the valid prefix is kept, the surplus is moved aside into a
quarantine file, and the log is truncated so later appends extend a clean
prefix.
"""

from __future__ import annotations

import os
import struct
import zlib


class RecordLog:
    """One append-only log file. Appends flush to the OS; pass fsync=True to
    force them to stable storage as well."""

    def __init__(self, path: str, fsync: bool = False):
        self.path = path
        self.fsync = fsync
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        self._fh = open(path, "ab")

    def append(self, body: bytes) -> None:
        rec = struct.pack(">II", len(body), zlib.crc32(body)) + body
        self._fh.write(rec)
        self._fh.flush()
        if self.fsync:
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()

    @staticmethod
    def replay(path: str) -> tuple[list[bytes], int]:
        """Read all valid records; quarantine and drop anything after the
        first corrupt or truncated record. Returns (records, surplus_bytes)."""
        if not os.path.exists(path):
            return [], 0
        with open(path, "rb") as fh:
            data = fh.read()
        records = []
        pos = 0
        while pos + 8 <= len(data):
            length, crc = struct.unpack(">II", data[pos : pos + 8])
            end = pos + 8 + length
            if end > len(data):
                break
            body = data[pos + 8 : end]
            if zlib.crc32(body) != crc:
                break
            records.append(body)
            pos = end
        surplus = len(data) - pos
        if surplus:
            with open(path + ".quarantine", "ab") as qf:
                qf.write(data[pos:])
            with open(path, "rb+") as fh:
                fh.truncate(pos)
        return records, surplus
