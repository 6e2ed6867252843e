"""Broker core: per-application stegotext/hiddentext queues wired to one
steganographic scheme, with write-ahead persistence.

Every application owns two FIFO queues. `publish` encodes a hiddentext and
appends the resulting blocks to the stegotext queue; `consume` hands blocks
to whatever transports them; `decode_incoming` runs the decoder on received
blocks and appends the recovered hiddentext; `retrieve` hands hiddentexts
back. One decode call corresponds to the block batch of one publish.

Counter advances are logged before any block is emitted, so a crash can lose
a message but can never replay a counter value. Queue mutations are logged
as append/pop records; recovery replays the valid log prefix.
"""

from __future__ import annotations

import itertools
import os
import struct
import threading
from dataclasses import dataclass

from ..bitutil import bits_to_bytes, bytes_to_bits, pack_bits, unpack_bits
from ..channel import CoverBlock, History, load_channel
from ..crypto import CounterState, load_key
from ..ec import (
    EcStegoSession,
    NotAStegotextError,
    curve_by_name,
    decode_point,
    encode_point,
    load_curve,
    sd_ec,
    se_ec,
)
from ..iv import IvStegoSession, iv_block_count, sd_iv, se_iv, unpad_message
from ..universal import EccSpec, UniversalStegoSession, sd_universal, se_universal
from .config import BrokerConfig
from .wal import RecordLog
from .wire import check_app_id


class BrokerError(Exception):
    pass


class UnknownAppError(BrokerError):
    pass


class BackpressureError(BrokerError):
    """Queue would exceed its depth limit; nothing was enqueued."""


class DecodeError(BrokerError):
    pass


@dataclass(frozen=True)
class QueueRecord:
    seq: int
    direction: str  # "stego-out" | "hidden-in"
    payload: bytes
    created_at: int


OUTBOUND = "stego-out"
INBOUND = "hidden-in"

_REC_COUNTER = 0x43  # 'C'
_REC_APPEND = 0x41   # 'A'
_REC_POP = 0x50      # 'P'


class _PersistentQueue:
    """In-memory FIFO backed by append/pop records in a shared log."""

    def __init__(self, direction: str, log: RecordLog):
        self.direction = direction
        self.log = log
        self.records: list[QueueRecord] = []
        self.next_seq = 0

    def restore(self, appended: list[QueueRecord], popped: int) -> None:
        if appended:
            self.next_seq = appended[-1].seq + 1
        self.records = appended[popped:]

    @property
    def depth(self) -> int:
        return len(self.records)

    def append(self, payload: bytes, created_at: int) -> QueueRecord:
        rec = QueueRecord(self.next_seq, self.direction, payload, created_at)
        self.next_seq += 1
        body = struct.pack(">BQQ", _REC_APPEND, rec.seq, rec.created_at) + payload
        self.log.append(body)
        self.records.append(rec)
        return rec

    def pop(self, limit: int) -> list[QueueRecord]:
        limit = min(limit, len(self.records))
        if limit <= 0:
            return []
        out = self.records[:limit]
        self.records = self.records[limit:]
        self.log.append(struct.pack(">BQ", _REC_POP, limit))
        return out


def _replay_log(path: str) -> tuple[list[QueueRecord], int, int, str]:
    """Returns (appended records, popped count, restored counter, direction
    placeholder). Caller patches direction into records."""
    bodies, _ = RecordLog.replay(path)
    appended: list[QueueRecord] = []
    popped = 0
    counter = 0
    for body in bodies:
        if body[0] == _REC_COUNTER:
            counter = max(counter, struct.unpack(">Q", body[1:9])[0])
        elif body[0] == _REC_APPEND:
            seq, created = struct.unpack(">QQ", body[1:17])
            appended.append(QueueRecord(seq, "", body[17:], created))
        elif body[0] == _REC_POP:
            popped += struct.unpack(">Q", body[1:9])[0]
    return appended, popped, counter, path


# -- scheme plumbing --------------------------------------------------------------


class _IvOps:
    name = "iv"

    def __init__(self, cfg: BrokerConfig):
        self.block_bits = cfg.block_bits
        self.key = load_key(cfg.key_file, expect_bits=cfg.block_bits)

    def make_session(self, counter_value: int):
        return IvStegoSession(self.key, CounterState(counter_value), self.block_bits)

    def block_count(self, payload: bytes) -> int:
        return iv_block_count(8 * len(payload), self.block_bits)

    def encode_cost(self, payload: bytes) -> int:
        return self.block_count(payload)

    def encode(self, app: "_App", payload: bytes) -> list[bytes]:
        blocks = se_iv(app.out_session, bytes_to_bits(payload))
        return [bits_to_bytes(b.bits) for b in blocks]

    def validate_blocks(self, blocks: list[bytes]) -> None:
        want = self.block_bits // 8
        for b in blocks:
            if len(b) != want:
                raise DecodeError(f"block of {8 * len(b)} bits, expected {self.block_bits}")

    def decode_cost(self, blocks: list[bytes]) -> int:
        return len(blocks)

    def decode(self, app: "_App", blocks: list[bytes]) -> tuple[bytes | None, int]:
        bits = sd_iv(app.in_session, [bytes_to_bits(b) for b in blocks])
        if len(bits) % 8:
            raise DecodeError("decoded payload is not byte aligned")
        return bits_to_bytes(bits), 0


class _UniversalOps:
    name = "universal"

    def __init__(self, cfg: BrokerConfig):
        self.key = load_key(cfg.key_file, expect_bits=128)
        self.ecc = EccSpec(repeat=cfg.rho)
        self.channel_file = cfg.channel_file
        self.channel_seed = cfg.channel_seed
        probe = load_channel(cfg.channel_file, cfg.channel_seed)
        if probe.block_size is None:
            raise BrokerError("universal scheme requires a fixed-block channel")
        self.block_size = probe.block_size
        self.wire_len = 8 + (self.block_size + 7) // 8

    def make_session(self, counter_value: int):
        channel = load_channel(self.channel_file, self.channel_seed)
        return UniversalStegoSession(
            self.key, CounterState(counter_value), channel, self.ecc
        )

    def block_count(self, payload: bytes) -> int:
        return 8 * len(payload) * self.ecc.repeat

    encode_cost = block_count

    def encode(self, app: "_App", payload: bytes) -> list[bytes]:
        blocks = se_universal(app.out_session, bytes_to_bits(payload), app.out_history)
        for b in blocks:
            app.out_history = app.out_history.extended(b)
        return [
            struct.pack(">Q", b.timestamp) + pack_bits(b.bits) for b in blocks
        ]

    def validate_blocks(self, blocks: list[bytes]) -> None:
        for b in blocks:
            if len(b) != self.wire_len:
                raise DecodeError(f"block of {len(b)} bytes, expected {self.wire_len}")
        unit = 8 * self.ecc.repeat  # one payload byte per 8*rho blocks
        if not blocks or len(blocks) % unit:
            raise DecodeError(
                f"{len(blocks)} blocks is not a whole number of {unit}-block bytes"
            )

    def decode_cost(self, blocks: list[bytes]) -> int:
        return len(blocks)

    def decode(self, app: "_App", blocks: list[bytes]) -> tuple[bytes | None, int]:
        cover = []
        for b in blocks:
            (tick,) = struct.unpack(">Q", b[:8])
            cover.append(
                CoverBlock(unpack_bits(b[8:], self.block_size), {"timestamp": tick})
            )
        bits = sd_universal(app.in_session, cover)
        if len(bits) % 8:
            raise DecodeError("decoded payload is not byte aligned")
        return bits_to_bytes(bits), 0


class _EcOps:
    name = "ec"

    def __init__(self, cfg: BrokerConfig):
        self.key = load_key(cfg.key_file, expect_bits=128)
        self.curve = load_curve(cfg.curve_file) if cfg.curve_file else curve_by_name(cfg.curve)
        self.r = cfg.r
        self.point_len = 1 + 2 * self.curve.field_bytes

    def make_session(self, counter_value: int):
        return EcStegoSession(self.key, CounterState(counter_value), self.curve, self.r)

    def _words(self, payload: bytes) -> list[int]:
        bits = bytes_to_bits(payload) + "1"
        bits += "0" * (-len(bits) % self.r)
        return [int(bits[i : i + self.r], 2) for i in range(0, len(bits), self.r)]

    def block_count(self, payload: bytes) -> int:
        return (8 * len(payload) + 1 + self.r - 1) // self.r

    def encode_cost(self, payload: bytes) -> int:
        return self.block_count(payload) << self.r

    def encode(self, app: "_App", payload: bytes) -> list[bytes]:
        out = []
        for word in self._words(payload):
            _, Q = se_ec(app.out_session, word)
            out.append(encode_point(Q, self.curve))
        return out

    def validate_blocks(self, blocks: list[bytes]) -> None:
        if not blocks:
            raise DecodeError("empty block batch")
        for b in blocks:
            if len(b) != self.point_len:
                raise DecodeError(f"point of {len(b)} bytes, expected {self.point_len}")
            decode_point(b, self.curve)  # off-curve input must not touch the session

    def decode_cost(self, blocks: list[bytes]) -> int:
        return len(blocks) << self.r

    def decode(self, app: "_App", blocks: list[bytes]) -> tuple[bytes | None, int]:
        words = []
        skipped = 0
        for b in blocks:
            try:
                words.append(sd_ec(app.in_session, decode_point(b, self.curve)))
            except NotAStegotextError:
                skipped += 1
        if skipped or not words:
            return None, skipped
        bits = unpad_message("".join(format(w, f"0{self.r}b") for w in words))
        if len(bits) % 8:
            return None, skipped
        return bits_to_bytes(bits), skipped


_SCHEME_OPS = {"iv": _IvOps, "universal": _UniversalOps, "ec": _EcOps}


# -- the broker --------------------------------------------------------------------


class _App:
    def __init__(self, name: str, root: str, ops, counter_start: int, fsync: bool):
        self.name = name
        self.lock = threading.RLock()
        self.dir = os.path.join(root, name.encode("utf-8").hex())
        self.out_log = RecordLog(os.path.join(self.dir, "out.log"), fsync)
        self.in_log = RecordLog(os.path.join(self.dir, "in.log"), fsync)
        self.stego = _PersistentQueue(OUTBOUND, self.out_log)
        self.hidden = _PersistentQueue(INBOUND, self.in_log)
        self.out_history = History()
        self.skips = 0

        out_recs, out_popped, out_counter, _ = _replay_log(os.path.join(self.dir, "out.log"))
        in_recs, in_popped, in_counter, _ = _replay_log(os.path.join(self.dir, "in.log"))
        self.stego.restore(
            [QueueRecord(r.seq, OUTBOUND, r.payload, r.created_at) for r in out_recs],
            out_popped,
        )
        self.hidden.restore(
            [QueueRecord(r.seq, INBOUND, r.payload, r.created_at) for r in in_recs],
            in_popped,
        )
        self.out_session = ops.make_session(max(counter_start, out_counter))
        self.in_session = ops.make_session(max(counter_start, in_counter))

    def log_counter(self, direction: str, value_after: int) -> None:
        log = self.out_log if direction == OUTBOUND else self.in_log
        log.append(struct.pack(">BQ", _REC_COUNTER, value_after))

    def close(self) -> None:
        self.out_log.close()
        self.in_log.close()


class Broker:
    """Thread-safe queue service over one configured scheme.

    Applications are registered implicitly by the writing verbs (publish and
    decode); consume/retrieve/status on an unknown application fail.
    """

    def __init__(self, config: BrokerConfig):
        config.validate()
        self.config = config
        self.ops = _SCHEME_OPS[config.scheme](config)
        self._apps: dict[str, _App] = {}
        self._registry = threading.Lock()
        self._tick = itertools.count()
        os.makedirs(config.persistence_dir, exist_ok=True)
        for entry in sorted(os.listdir(config.persistence_dir)):
            path = os.path.join(config.persistence_dir, entry)
            if os.path.isdir(path):
                try:
                    name = bytes.fromhex(entry).decode("utf-8")
                except ValueError:
                    continue
                self._apps[name] = _App(
                    name, config.persistence_dir, self.ops,
                    config.counter_start, config.fsync,
                )

    # -- application registry ----------------------------------------------------

    def _app(self, name: str, create: bool) -> _App:
        check_app_id(name.encode("utf-8"))
        with self._registry:
            if name not in self._apps:
                if not create:
                    raise UnknownAppError(f"unknown application {name!r}")
                self._apps[name] = _App(
                    name, self.config.persistence_dir, self.ops,
                    self.config.counter_start, self.config.fsync,
                )
            return self._apps[name]

    def apps(self) -> list[str]:
        with self._registry:
            return sorted(self._apps)

    # -- verbs ---------------------------------------------------------------------

    @staticmethod
    def _advanced(counter, cost: int) -> int:
        """Counter value after consuming `cost`; rejects overflow before
        anything is logged or encoded."""
        after = counter.value + cost
        if after > (1 << counter.width) - 1:
            raise BrokerError(
                f"counter space exhausted (need {cost} more values); rekey required"
            )
        return after

    def publish(self, app_name: str, hiddentext: bytes) -> int:
        """Encode a hiddentext; enqueue all resulting blocks or nothing."""
        if not hiddentext:
            raise BrokerError("empty hiddentext")
        app = self._app(app_name, create=True)
        with app.lock:
            nblocks = self.ops.block_count(hiddentext)
            if app.stego.depth + nblocks > self.config.max_queue_depth:
                raise BackpressureError(
                    f"stegotext queue would exceed {self.config.max_queue_depth}"
                )
            counter_after = self._advanced(
                app.out_session.counter, self.ops.encode_cost(hiddentext)
            )
            app.log_counter(OUTBOUND, counter_after)
            blocks = self.ops.encode(app, hiddentext)
            for b in blocks:
                app.stego.append(b, next(self._tick))
            return len(blocks)

    def consume(self, app_name: str, max_blocks: int) -> list[bytes]:
        """Dequeue up to max_blocks stegotext blocks, FIFO, non-blocking."""
        app = self._app(app_name, create=False)
        with app.lock:
            return [r.payload for r in app.stego.pop(max_blocks)]

    def decode_incoming(self, app_name: str, blocks: list[bytes]) -> tuple[int, int]:
        """Decode one published unit's blocks; returns (enqueued, skipped)."""
        app = self._app(app_name, create=True)
        with app.lock:
            if not blocks:
                raise DecodeError("empty block batch")
            self.ops.validate_blocks(blocks)
            if app.hidden.depth + 1 > self.config.max_queue_depth:
                raise BackpressureError(
                    f"hiddentext queue would exceed {self.config.max_queue_depth}"
                )
            counter_after = self._advanced(
                app.in_session.counter, self.ops.decode_cost(blocks)
            )
            app.log_counter(INBOUND, counter_after)
            payload, skipped = self.ops.decode(app, blocks)
            app.skips += skipped
            if payload is None:
                return 0, skipped
            app.hidden.append(payload, next(self._tick))
            return 1, skipped

    def retrieve(self, app_name: str, max_messages: int) -> list[bytes]:
        """Dequeue up to max_messages decoded hiddentexts, FIFO, non-blocking."""
        app = self._app(app_name, create=False)
        with app.lock:
            return [r.payload for r in app.hidden.pop(max_messages)]

    def status(self, app_name: str) -> dict[str, int | str]:
        app = self._app(app_name, create=False)
        with app.lock:
            return {
                "app": app.name,
                "scheme": self.ops.name,
                "stego_depth": app.stego.depth,
                "hidden_depth": app.hidden.depth,
                "stego_next_seq": app.stego.next_seq,
                "hidden_next_seq": app.hidden.next_seq,
                "out_counter": app.out_session.counter.value,
                "in_counter": app.in_session.counter.value,
                "skips": app.skips,
            }

    def close(self) -> None:
        with self._registry:
            for app in self._apps.values():
                app.close()
