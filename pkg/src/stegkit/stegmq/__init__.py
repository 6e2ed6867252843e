"""Steg-MQ: a local steganographic message-queue broker.

Applications publish hiddentexts, consume cover-conforming stegotext blocks
for transmission, feed incoming stegotexts back for decoding, and retrieve
the recovered hiddentexts. Queues are per-application and per-direction,
persisted in append-only checksummed logs, and served over a local stream
socket with a fixed binary frame format.
"""

from .broker import Broker, BrokerError
from .config import BrokerConfig, load_config, parse_config
from .wire import (
    OP_CONSUME,
    OP_DECODE,
    OP_ERROR,
    OP_PUBLISH,
    OP_RETRIEVE,
    OP_STATUS,
    ProtocolError,
    decode_frame,
    encode_frame,
)

__all__ = [
    "Broker",
    "BrokerError",
    "BrokerConfig",
    "load_config",
    "parse_config",
    "encode_frame",
    "decode_frame",
    "ProtocolError",
    "OP_PUBLISH",
    "OP_CONSUME",
    "OP_DECODE",
    "OP_RETRIEVE",
    "OP_STATUS",
    "OP_ERROR",
]
