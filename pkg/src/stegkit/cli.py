"""Command-line entry points: stegolab, stegmq, stegctl."""

from __future__ import annotations

import argparse
import random
import sys

from .channel import load_channel, uniform_channel
from .ec import EphemeralKeyChannel, curve_by_name, load_curve
from .stegmq.broker import Broker
from .stegmq.client import BrokerClient
from .stegmq.config import load_config
from .stegmq.server import BrokerServer
from .stegmq.wire import pack_chunks, unpack_chunks
from .warden import (
    EcAdapter,
    IvAdapter,
    UniversalAdapter,
    WardenBudget,
    battery_warden,
    play_game,
    random_message_source,
)


def _read_input(path: str | None) -> bytes:
    if path and path != "-":
        with open(path, "rb") as fh:
            return fh.read()
    return sys.stdin.buffer.read()


def _write_output(path: str | None, data: bytes) -> None:
    if path and path != "-":
        with open(path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)


# -- stegolab ---------------------------------------------------------------------


def stegolab_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="stegolab", description="empirical distinguishing experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    w = sub.add_parser("warden", help="play the distinguishing game against a scheme")
    w.add_argument("--scheme", choices=("iv", "universal", "ec"), required=True)
    w.add_argument("--channel", help="channel definition file (iv/universal)")
    w.add_argument("--curve", help="curve name or parameter file (ec)")
    w.add_argument("--trials", type=int, default=10_000)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--message-bits", type=int, default=32)
    w.add_argument("--out", help="write a machine-readable record file")
    args = parser.parse_args(argv)

    rng = random.Random(args.seed)
    if args.scheme == "iv":
        channel = load_channel(args.channel, args.seed) if args.channel else uniform_channel(128, args.seed)
        if channel.block_size != 128:
            parser.error("iv scheme needs a 128-bit block channel")
        adapter = IvAdapter()
    elif args.scheme == "universal":
        if not args.channel:
            parser.error("universal scheme requires --channel")
        channel = load_channel(args.channel, args.seed)
        adapter = UniversalAdapter()
    else:
        if not args.curve:
            parser.error("ec scheme requires --curve")
        try:
            curve = curve_by_name(args.curve)
        except Exception:
            curve = load_curve(args.curve)
        channel = EphemeralKeyChannel(curve, args.seed)
        adapter = EcAdapter(curve)

    budget = WardenBudget(trials=args.trials)
    report = play_game(
        battery_warden(),
        adapter,
        channel,
        budget,
        random_message_source(args.message_bits),
        rng,
        label=f"scheme={args.scheme} warden=battery",
    )
    print("\n".join(report.lines()))

    # one representative corpus comparison: stego output next to honest output
    from stegkit.channel import History
    from stegkit.stats import battery_records, distinguisher_battery

    session = adapter.fresh_session(rng, channel)
    source = random_message_source(args.message_bits)
    corpus_real = []
    while len(corpus_real) < 512:
        corpus_real.extend(adapter.encode(session, source(rng), History(), channel))
    h = History()
    corpus_ideal = []
    for _ in range(len(corpus_real)):
        b = channel.sample(h)
        corpus_ideal.append(b)
        h = h.extended(b)
    results = distinguisher_battery(corpus_real, corpus_ideal)
    for r in results:
        status = "skipped" if r.skipped else (
            f"p_real={r.p_real:.4g} p_ideal={r.p_ideal:.4g}"
            if r.p_real is not None and r.p_ideal is not None
            else f"p_real={r.p_real} p_ideal={r.p_ideal}"
        )
        print(f"  battery {r.name}: {status}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.record())
            fh.write(battery_records(results))
    return 0


# -- stegmq -----------------------------------------------------------------------


def stegmq_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="stegmq", description="Steg-MQ broker")
    sub = parser.add_subparsers(dest="command", required=True)
    s = sub.add_parser("serve", help="run the broker")
    s.add_argument("--config", required=True)
    args = parser.parse_args(argv)

    config = load_config(args.config)
    broker = Broker(config)
    server = BrokerServer(broker, config.socket_path)
    print(f"stegmq: serving scheme={config.scheme} on {config.socket_path}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
        broker.close()
    return 0


# -- stegctl ----------------------------------------------------------------------


def stegctl_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="stegctl", description="Steg-MQ client")
    parser.add_argument(
        "verb", choices=("publish", "consume", "decode", "retrieve", "status")
    )
    parser.add_argument("--socket", required=True)
    parser.add_argument("--app", required=True)
    parser.add_argument("--in", dest="infile", help="input file (default stdin)")
    parser.add_argument("--out", dest="outfile", help="output file (default stdout)")
    parser.add_argument("--max", type=int, default=0xFFFFFFFF)
    args = parser.parse_args(argv)

    with BrokerClient(args.socket) as client:
        if args.verb == "publish":
            count = client.publish(args.app, _read_input(args.infile))
            print(f"enqueued {count} blocks")
        elif args.verb == "consume":
            blocks = client.consume(args.app, args.max)
            _write_output(args.outfile, pack_chunks(blocks))
            print(f"consumed {len(blocks)} blocks", file=sys.stderr)
        elif args.verb == "decode":
            blocks = unpack_chunks(_read_input(args.infile))
            enqueued, skipped = client.decode(args.app, blocks)
            print(f"decoded {enqueued} hiddentexts ({skipped} skipped)")
        elif args.verb == "retrieve":
            msgs = client.retrieve(args.app, args.max)
            _write_output(args.outfile, pack_chunks(msgs))
            print(f"retrieved {len(msgs)} hiddentexts", file=sys.stderr)
        else:
            for key, val in client.status(args.app).items():
                print(f"{key}={val}")
    return 0
