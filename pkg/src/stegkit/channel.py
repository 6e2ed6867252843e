"""Cover-channel models: timestamped blocks, histories, and sampling oracles.

A channel is a conditional distribution over the next cover block given the
history of blocks already emitted. Every block carries integer labels; the
mandatory `timestamp` label is an abstract tick, not wall-clock time. The
sampler owns a monotone tick counter and stamps each draw with a fresh tick,
so two draws made while deciding one position are distinguishable objects
even when their bit contents collide.

Channel randomness comes from `random.Random` seeded at construction, which
keeps every experiment reproducible; cryptographic randomness lives in
`stegkit.crypto` only.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .bitutil import check_bits

TIMESTAMP = "timestamp"

# Safety valve for view rejection sampling; the exact emptiness check below
# guarantees termination for every shipped channel long before this.
_MAX_VIEW_TRIES = 100_000


class ChannelError(Exception):
    """Base class for channel contract violations."""


class MonotonicityError(ChannelError):
    """History timestamps decreased."""


class EmptyViewError(ChannelError):
    """A view's bit budget excludes every sequence in the support."""


class UnsupportedChannelOperation(ChannelError):
    """Operation requires an enumerable finite-support channel."""


@dataclass(frozen=True)
class CoverBlock:
    """One channel symbol: a bit string plus integer labels.

    `labels` always contains `timestamp`. For fixed-block channels `bits`
    has exactly the channel's block size.
    """

    bits: str
    labels: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        check_bits(self.bits)
        if TIMESTAMP not in self.labels:
            raise ValueError("CoverBlock requires a timestamp label")

    @property
    def timestamp(self) -> int:
        return self.labels[TIMESTAMP]

    def encode(self) -> str:
        """Canonical text encoding of bits plus sorted labels."""
        tags = ",".join(f"{k}={v}" for k, v in sorted(self.labels.items()))
        return f"{self.bits}|{tags}"


def block(bits: str, timestamp: int, **labels: int) -> CoverBlock:
    """Convenience constructor."""
    return CoverBlock(bits, {TIMESTAMP: timestamp, **labels})


class History:
    """Ordered block sequence with non-decreasing timestamps.

    Histories share storage structurally: `extended` is O(1) when growing
    the newest version (the common encoder pattern) and copies only when
    branching off an older prefix.
    """

    __slots__ = ("_store", "_len")

    def __init__(self, blocks: list[CoverBlock] | None = None):
        self._store: list[CoverBlock] = []
        self._len = 0
        for b in blocks or []:
            self.append(b)

    def _check_next(self, b: CoverBlock) -> None:
        if self._len and b.timestamp < self._store[self._len - 1].timestamp:
            raise MonotonicityError(
                f"timestamp {b.timestamp} precedes "
                f"{self._store[self._len - 1].timestamp}"
            )

    def append(self, b: CoverBlock) -> None:
        self._check_next(b)
        if self._len != len(self._store):
            self._store = self._store[: self._len]
        self._store.append(b)
        self._len += 1

    def extended(self, b: CoverBlock) -> "History":
        self._check_next(b)
        h = History.__new__(History)
        if self._len == len(self._store):
            self._store.append(b)
            h._store = self._store
        else:
            h._store = self._store[: self._len] + [b]
        h._len = self._len + 1
        return h

    @property
    def blocks(self) -> tuple[CoverBlock, ...]:
        return tuple(self._store[: self._len])

    @property
    def last_timestamp(self) -> int:
        return self._store[self._len - 1].timestamp if self._len else -1

    @property
    def last_bits(self) -> str | None:
        return self._store[self._len - 1].bits if self._len else None

    def __len__(self) -> int:
        return self._len


@dataclass(frozen=True)
class ChannelView:
    """Restriction of the next `horizon` draws to sequences whose total
    binary length is strictly below `bit_budget`."""

    horizon: int
    bit_budget: int


class ChannelModel:
    """Sampleable conditional next-block distribution.

    Instances are exclusive-use: they own RNG state and the tick counter, and
    may be moved between threads but never shared. Equal (class, parameters,
    seed) and an equal call sequence reproduce equal output across runs.
    """

    #: Block size in bits; None for variable-length channels.
    block_size: int | None = None
    #: Declared lower bound on the min-entropy of every conditional
    #: next-block distribution, in bits.
    min_entropy_bound: float = 0.0

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = random.Random(seed)
        self._tick = -1

    # -- sampling -----------------------------------------------------------

    def sample(self, h: History) -> CoverBlock:
        """Draw the next block conditioned on `h`, stamped with a fresh tick."""
        if not isinstance(h, History):
            raise TypeError("history must be a History")
        bits = self._draw_bits(h)
        tick = max(self._tick, h.last_timestamp) + 1
        self._tick = tick
        return block(bits, tick)

    def sample_view(self, h: History, view: ChannelView) -> list[CoverBlock]:
        """Draw `view.horizon` blocks whose total bit length is < the budget.

        The result is distributed as the joint conditional distribution
        renormalized over the restricted support, realized by rejection.
        """
        if view.horizon < 1:
            raise ValueError("view horizon must be >= 1")
        if self._min_total_bits(h, view.horizon) >= view.bit_budget:
            raise EmptyViewError(
                f"no {view.horizon}-block sequence fits in budget "
                f"{view.bit_budget} bits"
            )
        for _ in range(_MAX_VIEW_TRIES):
            seq = []
            cur = h
            total = 0
            for _ in range(view.horizon):
                b = self.sample(cur)
                seq.append(b)
                total += len(b.bits)
                cur = cur.extended(b)
            if total < view.bit_budget:
                return seq
        raise ChannelError("view sampling did not terminate")

    # -- introspection ------------------------------------------------------

    def support(self, h: History) -> list[tuple[str, float]]:
        """(bits, probability) pairs of the conditional distribution at `h`.

        Only finite-support channels implement this.
        """
        raise UnsupportedChannelOperation(f"{type(self).__name__} is not enumerable")

    def exact_min_entropy(self, h: History) -> float:
        """-log2 of the maximum conditional block probability at `h`."""
        probs = [p for _, p in self.support(h)]
        return -math.log2(max(probs))

    # -- subclass hooks ------------------------------------------------------

    def _draw_bits(self, h: History) -> str:
        raise NotImplementedError

    def _min_total_bits(self, h: History, horizon: int) -> int:
        """Exact minimum total bit length over `horizon` draws from `h`."""
        raise NotImplementedError


class UniformChannel(ChannelModel):
    """Uniform distribution over all k-bit blocks, independent of history."""

    def __init__(self, k: int, seed: int = 0):
        if k < 1:
            raise ValueError("block size must be >= 1")
        super().__init__(seed)
        self.block_size = k
        self.min_entropy_bound = float(k)

    def _draw_bits(self, h: History) -> str:
        return format(self._rng.getrandbits(self.block_size), f"0{self.block_size}b")

    def _min_total_bits(self, h: History, horizon: int) -> int:
        return self.block_size * horizon

    def support(self, h: History) -> list[tuple[str, float]]:
        k = self.block_size
        if k > 16:
            raise UnsupportedChannelOperation(f"2^{k} blocks is not enumerable")
        p = 1.0 / (1 << k)
        return [(format(v, f"0{k}b"), p) for v in range(1 << k)]

    def exact_min_entropy(self, h: History) -> float:
        return float(self.block_size)


class TableChannel(ChannelModel):
    """Finite-support channel given by explicit probability tables.

    `rows` maps a conditioning context to its (bits, probability) list. The
    `None` context is the unconditional row; first-order Markov channels add
    rows keyed by the previous block's bits. Blocks of unequal length make
    the channel variable-length.
    """

    def __init__(
        self,
        rows: dict[str | None, list[tuple[str, float]]],
        seed: int = 0,
        name: str = "table",
    ):
        super().__init__(seed)
        if None not in rows:
            raise ValueError("table channel requires an unconditional row")
        self.name = name
        self.rows = {
            ctx: [(check_bits(bits), float(p)) for bits, p in entries]
            for ctx, entries in rows.items()
        }
        for ctx, entries in self.rows.items():
            total = sum(p for _, p in entries)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"row {ctx!r} probabilities sum to {total}")
            if any(p <= 0 for _, p in entries):
                raise ValueError(f"row {ctx!r} contains a non-positive probability")
        if len(self.rows) > 1:
            self._check_markov_closure()
        sizes = {len(bits) for entries in self.rows.values() for bits, _ in entries}
        self.block_size = sizes.pop() if len(sizes) == 1 else None
        self.min_entropy_bound = min(
            -math.log2(max(p for _, p in entries)) for entries in self.rows.values()
        )

    def _check_markov_closure(self) -> None:
        for ctx, entries in self.rows.items():
            for bits, _ in entries:
                if bits not in self.rows:
                    raise ValueError(
                        f"markov table reaches block {bits!r} (from row {ctx!r}) "
                        "but defines no row for it"
                    )

    def _row(self, h: History) -> list[tuple[str, float]]:
        if len(self.rows) == 1 or h.last_bits is None:
            return self.rows[None]
        if h.last_bits not in self.rows:
            raise ChannelError(f"no table row for history context {h.last_bits!r}")
        return self.rows[h.last_bits]

    def _draw_bits(self, h: History) -> str:
        r = self._rng.random()
        acc = 0.0
        entries = self._row(h)
        for bits, p in entries:
            acc += p
            if r < acc:
                return bits
        return entries[-1][0]

    def support(self, h: History) -> list[tuple[str, float]]:
        return list(self._row(h))

    def _min_total_bits(self, h: History, horizon: int) -> int:
        # Exact DP over contexts; cheap because tables are small.
        ctx = h.last_bits if len(self.rows) > 1 and h.last_bits is not None else None
        if ctx is not None and ctx not in self.rows:
            raise ChannelError(f"no table row for history context {ctx!r}")
        best: dict[str | None, int] = {c: 0 for c in self.rows}
        for _ in range(horizon):
            best = {
                c: min(
                    len(bits) + best[bits if len(self.rows) > 1 else None]
                    for bits, _ in entries
                )
                for c, entries in self.rows.items()
            }
        return best[ctx]


# -- synthetic channel catalog -------------------------------------------------

def uniform_channel(k: int, seed: int = 0) -> UniformChannel:
    return UniformChannel(k, seed)


def biased4_channel(seed: int = 0) -> TableChannel:
    """Four-symbol memoryless channel with min-entropy -log2(0.45)."""
    return TableChannel(
        {None: [("00", 0.45), ("01", 0.25), ("10", 0.20), ("11", 0.10)]},
        seed=seed,
        name="biased4",
    )


def variable2_channel(seed: int = 0) -> TableChannel:
    """Two-message variable-length channel: 'a' and 'abc' in ASCII bits."""
    a = "01100001"
    abc = "011000010110001001100011"
    return TableChannel({None: [(a, 0.5), (abc, 0.5)]}, seed=seed, name="variable2")


# -- channel definition files ---------------------------------------------------

def parse_channel_definition(text: str, seed: int = 0) -> ChannelModel:
    """Parse a channel definition.

    Two forms are accepted: `uniform <k>`, or table lines
    `[given <bits>] block <bits> p=<decimal>`. Each row's probabilities must
    sum to 1 within 1e-9.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty channel definition")
    if lines[0].startswith("uniform"):
        if len(lines) != 1:
            raise ValueError("uniform definition takes a single line")
        _, k = lines[0].split()
        return UniformChannel(int(k), seed)

    rows: dict[str | None, list[tuple[str, float]]] = {}
    for ln in lines:
        parts = ln.split()
        ctx: str | None = None
        if parts[0] == "given":
            ctx = check_bits(parts[1])
            parts = parts[2:]
        if len(parts) != 3 or parts[0] != "block" or not parts[2].startswith("p="):
            raise ValueError(f"bad channel definition line: {ln!r}")
        rows.setdefault(ctx, []).append((parts[1], float(parts[2][2:])))
    return TableChannel(rows, seed)


def load_channel(path: str, seed: int = 0) -> ChannelModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_channel_definition(fh.read(), seed)
