"""Empirical passive-warden games.

A warden is a procedure that, given a free channel-sampling oracle and a
challenge oracle, outputs one bit guessing whether the challenge oracle hides
messages. `play_game` runs many independent trials: each trial flips a fair
coin and wires the challenge oracle either to a freshly keyed stegosystem or
to honest channel sampling of matching length, then records the warden's
verdict. The gap between the two arms' verdict rates estimates the warden's
advantage.

Computational wardens cannot be enumerated, so the lab ships a fixed battery
of statistical tests plus pluggable warden procedures; reports are measured
evidence, not proofs.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass

from .channel import ChannelModel, CoverBlock, History
from .crypto import CounterState, SymmetricKey
from .ec import CurveParams, EcStegoSession, EphemeralKeyChannel, se_ec
from .iv import IvStegoSession, iv_block_count, se_iv
from .stats import distinguisher_battery
from .universal import EccSpec, UniversalStegoSession, ecc_encode, se_universal

logger = logging.getLogger(__name__)


class BudgetExhausted(Exception):
    pass


@dataclass(frozen=True)
class WardenBudget:
    """Per-trial query/bit/step limits and the number of game repetitions."""

    max_queries: int = 16
    max_hiddentext_bits: int = 1 << 16
    max_steps: int = 1 << 20
    trials: int = 10_000

    def __post_init__(self):
        if min(self.max_queries, self.max_hiddentext_bits, self.max_steps, self.trials) < 1:
            raise ValueError("budget fields must be positive")


@dataclass(frozen=True)
class AdvantageReport:
    """Observed verdict rates per arm and their gap.

    ci95 is the half-width of the 95% interval for the rate difference,
    computed from the pooled verdict rate.
    """

    p_real: float
    p_ideal: float
    advantage: float
    ci95: float
    trials_real: int
    trials_ideal: int
    discarded: int = 0
    label: str = ""

    @classmethod
    def from_counts(cls, ones_real, n_real, ones_ideal, n_ideal, discarded=0, label=""):
        p_real = ones_real / n_real if n_real else 0.0
        p_ideal = ones_ideal / n_ideal if n_ideal else 0.0
        pooled = (ones_real + ones_ideal) / max(n_real + n_ideal, 1)
        ci = 0.0
        if n_real and n_ideal:
            ci = 1.96 * math.sqrt(pooled * (1 - pooled) * (1 / n_real + 1 / n_ideal))
        return cls(
            p_real=p_real,
            p_ideal=p_ideal,
            advantage=abs(p_real - p_ideal),
            ci95=ci,
            trials_real=n_real,
            trials_ideal=n_ideal,
            discarded=discarded,
            label=label,
        )

    def lines(self) -> list[str]:
        return [
            f"warden-report {self.label}".rstrip(),
            f"  trials: real={self.trials_real} ideal={self.trials_ideal} "
            f"discarded={self.discarded}",
            f"  p_real={self.p_real:.4f} p_ideal={self.p_ideal:.4f}",
            f"  advantage={self.advantage:.4f} ci95={self.ci95:.4f}",
        ]

    def record(self) -> str:
        return (
            f"label={self.label} p_real={self.p_real:.6g} p_ideal={self.p_ideal:.6g} "
            f"advantage={self.advantage:.6g} ci95={self.ci95:.6g} "
            f"trials_real={self.trials_real} trials_ideal={self.trials_ideal} "
            f"discarded={self.discarded}\n"
        )


# -- stegosystem adapters ------------------------------------------------------
#
# An adapter knows how to key a fresh session, how many blocks a hiddentext
# will occupy (used to length-match the honest arm), and how to encode.


class IvAdapter:
    name = "iv"

    def __init__(self, block_bits: int = 128, flavor: str = "production"):
        self.block_bits = block_bits
        self.flavor = flavor

    def fresh_session(self, rng: random.Random, channel: ChannelModel):
        key = SymmetricKey.generate(self.block_bits, rng)
        seed = rng.getrandbits(64) if self.flavor == "true_random" else None
        return IvStegoSession(
            key, CounterState(), self.block_bits, self.flavor, prp_seed=seed
        )

    def block_count(self, m: str) -> int:
        return iv_block_count(len(m), self.block_bits)

    def encode(self, session, m: str, h: History, channel: ChannelModel):
        return se_iv(session, m)


class UniversalAdapter:
    name = "universal"

    def __init__(self, ecc: EccSpec | None = None, flavor: str = "production"):
        self.ecc = ecc or EccSpec(repeat=1)
        self.flavor = flavor

    def fresh_session(self, rng: random.Random, channel: ChannelModel):
        key = SymmetricKey.generate(128, rng)
        seed = rng.getrandbits(64) if self.flavor == "true_random" else None
        return UniversalStegoSession(
            key, CounterState(), channel, self.ecc, self.flavor, prf_seed=seed
        )

    def block_count(self, m: str) -> int:
        return len(ecc_encode(m, self.ecc))

    def encode(self, session, m: str, h: History, channel: ChannelModel):
        return se_universal(session, m, h)


class EcAdapter:
    name = "ec"

    def __init__(self, curve: CurveParams, r: int = 8, flavor: str = "production"):
        self.curve = curve
        self.r = r
        self.flavor = flavor
        self._encoder = EphemeralKeyChannel(curve)
        self._tick = -1

    def fresh_session(self, rng: random.Random, channel: ChannelModel):
        key = SymmetricKey.generate(128, rng)
        return EcStegoSession(key, CounterState(), self.curve, self.r, self.flavor)

    def block_count(self, m: str) -> int:
        return -(-len(m) // self.r)

    def encode(self, session, m: str, h: History, channel: ChannelModel):
        out = []
        for i in range(0, len(m), self.r):
            word = int(m[i : i + self.r].ljust(self.r, "0"), 2)
            _, Q = se_ec(session, word)
            self._tick += 1
            out.append(CoverBlock(self._encoder.point_to_bits(Q), {"timestamp": self._tick}))
        return out


class BrokenCopyBitAdapter:
    """Deliberately detectable scheme: copies the hiddentext's first bit into
    the block's first bit. Positive control for warden power."""

    name = "broken-copy-bit"

    def fresh_session(self, rng: random.Random, channel: ChannelModel):
        return None

    def block_count(self, m: str) -> int:
        return 1

    def encode(self, session, m: str, h: History, channel: ChannelModel):
        b = channel.sample(h)
        return [CoverBlock(m[0] + b.bits[1:], dict(b.labels))]


class HonestAdapter:
    """Null scheme: emits honest channel samples. Both game arms coincide,
    so any measured advantage is calibration noise."""

    name = "honest"

    def fresh_session(self, rng: random.Random, channel: ChannelModel):
        return None

    def block_count(self, m: str) -> int:
        return 1

    def encode(self, session, m: str, h: History, channel: ChannelModel):
        return [channel.sample(h)]


# -- the game -------------------------------------------------------------------


def random_message_source(nbits: int):
    """Hiddentext generator drawing fixed-length uniform messages."""

    def source(rng: random.Random) -> str:
        return format(rng.getrandbits(nbits), f"0{nbits}b") if nbits else ""

    return source


def play_game(
    warden,
    steg,
    channel: ChannelModel,
    budget: WardenBudget,
    message_source,
    rng: random.Random | None = None,
    label: str = "",
) -> AdvantageReport:
    """Estimate a warden's advantage against a stegosystem over a channel.

    Each trial flips a fair coin: the challenge oracle is either the freshly
    keyed stegosystem or honest channel sampling matched to the stegotext
    length. The warden gets the free channel oracle, the challenge oracle,
    and a trial RNG; it must return 0 or 1. Budget overruns discard the
    trial.
    """
    rng = rng or random.Random()
    ones = [0, 0]
    totals = [0, 0]
    discarded = 0

    for _ in range(budget.trials):
        arm_real = rng.getrandbits(1)
        session = steg.fresh_session(rng, channel) if arm_real else None
        state = {"queries": 0, "bits": 0, "steps": 0}

        def spend_steps(k):
            state["steps"] += k
            if state["steps"] > budget.max_steps:
                raise BudgetExhausted("step budget")

        def channel_oracle(h: History | None = None, count: int = 1):
            spend_steps(count)
            cur = h or History()
            out = []
            for _ in range(count):
                b = channel.sample(cur)
                out.append(b)
                cur = cur.extended(b)
            return out

        def challenge():
            state["queries"] += 1
            if state["queries"] > budget.max_queries:
                raise BudgetExhausted("query budget")
            m = message_source(rng)
            state["bits"] += len(m)
            if state["bits"] > budget.max_hiddentext_bits:
                raise BudgetExhausted("hiddentext bit budget")
            h = History()
            if arm_real:
                blocks = steg.encode(session, m, h, channel)
            else:
                blocks = channel_oracle(h, steg.block_count(m))
            spend_steps(len(blocks))
            return m, blocks

        try:
            verdict = int(bool(warden(channel_oracle, challenge, rng)))
        except BudgetExhausted as exc:
            logger.warning("trial discarded: %s", exc)
            discarded += 1
            continue
        ones[arm_real] += verdict
        totals[arm_real] += 1

    return AdvantageReport.from_counts(
        ones[1], totals[1], ones[0], totals[0], discarded, label=label
    )


# -- warden procedures ------------------------------------------------------------


def constant_warden(bit: int):
    def warden(channel_oracle, challenge, rng):
        return bit

    return warden


def first_bit_warden(channel_oracle, challenge, rng):
    """Flags the challenge when the first block's first bit echoes the
    hiddentext's first bit."""
    m, blocks = challenge()
    return 1 if blocks and m and blocks[0].bits[0] == m[0] else 0


def battery_warden(queries: int = 4, alpha: float = 0.01, reference: int = 64):
    """Runs the statistical battery on challenge output against a fresh
    honest reference corpus; flags when any test rejects at `alpha`."""

    def warden(channel_oracle, challenge, rng):
        corpus: list[CoverBlock] = []
        for _ in range(queries):
            _, blocks = challenge()
            corpus.extend(blocks)
        ref = channel_oracle(None, reference)
        for result in distinguisher_battery(corpus, ref):
            if not result.skipped and result.p_real is not None and result.p_real < alpha:
                return 1
        return 0

    return warden
