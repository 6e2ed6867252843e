"""Universal stateful stegosystem: one hiddentext bit per cover block via
keyed rejection sampling, wrapped in a repetition code.

Encoding draws the channel oracle at most twice per bit, accepting the first
draw whose PRF bit matches; if neither matches, the second draw is emitted
anyway and that bit arrives wrong. Decoding recomputes the PRF bit per block
with the synchronized counter and never needs the channel oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

from .channel import ChannelModel, CoverBlock, History
from .crypto import CounterState, SymmetricKey, make_prf_bit


class AdmissionError(Exception):
    """Channel's declared min-entropy is too low for this scheme."""


@dataclass(frozen=True)
class EccSpec:
    """Repetition code parameters; `repeat` must be odd."""

    repeat: int
    scheme: str = "repetition"

    def __post_init__(self):
        if self.scheme != "repetition":
            raise ValueError(f"unknown ecc scheme {self.scheme!r}")
        if self.repeat < 1 or self.repeat % 2 == 0:
            raise ValueError("repetition count must be odd and >= 1")


def ecc_encode(m: str, ecc: EccSpec) -> str:
    """Repeat each bit `ecc.repeat` times."""
    return "".join(bit * ecc.repeat for bit in m)


def ecc_decode(c: str, ecc: EccSpec) -> str:
    """Majority-vote each group of `ecc.repeat` bits."""
    rho = ecc.repeat
    if len(c) % rho:
        raise ValueError(f"coded length {len(c)} is not a multiple of {rho}")
    out = []
    for i in range(0, len(c), rho):
        ones = c[i : i + rho].count("1")
        out.append("1" if 2 * ones > rho else "0")
    return "".join(out)


class UniversalStegoSession:
    """Encoder or decoder state: key, synchronized counter, channel, code.

    Sessions are exclusive-use. Encoder and decoder sessions built from equal
    key material, counter start, PRF flavor, and code agree. The channel must
    declare min-entropy of at least one bit; below that the second draw is
    too likely to repeat the first and the failure bound collapses.
    """

    def __init__(
        self,
        key: SymmetricKey,
        counter: CounterState,
        channel: ChannelModel,
        ecc: EccSpec,
        prf_flavor: str = "production",
        prf_seed: int | None = None,
    ):
        if channel.min_entropy_bound < 1.0:
            raise AdmissionError(
                f"channel min-entropy bound {channel.min_entropy_bound} is below 1"
            )
        self.key = key
        self.counter = counter
        self.channel = channel
        self.ecc = ecc
        self.prf = make_prf_bit(prf_flavor, key, prf_seed)


def se_universal(session: UniversalStegoSession, m: str, h: History) -> list[CoverBlock]:
    """Encode hiddentext bits `m` into one cover block per coded bit.

    The running history grows with each emitted block, and the counter is
    consumed exactly once per coded bit.
    """
    if not m:
        raise ValueError("empty hiddentext")
    coded = ecc_encode(m, session.ecc)
    out: list[CoverBlock] = []
    cur = h
    for target in coded:
        n = session.counter.next()
        candidate = session.channel.sample(cur)
        if session.prf.bit(n, candidate) != int(target):
            candidate = session.channel.sample(cur)
        out.append(candidate)
        cur = cur.extended(candidate)
    return out


def sd_universal(
    session: UniversalStegoSession,
    stegotext: list[CoverBlock],
    h: History | None = None,
) -> str:
    """Decode a stegotext by recomputing the PRF bit per block.

    `h` is accepted for interface symmetry and ignored; decoding never
    samples the channel. A desynchronized counter is undetectable here and
    silently yields garbage.
    """
    bits = "".join(
        str(session.prf.bit(session.counter.next(), b)) for b in stegotext
    )
    return ecc_decode(bits, session.ecc)
