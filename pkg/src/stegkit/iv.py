"""Stegosystem over uniformly random initialization vectors.

Each emitted block is PRP(K, N) XOR message-block: since the honest channel
is uniform over b-bit blocks, a pseudorandom pad keeps the output
distribution indistinguishable from it, and decoding is exact. The key width
must equal the block width.

Messages are padded with a single 1 bit followed by zeros up to the next
block boundary; the padding block is always present, so a message that
already fills its blocks grows by one block. Decoding strips it.
"""

from __future__ import annotations

from .bitutil import bits_to_bytes, bits_to_int, bytes_to_bits, int_to_bits
from .channel import CoverBlock, block
from .crypto import (
    AesBlockPrp,
    CounterState,
    RandomBlockPrp,
    SymmetricKey,
    WidthMismatchError,
    XorBlockPrp,
)


class IvStegoSession:
    """Encoder or decoder state for the IV scheme.

    Sessions are exclusive-use; the production configuration is b = 128 with
    an AES pad. The `true_random` flavor swaps in an ideal random permutation
    and is the null hypothesis the warden lab compares against.
    """

    def __init__(
        self,
        key: SymmetricKey,
        counter: CounterState,
        block_bits: int = 128,
        flavor: str = "production",
        prp_seed: int | None = None,
    ):
        if key.bits != block_bits:
            raise WidthMismatchError(
                f"key width {key.bits} must equal block width {block_bits}"
            )
        if flavor == "production":
            self.prp = AesBlockPrp(key)
        elif flavor == "stub":
            self.prp = XorBlockPrp(key)
        elif flavor == "true_random":
            self.prp = RandomBlockPrp(block_bits, prp_seed)
        else:
            raise ValueError(f"unknown PRP flavor {flavor!r}")
        self.key = key
        self.counter = counter
        self.block_bits = block_bits
        self._tick = -1

    def _pads(self, base: int, nblocks: int) -> int:
        """Keystream for counter values base..base+nblocks-1, as one integer."""
        nbytes = self.block_bits // 8
        if isinstance(self.prp, AesBlockPrp):
            stream = self.prp.apply_many(
                b"".join((base + i).to_bytes(nbytes, "big") for i in range(nblocks))
            )
        else:
            stream = b"".join(
                self.prp.apply((base + i).to_bytes(nbytes, "big"))
                for i in range(nblocks)
            )
        return int.from_bytes(stream, "big")


def pad_message(m: str, block_bits: int) -> str:
    """Append 1 then zeros up to the next block boundary (always grows)."""
    padded = m + "1"
    return padded + "0" * (-len(padded) % block_bits)


def unpad_message(padded: str) -> str:
    """Strip the trailing 1-and-zeros padding; garbage without any 1 bit
    (a desynchronized decode) strips to empty."""
    cut = padded.rfind("1")
    return padded[:cut] if cut >= 0 else ""


def iv_block_count(message_bits: int, block_bits: int = 128) -> int:
    """Blocks emitted for a message of the given bit length."""
    return message_bits // block_bits + 1


def se_iv(session: IvStegoSession, m: str) -> list[CoverBlock]:
    """Encode hiddentext bits as pad-XOR blocks with fresh monotone ticks."""
    width = session.block_bits
    padded = pad_message(m, width)
    nblocks = len(padded) // width
    base = session.counter.next(nblocks)
    body = bits_to_int(padded) ^ session._pads(base, nblocks)
    all_bits = int_to_bits(body, len(padded))
    out = []
    for i in range(0, len(padded), width):
        session._tick += 1
        out.append(block(all_bits[i : i + width], session._tick))
    return out


def sd_iv(session: IvStegoSession, stegotext) -> str:
    """Decode blocks (CoverBlocks or bit strings) back to hiddentext bits.

    Exact inverse of se_iv under a synchronized counter; with a counter off
    by any amount the output is uniform garbage and no error is raised.
    """
    width = session.block_bits
    raw = []
    for item in stegotext:
        bits = item.bits if isinstance(item, CoverBlock) else item
        if len(bits) != width:
            raise WidthMismatchError(f"block of {len(bits)} bits, expected {width}")
        raw.append(bits)
    if not raw:
        return ""
    joined = "".join(raw)
    base = session.counter.next(len(raw))
    body = bits_to_int(joined) ^ session._pads(base, len(raw))
    return unpad_message(int_to_bits(body, len(joined)))


def iv_blocks_to_bytes(stegotext) -> bytes:
    """Serialize blocks as raw concatenated big-endian bytes (no framing)."""
    return b"".join(
        bits_to_bytes(b.bits if isinstance(b, CoverBlock) else b) for b in stegotext
    )


def iv_bytes_to_bits(data: bytes, block_bits: int = 128) -> list[str]:
    """Split a raw block stream back into bit-string blocks."""
    nbytes = block_bits // 8
    if len(data) % nbytes:
        raise WidthMismatchError(f"{len(data)} bytes is not a whole number of blocks")
    return [
        bytes_to_bits(data[i : i + nbytes]) for i in range(0, len(data), nbytes)
    ]
