"""Keyed primitives: block PRPs, small-domain word PRPs, the one-bit PRF,
and the synchronized counter.

Three flavors exist for each primitive. `production` is backed by AES-128.
`stub` flavors (XOR, parity, identity) are part of the public test API: every
hand-checkable example in the test suite uses them. `true_random` flavors
lazily sample an ideal random function or permutation, memoizing so repeated
queries agree; they stand in for the ideal object in distinguishing
experiments.

Primitives are stateless after construction and safe to share; CounterState
is exclusive-use.
"""

from __future__ import annotations

import hashlib
import math
import random
import secrets
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .channel import CoverBlock


class CryptoError(Exception):
    pass


class WidthMismatchError(CryptoError):
    """Input width does not match the primitive's width."""


class CounterOverflowError(CryptoError):
    """Counter space exhausted; the session must be rekeyed, never wrapped."""


@dataclass(frozen=True)
class SymmetricKey:
    """Raw symmetric key material."""

    data: bytes

    @property
    def bits(self) -> int:
        return 8 * len(self.data)

    @classmethod
    def generate(cls, nbits: int = 128, rng: random.Random | None = None) -> "SymmetricKey":
        if nbits % 8:
            raise ValueError("key size must be a whole number of bytes")
        if rng is None:
            return cls(secrets.token_bytes(nbits // 8))
        return cls(rng.randbytes(nbits // 8))


def load_key(path: str, expect_bits: int | None = None) -> SymmetricKey:
    """Load raw binary key material, length-checked."""
    with open(path, "rb") as fh:
        data = fh.read()
    if expect_bits is not None and 8 * len(data) != expect_bits:
        raise CryptoError(f"key file {path}: got {8 * len(data)} bits, want {expect_bits}")
    return SymmetricKey(data)


class CounterState:
    """Synchronized d-bit counter. Strictly increasing, never wraps."""

    def __init__(self, value: int = 0, width: int = 64):
        if value < 0 or value >> width:
            raise ValueError(f"counter value {value} out of range for {width} bits")
        self.value = value
        self.width = width

    def next(self, stride: int = 1) -> int:
        """Consume `stride` counter values; return the pre-increment value."""
        if stride < 1:
            raise ValueError("stride must be positive")
        if self.value + stride > (1 << self.width) - 1:
            raise CounterOverflowError(
                f"counter would exceed 2^{self.width}-1; rekey required"
            )
        out = self.value
        self.value += stride
        return out


def counter_next(state: CounterState, stride: int = 1) -> int:
    return state.next(stride)


def _encode_block(b: CoverBlock) -> bytes:
    """Stable digest of a cover block's bits and labels for PRF input."""
    return hashlib.sha256(b.encode().encode("ascii")).digest()[:8]


# -- block permutations ---------------------------------------------------------


class AesBlockPrp:
    """Production 128-bit block permutation (AES-128, single block)."""

    width_bits = 128

    def __init__(self, key: SymmetricKey):
        if key.bits != 128:
            raise WidthMismatchError(f"AES block PRP needs a 128-bit key, got {key.bits}")
        cipher = Cipher(algorithms.AES(key.data), modes.ECB())
        self._enc = cipher.encryptor()
        self._dec = cipher.decryptor()

    def apply(self, x: bytes) -> bytes:
        if len(x) != 16:
            raise WidthMismatchError(f"expected 16 bytes, got {len(x)}")
        return self._enc.update(x)

    def invert(self, y: bytes) -> bytes:
        if len(y) != 16:
            raise WidthMismatchError(f"expected 16 bytes, got {len(y)}")
        return self._dec.update(y)

    def apply_many(self, xs: bytes) -> bytes:
        """Permute a concatenation of whole blocks in one cipher call."""
        if len(xs) % 16:
            raise WidthMismatchError(f"{len(xs)} bytes is not whole blocks")
        return self._enc.update(xs)


class XorBlockPrp:
    """Stub permutation x XOR key; width equals the key width."""

    def __init__(self, key: SymmetricKey):
        self._key = key.data
        self.width_bits = key.bits

    def apply(self, x: bytes) -> bytes:
        if len(x) != len(self._key):
            raise WidthMismatchError(f"expected {len(self._key)} bytes, got {len(x)}")
        return bytes(a ^ b for a, b in zip(x, self._key))

    invert = apply


class RandomBlockPrp:
    """Ideal random permutation stand-in on fixed-width byte blocks.

    Values depend only on (seed, query), never on query order, so instances
    built from the same seed implement the same function: fresh values come
    from a keyed hash, and a two-way memo keeps apply/invert mutually
    consistent for every value seen through either direction. Output
    collisions would need ~2^(width/2) queries and are resolved by
    re-hashing, preserving injectivity over all queries actually made.
    """

    def __init__(self, width_bits: int, seed: int | None = None):
        if width_bits % 8:
            raise ValueError("width must be a whole number of bytes")
        if width_bits > 512:
            raise ValueError("width above 512 bits is not supported")
        self.width_bits = width_bits
        self._nbytes = width_bits // 8
        if seed is None:
            seed = secrets.randbits(128)
        self._seed = seed.to_bytes(32, "big", signed=False)[-32:]
        self._fwd: dict[bytes, bytes] = {}
        self._bwd: dict[bytes, bytes] = {}

    def _hash(self, tag: bytes, data: bytes, taken: dict[bytes, bytes]) -> bytes:
        ctr = 0
        while True:
            h = hashlib.blake2b(
                tag + ctr.to_bytes(4, "big") + data,
                key=self._seed,
                digest_size=self._nbytes,
            ).digest()
            if h not in taken:
                return h
            ctr += 1

    def _check(self, x: bytes) -> None:
        if len(x) != self._nbytes:
            raise WidthMismatchError(f"expected {self._nbytes} bytes, got {len(x)}")

    def apply(self, x: bytes) -> bytes:
        self._check(x)
        if x not in self._fwd:
            y = self._hash(b"f", x, self._bwd)
            self._fwd[x] = y
            self._bwd[y] = x
        return self._fwd[x]

    def invert(self, y: bytes) -> bytes:
        self._check(y)
        if y not in self._bwd:
            x = self._hash(b"i", y, self._fwd)
            self._bwd[y] = x
            self._fwd[x] = y
        return self._bwd[y]


# -- word permutations (small domains) -------------------------------------------


class _Keystream:
    """AES-CTR byte stream used to derive deterministic per-key randomness."""

    def __init__(self, key: SymmetricKey, purpose: bytes):
        material = hashlib.sha256(purpose + b"|" + key.data).digest()
        cipher = Cipher(algorithms.AES(material[:16]), modes.CTR(material[16:]))
        self._enc = cipher.encryptor()
        self._buf = b""
        self._pos = 0

    def take(self, n: int) -> bytes:
        while len(self._buf) - self._pos < n:
            self._buf = self._buf[self._pos :] + self._enc.update(bytes(4096))
            self._pos = 0
        out = self._buf[self._pos : self._pos + n]
        self._pos += n
        return out


class ShuffleWordPrp:
    """Production keyed permutation on r-bit words, r <= 15.

    The domain is small enough to materialize: a Fisher-Yates shuffle of
    [0, 2^r) driven by an AES-CTR keystream yields an exact bijection that is
    deterministic per key.
    """

    def __init__(self, key: SymmetricKey, r: int):
        if not 1 <= r <= 15:
            raise ValueError("word width must be between 1 and 15 bits")
        self.width_bits = r
        size = 1 << r
        perm = list(range(size))
        ks = _Keystream(key, b"stegkit-word-prp-%d" % r)
        for i in range(size - 1, 0, -1):
            # Rejection sampling keeps each index exactly uniform on [0, i].
            mask = (1 << i.bit_length()) - 1
            while True:
                j = int.from_bytes(ks.take(2), "big") & mask
                if j <= i:
                    break
            perm[i], perm[j] = perm[j], perm[i]
        self._fwd = perm
        self._bwd = [0] * size
        for x, y in enumerate(perm):
            self._bwd[y] = x

    def _check(self, w: int) -> None:
        if not 0 <= w < (1 << self.width_bits):
            raise WidthMismatchError(f"word {w} out of range for {self.width_bits} bits")

    def apply(self, w: int) -> int:
        self._check(w)
        return self._fwd[w]

    def invert(self, w: int) -> int:
        self._check(w)
        return self._bwd[w]


class IdentityWordPrp:
    """Stub word permutation: the identity map."""

    def __init__(self, r: int):
        self.width_bits = r

    def _check(self, w: int) -> None:
        if not 0 <= w < (1 << self.width_bits):
            raise WidthMismatchError(f"word {w} out of range for {self.width_bits} bits")

    def apply(self, w: int) -> int:
        self._check(w)
        return w

    invert = apply


# -- one-bit PRF ------------------------------------------------------------------


class AesPrfBit:
    """Production PRF bit: LSB of AES applied to (counter, block digest)."""

    def __init__(self, key: SymmetricKey):
        self._prp = AesBlockPrp(key)

    def bit(self, counter: int, b: CoverBlock) -> int:
        x = counter.to_bytes(8, "big") + _encode_block(b)
        return self._prp.apply(x)[-1] & 1


class ParityPrfBit:
    """Stub PRF bit: parity of the block's bit content (ignores the counter)."""

    def bit(self, counter: int, b: CoverBlock) -> int:
        return b.bits.count("1") & 1


class RandomPrfBit:
    """Ideal random one-bit function stand-in.

    Each distinct (counter, block) query gets an independent-looking fair
    bit; identical queries agree, and instances built from the same seed
    implement the same function regardless of query order.
    """

    def __init__(self, seed: int | None = None):
        if seed is None:
            seed = secrets.randbits(128)
        self._seed = seed.to_bytes(32, "big", signed=False)[-32:]

    def bit(self, counter: int, b: CoverBlock) -> int:
        q = counter.to_bytes(8, "big") + b.encode().encode("ascii")
        return hashlib.blake2b(q, key=self._seed, digest_size=1).digest()[0] & 1


PRF_FLAVORS = ("production", "stub", "true_random")


def make_prf_bit(flavor: str, key: SymmetricKey | None = None, seed: int | None = None):
    """Build a PRF-bit primitive by flavor name."""
    if flavor == "production":
        if key is None:
            raise ValueError("production PRF requires a key")
        return AesPrfBit(key)
    if flavor == "stub":
        return ParityPrfBit()
    if flavor == "true_random":
        return RandomPrfBit(seed)
    raise ValueError(f"unknown PRF flavor {flavor!r}")


class CounterPrf:
    """PRF from counter values to nbits-wide integers.

    Concatenates AES blocks over (chunk index, counter) inputs; used to derive
    pseudorandom scalars wider than one cipher block.
    """

    def __init__(self, key: SymmetricKey, nbits: int):
        self._prp = AesBlockPrp(key)
        self.nbits = nbits
        self._nblocks = math.ceil(nbits / 128)

    def value(self, counter: int) -> int:
        out = b"".join(
            self._prp.apply(i.to_bytes(8, "big") + counter.to_bytes(8, "big"))
            for i in range(self._nblocks)
        )
        return int.from_bytes(out, "big") >> (8 * len(out) - self.nbits)
