"""Short-Weierstrass curve arithmetic and the ephemeral-key stegosystem.

A message word of r bits selects one counter slot inside a window of 2^r
consecutive counter values; the slot's pseudorandom scalar becomes the
ephemeral private key, and the public key d*G is the cover symbol. The
decoder walks the same window until some slot's point matches, then inverts
the word permutation. Anything outside the window's image is an innocent
ephemeral key.

Points are affine (x, y) tuples, with None as the point at infinity. Scalar
multiplication uses Jacobian coordinates internally and a fixed-base comb
for the generator; results are always affine. Arithmetic is not
constant-time and must not guard real secrets.
"""

from __future__ import annotations

import math
import os

from .bitutil import bytes_to_bits
from .channel import ChannelModel, History
from .crypto import CounterPrf, CounterState, IdentityWordPrp, ShuffleWordPrp, SymmetricKey

# Affine point: (x, y) tuple, or None for the point at infinity.
INFINITY = None


class CurveError(Exception):
    pass


class OffCurveError(CurveError):
    """Point does not satisfy the curve equation."""


class NotAStegotextError(CurveError):
    """No window slot maps to the received point: innocent key or desync."""


class CurveParams:
    """Domain parameters for y^2 = x^3 + ax + b over F_p with generator G
    of order n. Instances are immutable after construction and shareable."""

    def __init__(self, name: str, p: int, a: int, b: int, gx: int, gy: int, n: int):
        self.name = name
        self.p = p
        self.a = a % p
        self.b = b % p
        self.g = (gx % p, gy % p)
        self.n = n
        self.field_bytes = (p.bit_length() + 7) // 8
        if (4 * self.a**3 + 27 * self.b**2) % p == 0:
            raise CurveError(f"{name}: singular curve")
        if not self.contains(self.g):
            raise CurveError(f"{name}: generator not on curve")
        if _mul_unchecked(n, self.g, self) is not INFINITY:
            raise CurveError(f"{name}: n*G is not the identity")
        self._comb: list[list] | None = None

    def contains(self, P) -> bool:
        if P is INFINITY:
            return True
        x, y = P
        return (y * y - (x * x * x + self.a * x + self.b)) % self.p == 0

    def __repr__(self):
        return f"CurveParams({self.name})"


def _require_on_curve(P, curve: CurveParams) -> None:
    if not curve.contains(P):
        raise OffCurveError(f"point {P} is not on {curve.name}")


def ec_add(P, Q, curve: CurveParams):
    """Affine group law. Inputs must lie on the curve."""
    _require_on_curve(P, curve)
    _require_on_curve(Q, curve)
    return _add_affine(P, Q, curve)


def _add_affine(P, Q, curve: CurveParams):
    p = curve.p
    if P is INFINITY:
        return Q
    if Q is INFINITY:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2 and (y1 + y2) % p == 0:
        return INFINITY
    if P == Q:
        lam = (3 * x1 * x1 + curve.a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return (x3, (lam * (x1 - x3) - y1) % p)


# -- Jacobian internals ------------------------------------------------------

def _jac_double(P, curve):
    if P is None:
        return None
    X1, Y1, Z1 = P
    p = curve.p
    if Y1 == 0:
        return None
    Ysq = Y1 * Y1 % p
    S = 4 * X1 * Ysq % p
    Zsq = Z1 * Z1 % p
    M = (3 * X1 * X1 + curve.a * Zsq * Zsq) % p
    X3 = (M * M - 2 * S) % p
    Y3 = (M * (S - X3) - 8 * Ysq * Ysq) % p
    Z3 = 2 * Y1 * Z1 % p
    return (X3, Y3, Z3)


def _jac_add_affine(P, Q, curve):
    """Add affine Q (not infinity) to Jacobian P."""
    if P is None:
        return (Q[0], Q[1], 1)
    X1, Y1, Z1 = P
    x2, y2 = Q
    p = curve.p
    Zsq = Z1 * Z1 % p
    U2 = x2 * Zsq % p
    S2 = y2 * Zsq * Z1 % p
    if U2 == X1:
        if S2 == Y1:
            return _jac_double(P, curve)
        return None
    H = (U2 - X1) % p
    R = (S2 - Y1) % p
    HH = H * H % p
    HHH = H * HH % p
    V = X1 * HH % p
    X3 = (R * R - HHH - 2 * V) % p
    Y3 = (R * (V - X3) - Y1 * HHH) % p
    Z3 = Z1 * H % p
    return (X3, Y3, Z3)


def _jac_to_affine(P, curve):
    if P is None:
        return INFINITY
    X, Y, Z = P
    p = curve.p
    zi = pow(Z, -1, p)
    zi2 = zi * zi % p
    return (X * zi2 % p, Y * zi2 * zi % p)


def _mul_unchecked(k: int, P, curve: CurveParams):
    if k == 0 or P is INFINITY:
        return INFINITY
    acc = None
    for bit in bin(k)[2:]:
        acc = _jac_double(acc, curve)
        if bit == "1":
            acc = _jac_add_affine(acc, P, curve)
    return _jac_to_affine(acc, curve)


def _build_comb(curve: CurveParams) -> list[list]:
    """Fixed-base table: rows[i][v] = (v << 8i) * G, affine or None."""
    rows = []
    base = curve.g
    nrows = (curve.n.bit_length() + 7) // 8
    for _ in range(nrows):
        row = [INFINITY] * 256
        acc = None
        for v in range(1, 256):
            acc = _jac_add_affine(acc, base, curve)
            row[v] = _jac_to_affine(acc, curve)
        rows.append(row)
        base = _jac_to_affine(_jac_add_affine(acc, base, curve), curve)
        if base is INFINITY:
            break  # unreachable for odd prime order; remaining rows stay empty
    while len(rows) < nrows:
        rows.append([INFINITY] * 256)
    return rows


def _mul_base(k: int, curve: CurveParams):
    """k*G via the cached fixed-base comb."""
    if curve._comb is None:
        curve._comb = _build_comb(curve)
    acc = None
    i = 0
    while k:
        digit = k & 0xFF
        if digit:
            entry = curve._comb[i][digit]
            if entry is not INFINITY:
                acc = _jac_add_affine(acc, entry, curve)
        k >>= 8
        i += 1
    return _jac_to_affine(acc, curve)


def ec_scalar_mul(k: int, P, curve: CurveParams):
    """k*P by double-and-add; 0 <= k < n."""
    if not 0 <= k < curve.n:
        raise ValueError(f"scalar {k} out of [0, {curve.n})")
    _require_on_curve(P, curve)
    if k == 0 or P is INFINITY:
        return INFINITY
    if P == curve.g:
        return _mul_base(k, curve)
    return _mul_unchecked(k, P, curve)


# -- wire encoding -----------------------------------------------------------

def encode_point(P, curve: CurveParams) -> bytes:
    """Uncompressed encoding: 0x04 | x | y, fixed-width big-endian."""
    if P is INFINITY:
        raise CurveError("the identity is never serialized")
    w = curve.field_bytes
    return b"\x04" + P[0].to_bytes(w, "big") + P[1].to_bytes(w, "big")


def decode_point(data: bytes, curve: CurveParams):
    w = curve.field_bytes
    if len(data) != 1 + 2 * w or data[0] != 0x04:
        raise CurveError(f"bad point encoding of {len(data)} bytes")
    P = (int.from_bytes(data[1 : 1 + w], "big"), int.from_bytes(data[1 + w :], "big"))
    _require_on_curve(P, curve)
    return P


# -- parameter files and shipped curves --------------------------------------

_CURVE_KEYS = ("p", "a", "b", "gx", "gy", "n")


def parse_curve_definition(text: str, name: str = "custom") -> CurveParams:
    """Parse `key=hex` lines for p, a, b, gx, gy, n (optionally name)."""
    fields: dict[str, str] = {}
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        key, _, val = ln.partition("=")
        fields[key.strip()] = val.strip()
    if "name" in fields:
        name = fields["name"]
    missing = [k for k in _CURVE_KEYS if k not in fields]
    if missing:
        raise CurveError(f"curve definition missing {missing}")
    vals = {k: int(fields[k], 16) for k in _CURVE_KEYS}
    return CurveParams(name, **vals)


def load_curve(path: str) -> CurveParams:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_curve_definition(fh.read(), name=os.path.basename(path))


_CURVES: dict[str, CurveParams] = {}


def toy17() -> CurveParams:
    """19-point curve over F_17; small enough to verify exhaustively."""
    if "toy17" not in _CURVES:
        _CURVES["toy17"] = CurveParams("toy17", p=17, a=2, b=2, gx=5, gy=1, n=19)
    return _CURVES["toy17"]


def tiny40() -> CurveParams:
    """40-bit prime-order curve for desk-scale window experiments."""
    if "tiny40" not in _CURVES:
        _CURVES["tiny40"] = CurveParams(
            "tiny40",
            p=0xFFFFFFFF2B,
            a=3,
            b=8,
            gx=0x3,
            gy=0x59548457D2,
            n=0xFFFFFA70C5,
        )
    return _CURVES["tiny40"]


def p256() -> CurveParams:
    """NIST P-256 domain parameters."""
    if "p256" not in _CURVES:
        _CURVES["p256"] = CurveParams(
            "p256",
            p=0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF,
            a=-3,
            b=0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B,
            gx=0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296,
            gy=0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5,
            n=0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551,
        )
    return _CURVES["p256"]


def curve_by_name(name: str) -> CurveParams:
    factories = {"toy17": toy17, "tiny40": tiny40, "p256": p256}
    if name not in factories:
        raise CurveError(f"unknown curve {name!r}")
    return factories[name]()


# -- the stegosystem ----------------------------------------------------------

class EcStegoSession:
    """Encoder or decoder state for the ephemeral-key scheme.

    Each message word consumes a full counter window of 2^r values, keeping
    successive windows disjoint so no ephemeral public key can repeat between
    messages. `flavor` selects the scalar source: `production` derives
    scalars from an AES-backed PRF reduced into [1, n-1]; `stub` uses
    (counter + 1) mod n for hand-traceable tests.
    """

    def __init__(
        self,
        key: SymmetricKey,
        counter: CounterState,
        curve: CurveParams,
        r: int,
        flavor: str = "production",
    ):
        if not 2 <= r <= 15:
            raise ValueError("payload width r must be between 2 and 15 bits")
        self.key = key
        self.counter = counter
        self.curve = curve
        self.r = r
        self.window = 1 << r
        if flavor == "production":
            self.word_prp = ShuffleWordPrp(key, r)
            # 64 extra bits make the mod-(n-1) reduction bias negligible.
            self._prf = CounterPrf(key, curve.n.bit_length() + 64)
        elif flavor == "stub":
            self.word_prp = IdentityWordPrp(r)
            self._prf = None
        else:
            raise ValueError(f"unknown scalar flavor {flavor!r}")
        self._table: tuple[int, dict[bytes, int]] | None = None
        self.last_decode_mults = 0

    def scalar_at(self, counter_value: int) -> int:
        """Pseudorandom scalar in [1, n-1] for one counter slot."""
        if self._prf is None:
            return (counter_value + 1) % self.curve.n
        return self._prf.value(counter_value) % (self.curve.n - 1) + 1


def se_ec(session: EcStegoSession, word: int):
    """Encode an r-bit word as an ephemeral key pair (d, d*G)."""
    if not 0 <= word < session.window:
        raise ValueError(f"word {word} out of range for r={session.r}")
    j = session.word_prp.apply(word)
    base = session.counter.next(session.window)
    d = session.scalar_at(base + j)
    return d, ec_scalar_mul(d, session.curve.g, session.curve)


def sd_ec(session: EcStegoSession, Q) -> int:
    """Recover the word hidden in ephemeral public key Q.

    Consumes the window whether or not decoding succeeds, so an innocent key
    cannot desynchronize the counter. With a fresh precomputed table for the
    current window the search is a single lookup; otherwise slots are
    enumerated lazily, costing at most 2^r scalar multiplications.
    """
    curve = session.curve
    _require_on_curve(Q, curve)
    if Q is INFINITY:
        raise CurveError("the identity cannot carry a word")
    base = session.counter.next(session.window)
    session.last_decode_mults = 0
    if session._table is not None and session._table[0] == base:
        j = session._table[1].get(encode_point(Q, curve))
        session._table = None
        if j is None:
            raise NotAStegotextError("point outside the window image")
        return session.word_prp.invert(j)
    for j in range(session.window):
        d = session.scalar_at(base + j)
        session.last_decode_mults += 1
        if ec_scalar_mul(d, curve.g, curve) == Q:
            return session.word_prp.invert(j)
    raise NotAStegotextError("point outside the window image")


def precompute_window(session: EcStegoSession) -> int:
    """Materialize the current window's point-to-slot map for O(1) decode.

    Costs exactly 2^r scalar multiplications; returns that count. The table
    is keyed to the window base and ignored once the counter moves past it.
    """
    base = session.counter.value
    curve = session.curve
    table: dict[bytes, int] = {}
    for j in range(session.window):
        d = session.scalar_at(base + j)
        P = ec_scalar_mul(d, curve.g, curve)
        table.setdefault(encode_point(P, curve), j)
    session._table = (base, table)
    return session.window


class EphemeralKeyChannel(ChannelModel):
    """Honest ephemeral-key distribution: d uniform in [1, n-1], symbol d*G.

    Block bits are the fixed-width x||y coordinates. Used as the cover
    channel in distinguishing experiments against the ephemeral-key scheme.
    """

    def __init__(self, curve: CurveParams, seed: int = 0):
        super().__init__(seed)
        self.curve = curve
        self.block_size = 16 * curve.field_bytes
        self.min_entropy_bound = math.log2(curve.n - 1)

    def _draw_bits(self, h: History) -> str:
        d = self._rng.randrange(1, self.curve.n)
        P = ec_scalar_mul(d, self.curve.g, self.curve)
        return bytes_to_bits(encode_point(P, self.curve)[1:])

    def _min_total_bits(self, h: History, horizon: int) -> int:
        return self.block_size * horizon

    def exact_min_entropy(self, h: History) -> float:
        return self.min_entropy_bound

    def point_to_bits(self, P) -> str:
        return bytes_to_bits(encode_point(P, self.curve)[1:])
