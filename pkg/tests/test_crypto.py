import random

import pytest

from stegkit.crypto import (
    AesBlockPrp,
    AesPrfBit,
    CounterOverflowError,
    CounterPrf,
    CounterState,
    IdentityWordPrp,
    ParityPrfBit,
    RandomBlockPrp,
    RandomPrfBit,
    ShuffleWordPrp,
    SymmetricKey,
    WidthMismatchError,
    XorBlockPrp,
    load_key,
    make_prf_bit,
)

from conftest import fixed_block


# Published ECB-AES128 known-answer vectors (cipher standard test data).
AES_KAT = [
    (
        "2b7e151628aed2a6abf7158809cf4f3c",
        "6bc1bee22e409f96e93d7e117393172a",
        "3ad77bb40d7a3660a89ecaf32466ef97",
    ),
    (
        "000102030405060708090a0b0c0d0e0f",
        "00112233445566778899aabbccddeeff",
        "69c4e0d86a7b0430d8cdb78070b4c55a",
    ),
]


@pytest.mark.parametrize("key_hex,pt_hex,ct_hex", AES_KAT)
def test_aes_prp_known_answers(key_hex, pt_hex, ct_hex):
    prp = AesBlockPrp(SymmetricKey(bytes.fromhex(key_hex)))
    assert prp.apply(bytes.fromhex(pt_hex)).hex() == ct_hex
    assert prp.invert(bytes.fromhex(ct_hex)).hex() == pt_hex


def test_aes_prp_roundtrip_many(key128, rng):
    prp = AesBlockPrp(key128)
    for _ in range(10_000):
        x = rng.randbytes(16)
        assert prp.invert(prp.apply(x)) == x


def test_aes_apply_many_matches_single(key128, rng):
    prp = AesBlockPrp(key128)
    xs = [rng.randbytes(16) for _ in range(20)]
    assert prp.apply_many(b"".join(xs)) == b"".join(prp.apply(x) for x in xs)


def test_aes_prp_width_checks(key128):
    prp = AesBlockPrp(key128)
    with pytest.raises(WidthMismatchError):
        prp.apply(b"\x00" * 15)
    with pytest.raises(WidthMismatchError):
        AesBlockPrp(SymmetricKey(b"\x00" * 8))


def test_xor_stub_prp_example():
    prp = XorBlockPrp(SymmetricKey(b"\x0f"))
    assert prp.apply(b"\x01") == b"\x0e"
    assert prp.invert(b"\x0e") == b"\x01"


def test_xor_stub_bijective_over_all_bytes():
    prp = XorBlockPrp(SymmetricKey(b"\x2a"))
    outputs = {prp.apply(bytes([x])) for x in range(256)}
    assert len(outputs) == 256


def test_random_block_prp_memoizes_and_inverts():
    prp = RandomBlockPrp(32, seed=5)
    x = b"\x01\x02\x03\x04"
    y = prp.apply(x)
    assert prp.apply(x) == y
    assert prp.invert(y) == x
    # inverse first, then forward
    x2 = prp.invert(b"\xaa\xbb\xcc\xdd")
    assert prp.apply(x2) == b"\xaa\xbb\xcc\xdd"


def test_random_block_prp_same_seed_same_function():
    a = RandomBlockPrp(64, seed=9)
    b = RandomBlockPrp(64, seed=9)
    rng = random.Random(3)
    # different query orders must not change values
    queries = [rng.randbytes(8) for _ in range(50)]
    va = [a.apply(q) for q in queries]
    vb = [b.apply(q) for q in reversed(queries)]
    assert va == list(reversed(vb))


def test_random_block_prp_distinct_queries_look_uniform():
    prp = RandomBlockPrp(8, seed=1)
    outs = {prp.apply(bytes([x])) for x in range(256)}
    assert len(outs) == 256  # injective over the whole 8-bit domain


@pytest.mark.parametrize("r", [2, 3, 8, 15])
def test_shuffle_word_prp_bijective(key128, r):
    prp = ShuffleWordPrp(key128, r)
    size = 1 << r
    outs = {prp.apply(w) for w in range(size)}
    assert outs == set(range(size))
    for w in range(size):
        assert prp.invert(prp.apply(w)) == w


def test_shuffle_word_prp_deterministic_per_key(key128):
    a = ShuffleWordPrp(key128, 8)
    b = ShuffleWordPrp(key128, 8)
    assert [a.apply(w) for w in range(256)] == [b.apply(w) for w in range(256)]
    other = ShuffleWordPrp(SymmetricKey(b"\x00" * 16), 8)
    assert [a.apply(w) for w in range(256)] != [other.apply(w) for w in range(256)]


def test_identity_word_prp():
    prp = IdentityWordPrp(4)
    assert [prp.apply(w) for w in range(16)] == list(range(16))
    with pytest.raises(WidthMismatchError):
        prp.apply(16)


def test_parity_prf_examples():
    prf = ParityPrfBit()
    assert prf.bit(0, fixed_block("01")) == 1
    assert prf.bit(7, fixed_block("11")) == 0
    assert prf.bit(123, fixed_block("0")) == 0


def test_aes_prf_bit_deterministic_and_balanced(key128):
    prf = AesPrfBit(key128)
    b = fixed_block("10110010", ts=4)
    assert prf.bit(9, b) == prf.bit(9, b)
    ones = sum(prf.bit(n, fixed_block(format(n % 256, "08b"), ts=n)) for n in range(20_000))
    assert abs(ones / 20_000 - 0.5) < 0.01


def test_aes_prf_bit_sensitive_to_labels(key128):
    prf = AesPrfBit(key128)
    vals_a = [prf.bit(n, fixed_block("1010", ts=1)) for n in range(64)]
    vals_b = [prf.bit(n, fixed_block("1010", ts=2)) for n in range(64)]
    assert vals_a != vals_b


def test_random_prf_bit_memoizes_and_is_order_free():
    a = RandomPrfBit(seed=11)
    b = RandomPrfBit(seed=11)
    blocks = [fixed_block(format(i, "04b"), ts=i) for i in range(16)]
    va = [a.bit(n, blk) for n, blk in enumerate(blocks)]
    vb = [b.bit(n, blk) for n, blk in reversed(list(enumerate(blocks)))]
    assert va == list(reversed(vb))
    assert a.bit(3, blocks[3]) == va[3]


def test_random_prf_bit_balanced():
    prf = RandomPrfBit(seed=2)
    ones = sum(prf.bit(n, fixed_block("1", ts=n)) for n in range(20_000))
    assert abs(ones / 20_000 - 0.5) < 0.01


def test_make_prf_bit_flavors(key128):
    assert isinstance(make_prf_bit("production", key128), AesPrfBit)
    assert isinstance(make_prf_bit("stub"), ParityPrfBit)
    assert isinstance(make_prf_bit("true_random", seed=1), RandomPrfBit)
    with pytest.raises(ValueError):
        make_prf_bit("nope")
    with pytest.raises(ValueError):
        make_prf_bit("production")  # key required


def test_counter_semantics():
    c = CounterState()
    assert c.next() == 0
    assert c.value == 1
    assert c.next(256) == 1
    assert c.value == 257


def test_counter_never_returns_same_value_twice(rng):
    c = CounterState()
    seen = set()
    for _ in range(1000):
        v = c.next(rng.randrange(1, 5))
        assert v not in seen
        seen.add(v)


def test_counter_overflow_is_hard_error():
    c = CounterState(value=(1 << 16) - 1, width=16)
    with pytest.raises(CounterOverflowError, match="rekey"):
        c.next()
    assert c.value == (1 << 16) - 1  # untouched after the failed advance


def test_counter_boundary_last_value_ok():
    c = CounterState(value=(1 << 16) - 2, width=16)
    assert c.next() == (1 << 16) - 2
    with pytest.raises(CounterOverflowError):
        c.next()


def test_counter_prf_width_and_determinism(key128):
    prf = CounterPrf(key128, 320)
    v = prf.value(7)
    assert v == prf.value(7)
    assert 0 <= v < (1 << 320)
    assert prf.value(8) != v


def test_load_key_checks_length(tmp_path):
    p = tmp_path / "k.bin"
    p.write_bytes(b"\x01" * 16)
    assert load_key(str(p)).bits == 128
    assert load_key(str(p), expect_bits=128).data == b"\x01" * 16
    with pytest.raises(Exception, match="128"):
        load_key(str(p), expect_bits=256)
