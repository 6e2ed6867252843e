"""Statistical distinguishing tests over cover-block corpora.

Each test reports a p-value under the null hypothesis that the corpus is
honest channel output (uniform bits, independent blocks, honest timing).
Tests that lack enough data to be meaningful are marked skipped rather than
silently passed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .bitutil import pack_bits
from .channel import CoverBlock


@dataclass
class TestResult:
    name: str
    p_real: float | None
    p_ideal: float | None
    skipped: bool = False
    note: str = ""

    def worst_p(self) -> float | None:
        vals = [p for p in (self.p_real, self.p_ideal) if p is not None]
        return min(vals) if vals else None


def blocks_to_bitmatrix(blocks: list[CoverBlock]) -> np.ndarray:
    """Stack equal-sized blocks into an (n, bits) 0/1 matrix."""
    if not blocks:
        return np.zeros((0, 0), dtype=np.uint8)
    width = len(blocks[0].bits)
    if any(len(b.bits) != width for b in blocks):
        raise ValueError("corpus blocks have unequal sizes")
    packed = b"".join(pack_bits(b.bits) for b in blocks)
    rows = np.frombuffer(packed, dtype=np.uint8).reshape(len(blocks), -1)
    return np.unpackbits(rows, axis=1)[:, :width]


def timestamps(blocks: list[CoverBlock]) -> np.ndarray:
    return np.array([b.timestamp for b in blocks], dtype=np.int64)


def chi_square_pvalue(chi2: float, dof: int) -> float:
    return float(gammaincc(dof / 2.0, chi2 / 2.0))


def monobit_pvalue(bits: np.ndarray) -> float | None:
    """Frequency test over every bit in the corpus."""
    n = bits.size
    if n < 100:
        return None
    ones = int(bits.sum())
    z = (2 * ones - n) / math.sqrt(n)
    return math.erfc(abs(z) / math.sqrt(2))


def bit_position_freqs(bits: np.ndarray) -> np.ndarray:
    """Fraction of ones per bit position (column means)."""
    return bits.mean(axis=0)


def first_byte_chi_square(bits: np.ndarray) -> float | None:
    """Chi-square of the first byte's value distribution against uniform."""
    n, width = bits.shape
    if width < 8 or n < 1280:  # expected count of 5 per cell
        return None
    weights = np.array([128, 64, 32, 16, 8, 4, 2, 1], dtype=np.int64)
    vals = bits[:, :8].astype(np.int64) @ weights
    counts = np.bincount(vals, minlength=256)
    expected = n / 256.0
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    return chi_square_pvalue(chi2, 255)


def serial_correlation_pvalue(bits: np.ndarray) -> float | None:
    """Lag-1 correlation between consecutive blocks' popcounts."""
    n = bits.shape[0]
    if n < 32:
        return None
    s = bits.sum(axis=1).astype(np.float64)
    a, b = s[:-1], s[1:]
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return None
    r = float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))
    z = r * math.sqrt(n - 1)
    return math.erfc(abs(z) / math.sqrt(2))


def timestamp_gap_pvalue(ts_a: np.ndarray, ts_b: np.ndarray) -> float | None:
    """Two-sample chi-square comparison of timestamp gap distributions."""
    if ts_a.size < 2 or ts_b.size < 2:
        return None
    ga = np.diff(ts_a)
    gb = np.diff(ts_b)
    values = np.union1d(ga, gb)
    ca = np.array([(ga == v).sum() for v in values], dtype=np.float64)
    cb = np.array([(gb == v).sum() for v in values], dtype=np.float64)
    # Merge sparse cells so every pooled expectation is at least 5.
    order = np.argsort(-(ca + cb))
    ca, cb = ca[order], cb[order]
    while len(ca) > 1 and (ca[-1] + cb[-1]) < 10:
        ca[-2] += ca[-1]
        cb[-2] += cb[-1]
        ca, cb = ca[:-1], cb[:-1]
    if len(ca) < 2:
        return None  # identical constant gaps on both sides: nothing to test
    na, nb = ca.sum(), cb.sum()
    tot = ca + cb
    ea = tot * na / (na + nb)
    eb = tot * nb / (na + nb)
    chi2 = float((((ca - ea) ** 2) / ea).sum() + (((cb - eb) ** 2) / eb).sum())
    return chi_square_pvalue(chi2, len(ca) - 1)


def distinguisher_battery(
    corpus_real: list[CoverBlock], corpus_ideal: list[CoverBlock]
) -> list[TestResult]:
    """Run every test on both corpora.

    Monobit, first-byte chi-square, and serial correlation are evaluated per
    corpus against the honest null; the timestamp-gap test compares the two
    corpora directly and its p-value is reported once for both.
    """
    if corpus_real and corpus_ideal:
        if len(corpus_real[0].bits) != len(corpus_ideal[0].bits):
            raise ValueError("corpora have different block sizes")
    mr = blocks_to_bitmatrix(corpus_real)
    mi = blocks_to_bitmatrix(corpus_ideal)
    results: list[TestResult] = []

    def per_corpus(name, fn):
        pr = fn(mr) if mr.size else None
        pi = fn(mi) if mi.size else None
        results.append(
            TestResult(name, pr, pi, skipped=pr is None and pi is None)
        )

    per_corpus("monobit", monobit_pvalue)
    per_corpus("first_byte_chi_square", first_byte_chi_square)
    per_corpus("serial_correlation", serial_correlation_pvalue)

    p_gap = timestamp_gap_pvalue(timestamps(corpus_real), timestamps(corpus_ideal))
    results.append(TestResult("timestamp_gap", p_gap, p_gap, skipped=p_gap is None))
    return results


def battery_records(results: list[TestResult]) -> str:
    """Machine-readable rendering: one key=value group per test."""
    groups = []
    for r in results:
        fields = [f"test={r.name}", f"skipped={int(r.skipped)}"]
        if r.p_real is not None:
            fields.append(f"p_real={r.p_real:.6g}")
        if r.p_ideal is not None:
            fields.append(f"p_ideal={r.p_ideal:.6g}")
        groups.append(" ".join(fields))
    return "\n".join(groups) + "\n"
