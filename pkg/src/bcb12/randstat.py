"""Frequency, runs and byte-entropy statistics for key bit strings."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .vernam import as_bits

DEFAULT_ALPHA = 0.01


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # not a pytest class

    name: str
    statistic: float
    p_value: float | None
    alpha: float = DEFAULT_ALPHA
    note: str = ""

    @property
    def applicable(self) -> bool:
        return self.p_value is not None

    @property
    def passed(self) -> bool:
        return self.p_value is not None and self.p_value >= self.alpha

    @property
    def verdict(self) -> str:
        if not self.applicable:
            return "n/a"
        return "pass" if self.passed else "fail"


def monobit(bits, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Frequency test: p = erfc(|S| / sqrt(2L)), S the +/-1 sum."""
    bits = as_bits(bits)
    if bits.size == 0:
        raise ValueError("monobit needs at least one bit")
    s = 2 * int(bits.sum()) - bits.size
    p = math.erfc(abs(s) / math.sqrt(2 * bits.size))
    return TestReport("monobit", float(s), p, alpha)


def runs_test(bits, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Runs test; reports n/a when the ones fraction is too far from 1/2."""
    bits = as_bits(bits)
    n = bits.size
    if n < 2:
        raise ValueError("runs test needs at least two bits")
    ones = int(bits.sum())
    pi = ones / n
    # ones * zeros keeps the statistic exactly symmetric under complement
    pq = ones * (n - ones) / (n * n)
    v = 1 + int(np.count_nonzero(np.diff(bits.astype(np.int8))))
    if abs(pi - 0.5) >= 2 / math.sqrt(n) or pq == 0:
        return TestReport("runs", float(v), None, alpha,
                          note=f"ones fraction {pi:.4f} fails the frequency prerequisite")
    p = math.erfc(abs(v - 2 * n * pq) / (2 * math.sqrt(2 * n) * pq))
    return TestReport("runs", float(v), p, alpha)


def byte_entropy(bits) -> float:
    """Shannon entropy of the byte histogram, in bits per byte."""
    bits = as_bits(bits)
    if bits.size % 8:
        raise ValueError(f"bit length {bits.size} is not a multiple of 8")
    data = np.packbits(bits).tobytes()
    if not data:
        return 0.0
    total = len(data)
    h = -sum(c / total * math.log2(c / total) for c in Counter(data).values())
    return max(h, 0.0)


def report_table(bits, alpha: float = DEFAULT_ALPHA) -> str:
    bits = as_bits(bits)
    rows = [monobit(bits, alpha)]
    if bits.size >= 2:
        rows.append(runs_test(bits, alpha))
    lines = [f"{'test':<14}{'statistic':>12}{'p-value':>14}  verdict"]
    for r in rows:
        p = "-" if r.p_value is None else f"{r.p_value:.6g}"
        lines.append(f"{r.name:<14}{r.statistic:>12.4g}{p:>14}  {r.verdict}")
    if bits.size % 8 == 0 and bits.size:
        lines.append(f"{'byte_entropy':<14}{byte_entropy(bits):>12.4f}{'-':>14}  bits/byte")
    return "\n".join(lines)
