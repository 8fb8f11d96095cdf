"""Block classification, match lists and key derivation.

Block index lists are integer arrays with entries in ``1..k``.  A match list
is a boolean array where ``True`` is a PLUS mark.  Positions are 0-based in
memory; anything shown to a person uses 1-based positions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NoMatch, PartitionError
from .partition import SetPartition
from .vernam import bits_to_str


class FKind(enum.Enum):
    SUM = "SUM"
    PRODUCT = "PRODUCT"
    MAX = "MAX"


PLUS, MINUS = "+", "-"


def classify_sequence(p: SetPartition, seq: Sequence[int] | np.ndarray) -> np.ndarray:
    """Map each drawn integer to the index of the block that contains it."""
    seq = np.asarray(seq, dtype=np.int64).reshape(-1)
    if seq.size and (seq.min() < 1 or seq.max() > p.n):
        bad = seq[(seq < 1) | (seq > p.n)][0]
        raise PartitionError(f"sequence entry {bad} outside 1..{p.n}")
    return p.lookup[seq]


def compare_lists(ta: np.ndarray, tb: np.ndarray) -> np.ndarray:
    ta, tb = np.asarray(ta), np.asarray(tb)
    if ta.shape != tb.shape:
        raise ValueError(f"list lengths differ: {ta.size} vs {tb.size}")
    return ta == tb


def marks_to_str(t: np.ndarray) -> str:
    return "".join(PLUS if x else MINUS for x in np.asarray(t, dtype=bool))


def marks_from_str(text: str) -> np.ndarray:
    marks = [c for c in text if not c.isspace() and c not in ",{}"]
    if set(marks) - {PLUS, MINUS}:
        raise ValueError("match list may contain only '+' and '-'")
    return np.array([c == PLUS for c in marks], dtype=bool)


def select_f(j: int) -> FKind:
    """Pick the aggregation from the two low bits of block index ``j``."""
    if j < 1:
        raise ValueError(f"block index must be positive, got {j}")
    low = j & 0b11
    if low in (0b00, 0b11):
        return FKind.SUM
    if low == 0b10:
        return FKind.PRODUCT
    return FKind.MAX


def eval_f(kind: FKind, p: SetPartition, j: int) -> int:
    block = p.block(j)
    if kind is FKind.SUM:
        return sum(block)
    if kind is FKind.PRODUCT:
        return math.prod(block)
    return max(block)


def encode_values(values: Sequence[int]) -> np.ndarray:
    """8 bits per value, reduced mod 256, MSB first."""
    byte_vals = np.fromiter((v % 256 for v in values), dtype=np.uint8, count=len(values))
    return np.unpackbits(byte_vals)


@dataclass(frozen=True)
class KeyMaterial:
    f_kind: FKind
    values: tuple[int, ...]

    @property
    def bits(self) -> np.ndarray:
        return encode_values(self.values)

    @property
    def length(self) -> int:
        return 8 * len(self.values)

    def dump(self) -> str:
        return "\n".join(
            [f"f={self.f_kind.value}", " ".join(map(str, self.values)), bits_to_str(self.bits)]
        ) + "\n"

    @classmethod
    def parse(cls, text: str) -> KeyMaterial:
        lines = text.splitlines()
        if len(lines) < 2 or not lines[0].startswith("f="):
            raise ValueError("key dump must start with an 'f=' line")
        km = cls(FKind(lines[0][2:].strip()), tuple(int(v) for v in lines[1].split()))
        if len(lines) > 2 and lines[2].strip():
            if lines[2].strip() != bits_to_str(km.bits):
                raise ValueError("key dump bit line disagrees with its values")
        return km


def derive_key(p: SetPartition, own: np.ndarray, t: np.ndarray) -> KeyMaterial:
    """Apply f to the block behind every PLUS, in order.

    ``own`` is the caller's own block index list; at PLUS positions it equals
    the peer's list, so both sides derive the same key.
    """
    own = np.asarray(own)
    t = np.asarray(t, dtype=bool)
    if own.shape != t.shape:
        raise ValueError(f"list lengths differ: {own.size} vs {t.size}")
    hits = own[t]
    if hits.size == 0:
        raise NoMatch("match list has no PLUS mark")
    if hits.min() < 1 or hits.max() > p.k:
        raise PartitionError(f"block index outside 1..{p.k} at a PLUS position")
    kind = select_f(int(hits[0]))
    table = [0] + [eval_f(kind, p, j) for j in range(1, p.k + 1)]
    return KeyMaterial(kind, tuple(table[j] for j in hits.tolist()))
