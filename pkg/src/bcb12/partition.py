"""Ordered set partitions of [n] into k blocks.

A partition is stored as ``block_of``: for every element ``e`` in ``1..n`` the
1-based index of the block that holds it.  Block order is part of the value,
so two partitions with the same blocks listed in a different order are
different secrets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import EnumerationLimitError, PartitionError

ENUMERATION_LIMIT = 10**7

# Below this chance of drawing a surjection, rejection sampling is abandoned.
_MIN_ACCEPT_RATE = 1e-3


@dataclass(frozen=True)
class SetPartition:
    n: int
    k: int
    block_of: tuple[int, ...] = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "block_of", tuple(int(j) for j in self.block_of))
        if self.n < 1:
            raise PartitionError(f"n must be positive, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise PartitionError(f"need 1 <= k <= n, got n={self.n} k={self.k}")
        if len(self.block_of) != self.n:
            raise PartitionError(
                f"block_of has {len(self.block_of)} entries, expected {self.n}"
            )
        for e, j in enumerate(self.block_of, start=1):
            if not 1 <= j <= self.k:
                raise PartitionError(f"element {e} assigned to block {j}, outside 1..{self.k}")
        used = set(self.block_of)
        if len(used) != self.k:
            missing = sorted(set(range(1, self.k + 1)) - used)
            raise PartitionError(f"empty block(s): {missing}")

    def __repr__(self) -> str:
        return f"SetPartition(n={self.n}, k={self.k}, blocks={list(map(list, self.blocks))})"

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]], n: int | None = None) -> SetPartition:
        """Build from an ordered list of blocks; block ``j`` is ``blocks[j-1]``."""
        if n is None:
            n = sum(len(b) for b in blocks)
        block_of = [0] * n
        for j, block in enumerate(blocks, start=1):
            for e in block:
                if not 1 <= e <= n:
                    raise PartitionError(f"element {e} outside 1..{n}")
                if block_of[e - 1]:
                    raise PartitionError(f"element {e} appears in more than one block")
                block_of[e - 1] = j
        missing = [e for e, j in enumerate(block_of, start=1) if j == 0]
        if missing:
            raise PartitionError(f"elements missing from every block: {missing}")
        return cls(n, len(blocks), tuple(block_of))

    @cached_property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for e, j in enumerate(self.block_of, start=1):
            out[j - 1].append(e)
        return tuple(tuple(b) for b in out)

    @cached_property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @cached_property
    def lookup(self) -> np.ndarray:
        """Element -> block index table; slot 0 is unused and holds 0."""
        table = np.zeros(self.n + 1, dtype=np.int64)
        table[1:] = self.block_of
        table.flags.writeable = False
        return table

    def block(self, j: int) -> tuple[int, ...]:
        if not 1 <= j <= self.k:
            raise PartitionError(f"block index {j} outside 1..{self.k}")
        return self.blocks[j - 1]

    def is_canonical(self) -> bool:
        """True when blocks are numbered in order of their smallest element."""
        return canonical_form(self) == self


def new_partition(n: int, k: int, block_of: Sequence[int]) -> SetPartition:
    return SetPartition(n, k, tuple(block_of))


def block_index_of(p: SetPartition, e: int) -> int:
    if not 1 <= e <= p.n:
        raise PartitionError(f"element {e} outside 1..{p.n}")
    return p.block_of[e - 1]


def canonical_form(p: SetPartition) -> SetPartition:
    """Relabel blocks by order of first appearance (restricted growth string)."""
    relabel: dict[int, int] = {}
    rgs = []
    for j in p.block_of:
        if j not in relabel:
            relabel[j] = len(relabel) + 1
        rgs.append(relabel[j])
    return SetPartition(p.n, p.k, tuple(rgs))


def random_partition(
    n: int, k: int, seed: int | np.random.Generator | None = None, *, canonical: bool = False
) -> SetPartition:
    """Draw a random k-block partition of [n].

    Labels are drawn uniformly from ``{1..k}^n`` and redrawn until every block
    is used, which is uniform over ordered partitions.  When surjections are
    too rare for that to terminate quickly, one element is placed in each block
    first and the rest are assigned uniformly; that fallback is not uniform.
    With ``canonical=True`` the result is relabeled into first-appearance order.
    """
    if not 1 <= k <= n:
        raise PartitionError(f"need 1 <= k <= n, got n={n} k={k}")
    rng = np.random.default_rng(seed)
    accept = Fraction(math.factorial(k) * stirling2(n, k), k**n)
    if accept >= _MIN_ACCEPT_RATE:
        while True:
            labels = rng.integers(1, k + 1, size=n)
            if len(np.unique(labels)) == k:
                break
    else:
        labels = rng.integers(1, k + 1, size=n)
        seeds = rng.permutation(n)[:k]
        labels[seeds] = np.arange(1, k + 1)
    p = SetPartition(n, k, tuple(labels.tolist()))
    return canonical_form(p) if canonical else p


@lru_cache(maxsize=None)
def _stirling_row(n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    prev = _stirling_row(n - 1) + (0,)
    return (0,) + tuple(j * prev[j] + prev[j - 1] for j in range(1, n + 1))


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind S(n, k)."""
    if n < 0 or k < 0:
        raise ValueError("n and k must be non-negative")
    if k > n:
        return 0
    # fill the cache bottom-up so deep n does not recurse
    for i in range(0, n, 256):
        _stirling_row(i)
    return _stirling_row(n)[k]


def _rgs(n: int, k: int) -> Iterator[tuple[int, ...]]:
    # Restricted growth strings over 1..k using every label, in lex order.
    a = [0] * n

    def rec(i: int, mx: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            yield tuple(a)
            return
        remaining = n - i - 1
        for label in range(1, min(mx + 1, k) + 1):
            if max(mx, label) + remaining < k:
                continue
            a[i] = label
            yield from rec(i + 1, max(mx, label))

    yield from rec(0, 0)


def enumerate_partitions(
    n: int, k: int, limit: int = ENUMERATION_LIMIT
) -> Iterator[SetPartition]:
    """Yield every k-block partition of [n] once, in RGS lexicographic order."""
    if not 1 <= k <= n:
        raise PartitionError(f"need 1 <= k <= n, got n={n} k={k}")
    count = stirling2(n, k)
    if count > limit:
        raise EnumerationLimitError(f"S({n},{k}) = {count} exceeds limit {limit}")
    for rgs in _rgs(n, k):
        yield SetPartition(n, k, rgs)


def match_probability(p: SetPartition) -> Fraction:
    """Chance that two independent uniform draws from [n] land in the same block."""
    return Fraction(sum(s * s for s in p.sizes), p.n * p.n)


def serialize_partition(p: SetPartition) -> str:
    lines = [f"n={p.n} k={p.k}"]
    for j, block in enumerate(p.blocks, start=1):
        lines.append(f"{j}: " + " ".join(map(str, block)))
    return "\n".join(lines) + "\n"


def parse_partition(text: str) -> SetPartition:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise PartitionError("empty partition text")
    header = lines[0].split()
    try:
        fields = dict(item.split("=", 1) for item in header)
        n, k = int(fields["n"]), int(fields["k"])
    except (ValueError, KeyError) as exc:
        raise PartitionError(f"bad header line: {lines[0]!r}") from exc
    if len(header) != 2:
        raise PartitionError(f"bad header line: {lines[0]!r}")
    body = lines[1:]
    if len(body) != k:
        raise PartitionError(f"expected {k} block lines, found {len(body)}")
    blocks = []
    for expected_j, line in enumerate(body, start=1):
        label, sep, rest = line.partition(":")
        try:
            j = int(label)
            elems = [int(tok) for tok in rest.split()]
        except ValueError as exc:
            raise PartitionError(f"bad block line: {line!r}") from exc
        if not sep or j != expected_j:
            raise PartitionError(f"block lines must be numbered 1..{k} in order: {line!r}")
        if elems != sorted(elems):
            raise PartitionError(f"block {j} elements not ascending")
        blocks.append(elems)
    return SetPartition.from_blocks(blocks, n=n)


def read_partition(path) -> SetPartition:
    with open(path, encoding="utf-8") as fh:
        return parse_partition(fh.read())


def write_partition(p: SetPartition, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_partition(p))
