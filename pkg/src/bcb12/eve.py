"""Exhaustive partition search against a recorded session.

Eve sees m, T_B, T and the ciphertext.  For every k-block partition of
[k], [k+1], ... she rebuilds the key Bob would have derived had that been the
shared secret, and keeps the distinct key prefixes.  A known plaintext
prefix (crib) flags the candidate that decrypts it correctly.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import FrameType, Transcript
from .keyder import FKind, select_f
from .partition import enumerate_partitions, stirling2
from .vernam import as_bits, bits_to_str

_NO_LIMIT = 2**63


@dataclass(frozen=True)
class AttackBudget:
    n_max: int
    max_partitions: int | None = None
    time_limit: float | None = None

    def __post_init__(self) -> None:
        for name in ("n_max", "max_partitions", "time_limit"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"budget {name} must be positive, got {value}")


@dataclass(frozen=True)
class SessionView:
    """The parts of a transcript Eve works from."""

    m: int
    tb: np.ndarray
    t: np.ndarray
    ciphertext: np.ndarray

    @classmethod
    def from_transcript(cls, transcript: Transcript) -> SessionView:
        latest = {}
        for frame in transcript.frames:
            latest[frame.type] = frame
        m_frame = latest.get(FrameType.RETRY) or latest.get(FrameType.PARAM_M)
        missing = [ft.name for ft in (FrameType.TB_LIST, FrameType.T_LIST, FrameType.CIPHERTEXT)
                   if ft not in latest]
        if m_frame is None or missing:
            raise ValueError(f"transcript lacks {missing or ['PARAM_M']}")
        view = cls(m_frame.m(), latest[FrameType.TB_LIST].indices(),
                   latest[FrameType.T_LIST].marks(), latest[FrameType.CIPHERTEXT].bits())
        if not view.m == view.tb.size == view.t.size:
            raise ValueError("transcript lists disagree with m")
        if not view.t.any():
            raise ValueError("transcript match list has no PLUS mark")
        return view


@dataclass
class AttackResult:
    k: int
    labelings: str = "canonical"
    examined: int = 0
    per_n: dict[int, int] = field(default_factory=dict)
    candidates: dict[str, tuple[int, tuple[int, ...]]] = field(default_factory=dict)
    elapsed: float = 0.0
    exhausted: bool = False
    hits: list[tuple[int, tuple[int, ...], str]] = field(default_factory=list)

    @property
    def hit(self) -> bool:
        return bool(self.hits)

    @property
    def stirling(self) -> dict[int, int]:
        return {n: stirling2(n, self.k) for n in self.per_n}

    def level_size(self, n: int) -> int:
        size = stirling2(n, self.k)
        return size * math.factorial(self.k) if self.labelings == "all" else size

    @property
    def throughput(self) -> float:
        return self.examined / self.elapsed if self.elapsed > 0 else 0.0

    def merge(self, other: AttackResult) -> AttackResult:
        """Combine results of disjoint slices of the same search."""
        if (self.k, self.labelings) != (other.k, other.labelings):
            raise ValueError("cannot merge results of different searches")
        per_n = dict(self.per_n)
        for n, c in other.per_n.items():
            per_n[n] = per_n.get(n, 0) + c
        candidates = dict(other.candidates)
        for key, origin in self.candidates.items():
            if key not in candidates or origin < candidates[key]:
                candidates[key] = origin
        return AttackResult(
            self.k, self.labelings, self.examined + other.examined, per_n, candidates,
            self.elapsed + other.elapsed, self.exhausted or other.exhausted,
            sorted(self.hits + other.hits),
        )


def _block_table(kind: FKind, block_of: np.ndarray, k: int) -> np.ndarray:
    # f of every block, reduced mod 256 since only the low byte is keyed.
    elems = np.arange(1, block_of.size + 1, dtype=np.int64)
    labels = block_of - 1
    if kind is FKind.SUM:
        table = np.bincount(labels, weights=elems, minlength=k).astype(np.int64)
    elif kind is FKind.MAX:
        table = np.zeros(k, dtype=np.int64)
        np.maximum.at(table, labels, elems)
    else:
        table = np.ones(k, dtype=np.int64)
        for e, j in zip(elems.tolist(), labels.tolist()):
            table[j] = table[j] * e % 256
    return (table % 256).astype(np.uint8)


def eve_enumerate_keys(
    transcript: Transcript | SessionView,
    k: int,
    budget: AttackBudget,
    crib=None,
    *,
    all_labelings: bool = False,
    stop_on_hit: bool = False,
) -> AttackResult:
    """Search k-block partitions of [k], [k+1], ..., [n_max] for the session key.

    By default each unordered partition is tried once, with blocks numbered in
    first-appearance order.  ``all_labelings`` also tries every renumbering of
    the blocks, which is what a shared secret with arbitrary block order needs.
    """
    view = transcript if isinstance(transcript, SessionView) else SessionView.from_transcript(transcript)
    if k < 1:
        raise ValueError("k must be positive")
    if view.tb.max() > k:
        raise ValueError(f"T_B holds block index {view.tb.max()} > k={k}")
    length = view.ciphertext.size
    plus_idx = view.tb[view.t]
    kind = select_f(int(plus_idx[0]))
    needed = (length + 7) // 8
    if needed > plus_idx.size:
        raise ValueError("ciphertext longer than any key this transcript can yield")
    plus_idx = plus_idx[:needed] - 1
    crib_bits = None if crib is None else as_bits(crib)
    if crib_bits is not None and crib_bits.size > length:
        raise ValueError("crib longer than ciphertext")

    result = AttackResult(k, "all" if all_labelings else "canonical")
    max_parts = budget.max_partitions or _NO_LIMIT
    deadline = None if budget.time_limit is None else time.perf_counter() + budget.time_limit
    perms = list(itertools.permutations(range(k))) if all_labelings else [None]
    start = time.perf_counter()

    def search() -> None:
        for n in range(k, budget.n_max + 1):
            result.per_n[n] = 0
            for part in enumerate_partitions(n, k, limit=_NO_LIMIT):
                rgs = np.asarray(part.block_of, dtype=np.int64)
                base = _block_table(kind, rgs, k)
                for perm in perms:
                    if result.examined >= max_parts or (deadline and time.perf_counter() > deadline):
                        result.exhausted = True
                        return
                    if perm is None:
                        table, labels = base, part.block_of
                    else:
                        order = np.asarray(perm)
                        table = np.empty_like(base)
                        table[order] = base
                        labels = tuple((order[rgs - 1] + 1).tolist())
                    key = np.unpackbits(table[plus_idx])[:length]
                    result.examined += 1
                    result.per_n[n] += 1
                    text = bits_to_str(key)
                    if text not in result.candidates:
                        result.candidates[text] = (n, labels)
                    if crib_bits is not None and np.array_equal(
                        view.ciphertext[: crib_bits.size] ^ key[: crib_bits.size], crib_bits
                    ):
                        result.hits.append((n, labels, text))
                        if stop_on_hit:
                            return

    search()
    result.elapsed = time.perf_counter() - start
    return result


def cumulative_counts(k: int, n_max: int, labelings: str = "canonical") -> list[tuple[int, int, int]]:
    """Rows ``(n, S(n,k), cumulative level sizes)`` for n = k..n_max."""
    factor = math.factorial(k) if labelings == "all" else 1
    rows, total = [], 0
    for n in range(k, n_max + 1):
        s = stirling2(n, k)
        total += s * factor
        rows.append((n, s, total))
    return rows


def _fmt_seconds(sec: float) -> str:
    if sec < 120:
        return f"{sec:.3g} s"
    for unit, size in (("years", 31_557_600), ("days", 86_400), ("hours", 3600), ("min", 60)):
        if sec >= size:
            return f"{sec / size:.3g} {unit}"
    return f"{sec:.3g} s"


def attack_report(result: AttackResult, target_n: int = 20) -> str:
    lines = [f"exhaustive search, k={result.k}, labelings={result.labelings}"]
    lines.append(f"{'n':>4} {'S(n,k)':>24} {'examined':>12} {'cumulative':>12}  hit")
    cumulative = 0
    hit_levels = {n for n, _, _ in result.hits}
    for n, count in sorted(result.per_n.items()):
        cumulative += count
        mark = "*" if n in hit_levels else ""
        lines.append(f"{n:>4} {stirling2(n, result.k):>24} {count:>12} {cumulative:>12}  {mark}")
    lines.append(f"partitions examined: {result.examined}")
    lines.append(f"distinct candidate keys: {len(result.candidates)}")
    if result.exhausted:
        lines.append("budget exhausted before the search completed")
    if result.hits:
        n, labels, key = result.hits[0]
        lines.append(f"crib hit at n={n}: block_of={list(labels)}")
        lines.append(f"  key prefix {key}")
    rate = result.throughput
    lines.append(f"throughput: {rate:.4g} partitions/s" if rate else "throughput: n/a")
    if result.k <= target_n and result.per_n:
        lines.append(f"extrapolation to n={target_n}:")
        lines.append(f"{'n':>4} {'S(n,k)':>24} {'cumulative':>28} {'est. time':>14}")
        for n, s, total in cumulative_counts(result.k, target_n, result.labelings):
            est = _fmt_seconds(total / rate) if rate else "-"
            lines.append(f"{n:>4} {s:>24} {total:>28} {est:>14}")
    return "\n".join(lines)
