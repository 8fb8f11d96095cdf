from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcb12.errors import EnumerationLimitError, PartitionError
from bcb12.keyder import classify_sequence, compare_lists
from bcb12.partition import (
    SetPartition,
    block_index_of,
    canonical_form,
    enumerate_partitions,
    match_probability,
    new_partition,
    parse_partition,
    random_partition,
    serialize_partition,
    stirling2,
)

from oracles import brute_force_partitions, stirling_inclusion_exclusion


def test_worked_partition_is_valid(pi):
    assert (pi.n, pi.k) == (20, 13)
    assert block_index_of(pi, 6) == 7
    assert block_index_of(pi, 17) == 13
    assert pi.block(7) == (6, 8, 12)


def test_all_singletons():
    p = new_partition(3, 3, [1, 2, 3])
    assert p.blocks == ((1,), (2,), (3,))


@pytest.mark.parametrize(
    "n, k, block_of",
    [
        (3, 2, [1, 1, 1]),  # block 2 empty
        (3, 4, [1, 2, 3]),  # k > n
        (3, 2, [1, 2, 3]),  # index out of range
        (3, 2, [1, 2]),  # wrong length
        (3, 2, [0, 1, 2]),
    ],
)
def test_new_partition_rejects(n, k, block_of):
    with pytest.raises(PartitionError):
        new_partition(n, k, block_of)


@pytest.mark.parametrize("e, j", [(12, 7), (1, 1), (20, 9), (4, 13)])
def test_block_index_of(pi, e, j):
    assert block_index_of(pi, e) == j


def test_block_index_of_singletons():
    assert block_index_of(new_partition(6, 6, range(1, 7)), 5) == 5


@pytest.mark.parametrize("e", [0, 21, -3])
def test_block_index_of_out_of_range(pi, e):
    with pytest.raises(PartitionError):
        block_index_of(pi, e)


def test_random_partition_forced_cases():
    singles = random_partition(5, 5, 3)
    assert sorted(singles.blocks) == [(1,), (2,), (3,), (4,), (5,)]
    assert random_partition(5, 1, 3).block_of == (1,) * 5


def test_random_partition_deterministic():
    assert random_partition(20, 13, 11) == random_partition(20, 13, 11)
    assert random_partition(20, 13, 11) != random_partition(20, 13, 12)


def test_random_partition_rejects_k_above_n():
    with pytest.raises(PartitionError):
        random_partition(3, 4, 0)


@pytest.mark.parametrize("n, k", [(64, 60), (64, 64), (40, 38), (10, 3), (64, 1)])
def test_random_partition_uses_every_block(n, k):
    for seed in range(5):
        p = random_partition(n, k, seed)
        assert sorted(set(p.block_of)) == list(range(1, k + 1))


def test_random_partition_is_uniform_over_ordered_partitions():
    # n=4, k=2: 2! * S(4,2) = 14 ordered partitions, each should be equally likely.
    counts = {}
    rng = np.random.default_rng(5)
    draws = 14_000
    for _ in range(draws):
        p = random_partition(4, 2, rng)
        counts[p.block_of] = counts.get(p.block_of, 0) + 1
    assert len(counts) == 14
    expected = draws / 14
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert chi2 < 36.1  # chi-square 13 dof, p = 0.001


def test_canonical_option():
    p = random_partition(12, 5, 9, canonical=True)
    assert p.is_canonical()
    assert canonical_form(p) == p


def test_enumerate_small_cases():
    parts = list(enumerate_partitions(3, 2))
    assert [p.blocks for p in parts] == [((1, 2), (3,)), ((1, 3), (2,)), ((1,), (2, 3))]
    assert len(list(enumerate_partitions(4, 4))) == 1
    assert len(list(enumerate_partitions(4, 2))) == 7


@pytest.mark.parametrize("n", range(1, 8))
def test_enumerate_matches_brute_force(n):
    for k in range(1, n + 1):
        got = [p.block_of for p in enumerate_partitions(n, k)]
        assert got == brute_force_partitions(n, k)


def test_enumeration_order_strictly_increasing():
    for n in range(1, 9):
        for k in range(1, n + 1):
            seq = [p.block_of for p in enumerate_partitions(n, k)]
            assert all(a < b for a, b in zip(seq, seq[1:]))
            assert all(SetPartition(n, k, rgs).is_canonical() for rgs in seq)


def test_enumeration_guard():
    with pytest.raises(EnumerationLimitError):
        next(enumerate_partitions(20, 13))
    with pytest.raises(PartitionError):
        next(enumerate_partitions(3, 5))


def test_stirling_values():
    assert stirling2(4, 2) == 7
    assert [stirling2(n, n) for n in range(13)] == [1] * 13
    assert stirling2(0, 0) == 1
    assert stirling2(5, 0) == 0
    assert stirling2(3, 7) == 0
    # frozen from the inclusion-exclusion oracle
    assert stirling2(20, 13) == 61068660380
    assert [stirling2(n, 13) for n in range(13, 17)] == [1, 91, 4550, 165620]


@pytest.mark.parametrize("n", [0, 1, 5, 17, 30, 64, 120])
def test_stirling_against_closed_form(n):
    for k in range(0, n + 1):
        assert stirling2(n, k) == stirling_inclusion_exclusion(n, k)


def test_stirling_large_n_does_not_recurse_deeply():
    assert stirling2(2000, 1) == 1
    assert stirling2(2000, 2) == 2**1999 - 1


def test_match_probability(pi):
    assert match_probability(pi) == Fraction(38, 400)
    assert match_probability(new_partition(7, 7, range(1, 8))) == Fraction(1, 7)
    assert match_probability(new_partition(7, 1, [1] * 7)) == 1


def test_match_probability_matches_empirical_rate():
    p = random_partition(30, 6, 4)
    q = float(match_probability(p))
    rng = np.random.default_rng(8)
    r = 200_000
    t = compare_lists(classify_sequence(p, rng.integers(1, 31, r)),
                      classify_sequence(p, rng.integers(1, 31, r)))
    se = (q * (1 - q) / r) ** 0.5
    assert abs(t.mean() - q) < 3 * se


def test_serialize_worked_partition(pi):
    text = serialize_partition(pi)
    assert text.splitlines()[0] == "n=20 k=13"
    assert text.splitlines()[7] == "7: 6 8 12"
    assert parse_partition(text) == pi


@pytest.mark.parametrize(
    "text",
    [
        "n=3 k=2\n1: 1 2\n2: 2 3\n",  # duplicate element
        "n=3 k=2\n1: 1\n2: 3\n",  # missing element
        "n=3 k=2\n1: 1 2 3\n",  # too few block lines
        "n=3 k=2\n2: 1 2\n1: 3\n",  # out of order
        "n=3 k=2\n1: 2 1\n2: 3\n",  # not ascending
        "n=3\n1: 1 2\n2: 3\n",  # bad header
        "n=3 k=2\n1: 1 x\n2: 3\n",
        "n=3 k=2\n1: 1 2\n2:\n",  # empty block
        "",
    ],
)
def test_parse_rejects(text):
    with pytest.raises(PartitionError):
        parse_partition(text)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 64).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n), st.integers(0, 2**32))))
def test_serialize_round_trip(args):
    n, k, seed = args
    p = random_partition(n, k, seed)
    assert parse_partition(serialize_partition(p)) == p
