import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcb12.errors import NoMatch, PartitionError
from bcb12.keyder import (
    FKind,
    KeyMaterial,
    classify_sequence,
    compare_lists,
    derive_key,
    encode_values,
    eval_f,
    marks_from_str,
    marks_to_str,
    select_f,
)
from bcb12.partition import SetPartition, new_partition, random_partition
from bcb12.vernam import bits_to_str

from oracles import naive_key


def test_classify_prefixes(pi):
    assert classify_sequence(pi, [12, 1, 4, 8, 10]).tolist() == [7, 1, 13, 7, 5]
    assert classify_sequence(pi, [6, 15, 20]).tolist() == [7, 11, 9]
    singles = new_partition(3, 3, [1, 2, 3])
    assert classify_sequence(singles, [3, 1, 2]).tolist() == [3, 1, 2]


@pytest.mark.parametrize("bad", [[0], [21], [3, 4, 99]])
def test_classify_rejects_out_of_range(pi, bad):
    with pytest.raises(PartitionError):
        classify_sequence(pi, bad)


def test_compare_lists():
    t = compare_lists(np.array([7, 1, 3]), np.array([7, 11, 3]))
    assert marks_to_str(t) == "+-+"
    assert compare_lists(np.arange(5), np.arange(5)).all()
    with pytest.raises(ValueError):
        compare_lists(np.arange(4), np.arange(5))


def test_marks_round_trip():
    assert marks_to_str(marks_from_str("{+, -, -, +}")) == "+--+"
    with pytest.raises(ValueError):
        marks_from_str("+-x")


@pytest.mark.parametrize(
    "j, kind",
    [(7, FKind.SUM), (2, FKind.PRODUCT), (1, FKind.MAX), (4, FKind.SUM), (3, FKind.SUM),
     (6, FKind.PRODUCT), (13, FKind.MAX), (12, FKind.SUM)],
)
def test_select_f(j, kind):
    assert select_f(j) is kind


def test_select_f_depends_only_on_low_two_bits():
    for j in range(1, 200):
        assert select_f(j) is select_f(j % 4 + 4)


def test_eval_f(pi):
    assert eval_f(FKind.SUM, pi, 7) == 26
    assert eval_f(FKind.SUM, pi, 11) == 50
    assert eval_f(FKind.MAX, pi, 11) == 19
    assert eval_f(FKind.PRODUCT, pi, 11) == 15 * 16 * 19
    assert eval_f(FKind.PRODUCT, pi, 9) == 20


def test_singleton_blocks_agree_across_kinds(pi):
    for j, block in enumerate(pi.blocks, start=1):
        if len(block) == 1:
            assert len({eval_f(kind, pi, j) for kind in FKind}) == 1


def test_encode_values():
    assert bits_to_str(encode_values([26])) == "00011010"
    assert bits_to_str(encode_values([0])) == "00000000"
    assert bits_to_str(encode_values([300])) == format(300 % 256, "08b") == "00101100"
    assert encode_values([]).size == 0


def test_derive_key_single_max():
    # block 1 = {9} is the only match, j=1 -> MAX
    p = SetPartition.from_blocks([[9], [1, 2, 3, 4, 5, 6, 7, 8]])
    km = derive_key(p, np.array([2, 1, 2]), np.array([False, True, False]))
    assert km.f_kind is FKind.MAX
    assert km.values == (9,)
    assert bits_to_str(km.bits) == "00001001"
    assert naive_key([list(b) for b in p.blocks], [2, 1, 2], "-+-")[1:] == ([9], "00001001")


def test_derive_key_no_match():
    p = new_partition(3, 3, [1, 2, 3])
    with pytest.raises(NoMatch):
        derive_key(p, np.array([1, 2]), np.array([False, False]))


def test_derive_key_product_wraps_mod_256():
    p = SetPartition.from_blocks([[1], [15, 16, 19], *[[e] for e in range(2, 15)], [17], [18], [20]])
    km = derive_key(p, np.array([2]), np.array([True]))
    assert km.f_kind is FKind.PRODUCT
    assert km.values == (4560,)
    assert bits_to_str(km.bits) == format(4560 % 256, "08b")


def test_key_dump_round_trip(pi):
    km = KeyMaterial(FKind.SUM, (26, 50, 21))
    text = km.dump()
    assert text.splitlines() == ["f=SUM", "26 50 21", "000110100011001000010101"]
    assert KeyMaterial.parse(text) == km
    with pytest.raises(ValueError):
        KeyMaterial.parse("f=SUM\n26\n00000000\n")


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 40).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(1, n), st.integers(0, 2**32), st.integers(1, 300))))
def test_both_sides_derive_the_same_key(args):
    n, k, seed, m = args
    rng = np.random.default_rng(seed)
    p = random_partition(n, k, rng)
    ta = classify_sequence(p, rng.integers(1, n + 1, m))
    tb = classify_sequence(p, rng.integers(1, n + 1, m))
    t = compare_lists(ta, tb)
    kind, values, bit_str = naive_key([list(b) for b in p.blocks], ta.tolist(), marks_to_str(t))
    if kind is None:
        with pytest.raises(NoMatch):
            derive_key(p, ta, t)
        return
    ka, kb = derive_key(p, ta, t), derive_key(p, tb, t)
    assert ka == kb
    assert ka.f_kind.value == kind
    assert list(ka.values) == values
    assert bits_to_str(ka.bits) == bits_to_str(kb.bits) == bit_str
    assert ka.length == 8 * int(t.sum())
