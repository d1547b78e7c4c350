import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spectra.perm_core import (
    CapExceededError,
    CycleParseError,
    FMSplit,
    MixingCycleError,
    Order,
    Partition,
    Permutation,
    all_permutations,
    apply,
    canonical_product,
    canonical_split,
    card_S_succsim,
    conjugate,
    enumerate_S_succsim,
    equiv,
    fm_compose_perm,
    fm_decompose_perm,
    format_cycles,
    meet,
    much_smaller,
    parse_cycles,
    partition_of_perm,
    partition_of_point,
    precsim,
    refines,
    same_block_size_type,
    set_partitions,
)

P = Partition


def perms(n):
    return st.permutations(list(range(1, n + 1))).map(Permutation)


# action -------------------------------------------------------------------


def test_apply_identity():
    assert apply(Permutation.identity(3), [7, 8, 9]).tolist() == [7, 8, 9]


def test_apply_three_cycle():
    # y_{sigma(i)} = x_i with sigma = 1->2->3->1
    assert apply(parse_cycles("(1 2 3)"), np.array(["a", "b", "c"])).tolist() == ["c", "a", "b"]


def test_apply_transposition():
    assert apply(parse_cycles("(1 2)"), [1.5, -2.0]).tolist() == [-2.0, 1.5]


def test_apply_batches_on_last_axis():
    s = parse_cycles("(1 2 3)")
    X = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(apply(s, X), np.vstack([apply(s, X[0]), apply(s, X[1])]))


def test_index_array_matches_apply():
    x = np.array([4.0, 1.0, 7.0, 2.0])
    for s in all_permutations(4):
        assert np.array_equal(x[s.index_array()], apply(s, x))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_group_action_exhaustive(n):
    x = np.arange(1.0, n + 1) ** 2
    ps = all_permutations(n)
    for s, t in itertools.product(ps, ps):
        assert np.array_equal(apply(s * t, x), apply(s, apply(t, x)))


@given(perms(6), perms(6))
def test_composition_and_inverse(s, t):
    assert (s * t)(1) == s(t(1))
    assert (s * s.inverse()).is_identity
    assert (s * t).inverse() == t.inverse() * s.inverse()


# partitions ------------------------------------------------------------


def test_partition_of_perm_examples():
    Q = partition_of_perm(parse_cycles("(123)(4)(5)"))
    assert Q == P([[1, 2, 3], [4], [5]])
    assert (Q.kappa, Q.m) == (2, 1)
    assert partition_of_perm(Permutation.identity(4)) == Partition.discrete(4)
    assert partition_of_perm(parse_cycles("(1 3 2)")) == P([[1, 2, 3]])


def test_partition_canonical_form():
    assert P([[3, 1], [2]]).blocks == ((1, 3), (2,))
    with pytest.raises(ValueError):
        P([[1, 2], [2, 3]])
    assert P.from_json(P([[2], [1, 3]]).to_json()) == P([[1, 3], [2]])


def test_partition_of_point_examples():
    assert partition_of_point([5, 5, 2]) == P([[1, 2], [3]])
    assert partition_of_point([1, 2, 3]) == Partition.discrete(3)
    assert partition_of_point([1.0, 1.0 + 1e-12, 3.0], 1e-9) == P([[1, 2], [3]])


def test_partition_of_point_single_linkage_chain():
    # 0 ~ 0.6e-9 ~ 1.2e-9 chain together although the ends differ by more than tol
    assert partition_of_point([0.0, 0.6e-9, 1.2e-9], 1e-9) == P([[1, 2, 3]])


@given(st.lists(st.integers(0, 3), min_size=1, max_size=7), perms(7))
def test_partition_of_point_permutation_covariant(vals, s):
    n = len(vals)
    s = Permutation([i for i in s.images if i <= n]) if n < 7 else s
    x = np.array(vals, float)
    Q = partition_of_point(x)
    Qs = partition_of_point(apply(s, x))
    assert Qs == P([[s(i) for i in b] for b in Q.blocks], n)


def test_refines_examples():
    assert refines(P([[1, 2, 3]]), P([[1], [2, 3]]))
    assert not refines(P([[1, 2], [3]]), P([[1], [2, 3]]))
    assert refines(P([[1, 2], [3]]), P([[1, 2], [3]]))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_refines_partial_order(n):
    parts = list(set_partitions(n))
    R = {(a, b): refines(a, b) for a in parts for b in parts}
    for a in parts:
        assert R[a, a]
        for b in parts:
            if R[a, b] and R[b, a]:
                assert a == b
            if R[a, b]:
                assert all(R[a, c] for c in parts if R[b, c])


def test_set_partition_counts_are_bell_numbers():
    assert [sum(1 for _ in set_partitions(n)) for n in range(1, 8)] == [1, 2, 5, 15, 52, 203, 877]


# orders ------------------------------------------------------------------


def test_precsim_and_equiv_examples():
    assert precsim(parse_cycles("(1,2,3)"), parse_cycles("(1,2)", 3))
    assert equiv(parse_cycles("(123)(4)"), parse_cycles("(132)(4)"))
    for s in all_permutations(4):
        assert precsim(s, Permutation.identity(4))


def test_same_block_size_type_examples():
    a = parse_cycles("(123)(4)")
    assert same_block_size_type(a, parse_cycles("(124)(3)"))
    assert not same_block_size_type(parse_cycles("(12)(34)"), parse_cycles("(1234)"))
    assert same_block_size_type(a, a)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_equiv_iff_same_block_preserving_group(n):
    ps = all_permutations(n)
    groups = {s: set(enumerate_S_succsim(s)) for s in ps}
    for s, t in itertools.product(ps, ps):
        assert equiv(s, t) == (groups[s] == groups[t])


def test_much_smaller_examples():
    base = parse_cycles("(1)(23)(45)(6)(7)")
    assert much_smaller(parse_cycles("(123)(45)(6)(7)"), base) is Order.MUCH_SMALLER
    assert much_smaller(parse_cycles("(167)(23)(45)"), base) is Order.SMALLER_NOT_MUCH
    assert much_smaller(base, base) is Order.NOT_SMALLER_OR_EQUIV


def test_much_smaller_not_much_steps_can_compose_to_much():
    s, s1, s2 = parse_cycles("(1)(2)(3)(45)"), parse_cycles("(1)(23)(45)"), parse_cycles("(123)(45)")
    assert much_smaller(s1, s) is Order.SMALLER_NOT_MUCH
    assert much_smaller(s2, s) is Order.SMALLER_NOT_MUCH
    assert much_smaller(s2, s1) is Order.MUCH_SMALLER


def test_much_smaller_incomparable():
    assert much_smaller(P([[1, 2], [3]]), P([[1], [2, 3]])) is Order.NOT_SMALLER_OR_EQUIV


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_not_much_smaller_transitive(n):
    parts = list(set_partitions(n))
    rel = {(a, b): much_smaller(a, b) for a in parts for b in parts}
    for a, b, c in itertools.product(parts, repeat=3):
        if rel[a, b] is Order.SMALLER_NOT_MUCH and rel[b, c] is Order.SMALLER_NOT_MUCH:
            assert rel[a, c] is Order.SMALLER_NOT_MUCH


def test_meet_examples():
    assert meet(P([[1, 2], [3]]), P([[1], [2, 3]])) == P([[1, 2, 3]])
    Q = P([[1, 2], [3]])
    assert meet(Q, Q) == Q
    assert meet(P([[1, 2], [3], [4]]), P([[1], [2], [3, 4]])) == P([[1, 2], [3, 4]])
    assert meet(parse_cycles("(12)", 3), parse_cycles("(23)", 3)) == P([[1, 2, 3]])


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_meet_is_finest_common_coarsening(n):
    parts = list(set_partitions(n))
    for a, b in itertools.product(parts, parts):
        m = meet(a, b)
        assert refines(m, a) and refines(m, b)
        for c in parts:
            if refines(c, a) and refines(c, b):
                assert refines(c, m)


def test_conjugate_examples():
    s = parse_cycles("(123)")
    assert conjugate(Permutation.identity(3), s) == s
    assert conjugate(parse_cycles("(12)", 3), s) == parse_cycles("(2 1 3)")
    for t in all_permutations(3):
        assert conjugate(t, Permutation.identity(3)).is_identity


@given(perms(5), perms(5))
def test_conjugate_moves_partition(t, s):
    c = conjugate(t, s)
    assert c == t * s * t.inverse()
    assert c.partition() == P([[t(i) for i in b] for b in s.partition().blocks], 5)


# block-preserving subgroup ---------------------------------------------


def test_s_succsim_examples():
    assert card_S_succsim(parse_cycles("(123)(4)(5)")) == 6
    assert enumerate_S_succsim(Permutation.identity(4)) == [Permutation.identity(4)]
    assert card_S_succsim(Permutation.identity(4)) == 1
    assert set(enumerate_S_succsim(parse_cycles("(1,2,3)"))) == set(all_permutations(3))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_card_matches_enumeration(n):
    for Q in set_partitions(n):
        group = enumerate_S_succsim(Q)
        assert card_S_succsim(Q) == len(group) == len(set(group))
        assert all(g.partition() == Q or refines(Q, g.partition()) for g in group)


def test_enumeration_cap(monkeypatch):
    monkeypatch.setenv("SPECTRA_CAP", "100")
    with pytest.raises(CapExceededError):
        enumerate_S_succsim(Partition.full(6))
    assert card_S_succsim(Partition.full(6)) == 720
    with pytest.raises(CapExceededError):
        all_permutations(6)


# cycle notation ----------------------------------------------------------


@pytest.mark.parametrize("text", ["(1 2 3)(4)", "(1,2,3)(4)", "(123)(4)", " (1, 2,3) (4) "])
def test_parse_cycles_forms(text):
    assert parse_cycles(text) == Permutation([2, 3, 1, 4])


def test_parse_omitted_fixed_points_and_identity():
    assert parse_cycles("(12)", 4) == Permutation([2, 1, 3, 4])
    assert parse_cycles("id", 3).is_identity
    assert parse_cycles("()", 2).is_identity


@pytest.mark.parametrize("text", ["(1 2", "1 2)", "(1 a)", "(1 2)(2 3)", "(1 5)"])
def test_parse_errors_carry_position(text):
    with pytest.raises(CycleParseError) as exc:
        parse_cycles(text, 3)
    assert exc.value.text == text
    assert exc.value.position >= 0


@given(perms(8))
def test_format_roundtrip(s):
    assert parse_cycles(format_cycles(s)) == s
    assert Permutation.from_json(s.to_json()) == s


# (F, M) split -------------------------------------------------------------


def test_fm_decompose_examples():
    s = parse_cycles("(1)(23)(4)(567)(8)")
    split = FMSplit.from_reference(s)
    assert split.f_indices == (1, 4, 8)
    sf, sm = fm_decompose_perm(s, split)
    assert sf.is_identity and sf.n == 3
    assert sm == parse_cycles("(12)(345)")
    assert fm_compose_perm(sf, sm, split) == s
    idf, idm = fm_decompose_perm(Permutation.identity(8), split)
    assert idf.is_identity and idm.is_identity and idm.n == 5


def test_fm_decompose_rejects_mixing_cycle():
    split = FMSplit.from_reference(parse_cycles("(1)(23)"))
    with pytest.raises(MixingCycleError):
        fm_decompose_perm(parse_cycles("(12)", 3), split)


def test_canonical_split_examples():
    split = FMSplit.from_reference(parse_cycles("(1)(23)(4)(567)(8)"))
    x = np.arange(1.0, 9.0)
    xf, xm = canonical_split(x, split)
    assert xf.tolist() == [1, 4, 8] and xm.tolist() == [2, 3, 5, 6, 7]
    a, b = ["a1", "a2", "a3"], ["b1", "b2", "b3", "b4", "b5"]
    assert canonical_product(np.array(a), np.array(b), split).tolist() == \
        ["a1", "b1", "b2", "a2", "b3", "b4", "b5", "a3"]
    full = FMSplit.from_reference(Partition.discrete(4))
    xf, xm = canonical_split(x[:4], full)
    assert xf.tolist() == [1, 2, 3, 4] and xm.size == 0


@given(st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, n - 1), min_size=n, max_size=n),
    st.lists(st.floats(-1e6, 1e6), min_size=n, max_size=n))))
def test_split_product_roundtrip(data):
    labels, vals = data
    labels = np.array(labels)
    Q = P([np.flatnonzero(labels == k) + 1 for k in np.unique(labels)], len(labels))
    split = FMSplit.from_reference(Q)
    x = np.array(vals)
    assert np.array_equal(canonical_product(*canonical_split(x, split), split), x)
