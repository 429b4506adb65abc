import math
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncprob import (
    DimensionMismatchError,
    OrderViolationError,
    Partition,
    SizeOutOfRangeError,
    SpecFormatError,
    ValidationError,
    catalan,
    enumerate_nc,
    is_noncrossing,
    join_nc,
    leq,
    moebius,
    parse_partition,
)


# -- independent oracles -------------------------------------------------------


def all_set_partitions(n):
    """Brute-force: every restricted growth string of length n."""
    if n == 0:
        return
    def extend(rgs):
        if len(rgs) == n:
            yield tuple(rgs)
            return
        for label in range(max(rgs) + 2):
            yield from extend(rgs + [label])
    for rgs in extend([0]):
        yield Partition.from_rgs(rgs)


def has_crossing_quadruple(p):
    """Direct quadruple scan, independent of the pairwise block check."""
    owner = {}
    for idx, block in enumerate(p.blocks):
        for x in block:
            owner[x] = idx
    for i, j, k, l in combinations(range(1, p.n + 1), 4):
        if owner[i] == owner[k] and owner[j] == owner[l] and owner[i] != owner[j]:
            return True
    return False


def catalan_formula(n):
    return math.comb(2 * n, n) // (n + 1)


# -- enumeration ----------------------------------------------------------------


def test_singleton_ground_set():
    assert enumerate_nc(1) == (Partition.top(1),)


def test_n3_partitions():
    texts = {str(p) for p in enumerate_nc(3)}
    assert texts == {"{1}{2}{3}", "{1,2}{3}", "{1,3}{2}", "{1}{2,3}", "{1,2,3}"}


def test_n4_count_and_absent_crossing():
    parts = enumerate_nc(4)
    assert len(parts) == 14
    assert Partition.of(4, [[1, 3], [2, 4]]) not in parts


@pytest.mark.parametrize("n", range(1, 11))
def test_counts_match_catalan(n):
    assert len(enumerate_nc(n)) == catalan_formula(n)


@pytest.mark.parametrize("n", range(1, 7))
def test_matches_brute_force_filter(n):
    expected = {p for p in all_set_partitions(n) if not has_crossing_quadruple(p)}
    assert set(enumerate_nc(n)) == expected


def test_enumeration_order_is_rgs_lex():
    for n in (3, 4, 5):
        strings = [p.rgs() for p in enumerate_nc(n)]
        assert strings == sorted(strings)
        assert len(set(strings)) == len(strings)


def test_size_out_of_range():
    with pytest.raises(SizeOutOfRangeError):
        enumerate_nc(0)
    with pytest.raises(SizeOutOfRangeError):
        enumerate_nc(13)


# -- crossing predicate ----------------------------------------------------------


def test_is_noncrossing_examples():
    assert not is_noncrossing(Partition.of(4, [[1, 3], [2, 4]]))
    assert is_noncrossing(Partition.of(4, [[1, 4], [2, 3]]))
    for n in range(1, 8):
        assert is_noncrossing(Partition.top(n))


@pytest.mark.parametrize("n", range(1, 7))
def test_is_noncrossing_matches_quadruple_scan(n):
    for p in all_set_partitions(n):
        assert is_noncrossing(p) == (not has_crossing_quadruple(p))


def test_partition_validation():
    with pytest.raises(ValidationError):
        Partition.of(3, [[1, 2]])  # not covering
    with pytest.raises(ValidationError):
        Partition.of(3, [[1, 2], [2, 3]])  # overlap
    with pytest.raises(ValidationError):
        Partition.of(2, [[1], [2], [3]])  # out of range


# -- order and join ---------------------------------------------------------------


def test_leq_examples():
    assert leq(Partition.of(3, [[1, 2], [3]]), Partition.top(3))
    assert not leq(Partition.of(3, [[1, 2], [3]]), Partition.of(3, [[1, 3], [2]]))
    for p in enumerate_nc(4):
        assert leq(Partition.bottom(4), p)
    with pytest.raises(DimensionMismatchError):
        leq(Partition.bottom(2), Partition.bottom(3))


def test_leq_is_partial_order_exhaustive():
    for n in (2, 3, 4):
        elems = enumerate_nc(n)
        for p in elems:
            assert leq(p, p)
        for p in elems:
            for q in elems:
                if leq(p, q) and leq(q, p):
                    assert p == q
                for r in elems:
                    if leq(p, q) and leq(q, r):
                        assert leq(p, r)


def test_join_examples():
    for p in enumerate_nc(4):
        assert join_nc(Partition.bottom(4), p) == p
    forced = join_nc(
        Partition.of(4, [[1, 3], [2], [4]]), Partition.of(4, [[2, 4], [1], [3]])
    )
    assert forced == Partition.top(4)
    disjoint = join_nc(
        Partition.of(4, [[1, 2], [3], [4]]), Partition.of(4, [[3, 4], [1], [2]])
    )
    assert disjoint == Partition.of(4, [[1, 2], [3, 4]])


def test_join_laws_exhaustive():
    for n in (3, 4):
        elems = enumerate_nc(n)
        for p in elems:
            assert join_nc(p, p) == p
            for q in elems:
                j = join_nc(p, q)
                assert j == join_nc(q, p)
                assert leq(p, j) and leq(q, j)
                assert is_noncrossing(j)
                # least upper bound: nothing strictly smaller works
                for r in elems:
                    if leq(p, r) and leq(q, r):
                        assert leq(j, r)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5).flatmap(
    lambda n: st.tuples(
        st.sampled_from(enumerate_nc(n)),
        st.sampled_from(enumerate_nc(n)),
        st.sampled_from(enumerate_nc(n)),
    )
))
def test_join_associative(triple):
    p, q, r = triple
    assert join_nc(join_nc(p, q), r) == join_nc(p, join_nc(q, r))


# -- Moebius -----------------------------------------------------------------------


def test_moebius_base_and_small():
    for p in enumerate_nc(4):
        assert moebius(p, p) == 1
    assert moebius(Partition.bottom(2), Partition.top(2)) == -1


@pytest.mark.parametrize("n", range(1, 7))
def test_moebius_full_interval_formula(n):
    expected = (-1) ** (n - 1) * catalan_formula(n - 1)
    assert moebius(Partition.bottom(n), Partition.top(n)) == expected


@pytest.mark.parametrize("n", range(2, 6))
def test_moebius_defining_identity(n):
    elems = enumerate_nc(n)
    for sigma in elems:
        for pi in elems:
            if sigma != pi and leq(sigma, pi):
                total = sum(
                    moebius(sigma, tau)
                    for tau in elems
                    if leq(sigma, tau) and leq(tau, pi)
                )
                assert total == 0


def test_moebius_errors():
    with pytest.raises(OrderViolationError):
        moebius(Partition.top(3), Partition.bottom(3))
    with pytest.raises(DimensionMismatchError):
        moebius(Partition.bottom(2), Partition.top(3))
    with pytest.raises(ValidationError):
        moebius(Partition.of(4, [[1, 3], [2, 4]]), Partition.top(4))


# -- text form ----------------------------------------------------------------------


def test_parse_and_format():
    p = parse_partition("{1,3}{2}{4}")
    assert p == Partition.of(4, [[1, 3], [2], [4]])
    assert str(p) == "{1,3}{2}{4}"
    assert parse_partition(" { 1 , 3 } { 2 } { 4 } ") == p


@pytest.mark.parametrize("text", ["", "{1,3}{4}", "{}", "{0,1}", "{1,1}", "1,2", "{a}"])
def test_parse_rejects(text):
    with pytest.raises(SpecFormatError):
        parse_partition(text)


def test_catalan_helper():
    assert [catalan(n) for n in range(7)] == [1, 1, 2, 5, 14, 42, 132]
