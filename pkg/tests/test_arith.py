import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locdiv.arith import (
    Interval,
    IntervalBox,
    WeightedWindow,
    divisor_list,
    dk_segment,
    hooley_delta,
    sieve_dk,
    sieve_localized,
)

from oracles import hooley_all_pairs, localized_brute, ordered_tuples, trial_divisors


@pytest.mark.parametrize("n, expected", [(1, [1]), (7, [1, 7]), (12, [1, 2, 3, 4, 6, 12])])
def test_divisor_list_examples(n, expected):
    assert divisor_list(n) == expected


def test_divisor_list_large_and_errors():
    n = 2**61 - 1  # Mersenne prime
    assert divisor_list(n) == [1, n]
    assert divisor_list(2**62) == [2**e for e in range(63)]
    with pytest.raises(ValueError):
        divisor_list(0)
    with pytest.raises(OverflowError):
        divisor_list(2**62 + 1)


@given(st.integers(min_value=1, max_value=10**6))
def test_divisor_list_matches_trial_division(n):
    assert divisor_list(n) == trial_divisors(n)


def test_sieve_dk_examples():
    assert sieve_dk(5, 1).as_dict() == {6: 1, 7: 1, 8: 1, 9: 1, 10: 1}
    assert sieve_dk(2, 2).as_dict() == {3: 2, 4: 3}
    assert sieve_dk(2, 3)[4] == 6


def test_sieve_dk_errors():
    with pytest.raises(ValueError):
        sieve_dk(10, 0)
    with pytest.raises(ValueError):
        sieve_dk(0, 2)
    with pytest.raises(OverflowError):
        sieve_dk(2**40, 4096)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_dk_segment_against_tuple_count(k):
    got = dk_segment(0, 3000, k)
    assert [int(x) for x in got] == [ordered_tuples(n, k) for n in range(1, 3001)]


@given(st.integers(min_value=0, max_value=10**7), st.integers(min_value=1, max_value=200), st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_dk_segment_offsets(lo, size, k):
    got = dk_segment(lo, lo + size, k)
    assert [int(x) for x in got] == [ordered_tuples(n, k) for n in range(lo + 1, lo + size + 1)]


def test_sieve_localized_examples():
    assert sieve_localized(8, IntervalBox(2, (Interval(2, 3),)))[12] == 2
    assert sieve_localized(2, IntervalBox.full(2)).as_dict() == {3: 2, 4: 3}
    N = 37
    far = IntervalBox(3, (Interval(2 * N + 1, 2 * N + 2),) * 2)
    assert sieve_localized(N, far).total() == 0


boxes = st.integers(2, 4).flatmap(
    lambda k: st.tuples(
        st.just(k),
        st.lists(
            st.one_of(
                st.just((1, None)),
                st.integers(1, 40).flatmap(lambda lo: st.tuples(st.just(lo), st.one_of(st.none(), st.integers(lo, 80)))),
            ),
            min_size=k - 1,
            max_size=k - 1,
        ),
    )
)


@given(st.integers(1, 120), boxes)
@settings(max_examples=80, deadline=None)
def test_sieve_localized_brute(N, kb):
    k, ivs = kb
    box = IntervalBox(k, tuple(Interval(lo, hi) for lo, hi in ivs))
    assert sieve_localized(N, box).as_dict() == localized_brute(N, ivs)


@given(st.integers(1, 150), boxes, st.integers(0, 2), st.integers(1, 30))
@settings(max_examples=60, deadline=None)
def test_sieve_localized_monotone(N, kb, which, grow):
    k, ivs = kb
    box = IntervalBox(k, tuple(Interval(lo, hi) for lo, hi in ivs))
    i = which % (k - 1)
    lo, hi = ivs[i]
    bigger = list(ivs)
    bigger[i] = (max(1, lo - grow), None if hi is None else hi + grow)
    big = IntervalBox(k, tuple(Interval(a, b) for a, b in bigger))
    assert np.all(sieve_localized(N, big).weights >= sieve_localized(N, box).weights)


@pytest.mark.parametrize("k", [2, 3, 4])
@pytest.mark.parametrize("N", [1, 2, 17, 500, 2048])
def test_full_box_recovers_dk(N, k):
    assert np.array_equal(sieve_localized(N, IntervalBox.full(k)).weights, sieve_dk(N, k).weights)


@pytest.mark.parametrize("n, expected", [(1, 1), (2, 2), (3, 1), (12, 3)])
def test_hooley_examples(n, expected):
    assert hooley_delta(n) == expected


def test_hooley_errors():
    with pytest.raises(ValueError):
        hooley_delta(0)


@given(st.integers(1, 10**6))
@settings(max_examples=200)
def test_hooley_bounds_and_oracle(n):
    h = hooley_delta(n)
    assert 1 <= h <= len(divisor_list(n))
    assert h == hooley_all_pairs(n)


def test_hooley_highly_composite():
    # 720720 = 2^4 3^2 5 7 11 13 has 240 divisors
    assert hooley_delta(720720) == hooley_all_pairs(720720)


def test_window_serialization_roundtrip():
    w = sieve_dk(6, 3)
    assert w.to_csv().splitlines()[0] == "n,weight"
    assert w.to_csv().splitlines()[1] == f"7,{w[7]}"
    back = WeightedWindow.from_json(w.to_json())
    assert back.N == 6 and back.k == 3 and np.array_equal(back.weights, w.weights)


def test_window_invariants():
    with pytest.raises(ValueError):
        WeightedWindow(3, [1, 2])
    with pytest.raises(ValueError):
        WeightedWindow(2, [1, -1])
    w = WeightedWindow(3, [1, 2, 3])
    assert list(w.elements) == [4, 5, 6]
    with pytest.raises(KeyError):
        w[3]


def test_box_parsing_and_invariants():
    box = IntervalBox.parse("2:30,*,5:")
    assert box.k == 4
    assert str(box) == "2:30,*,5:"
    assert (3, 10**9, 5) in box and (1, 1, 5) not in box
    assert IntervalBox.parse("*", 3).is_full
    with pytest.raises(ValueError):
        IntervalBox(3, (Interval(),))
    with pytest.raises(ValueError):
        Interval(0, 4)
    with pytest.raises(ValueError):
        IntervalBox(1, ())
    assert 10**12 in Interval()
