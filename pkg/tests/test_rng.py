import pytest
from hypothesis import given
from hypothesis import strategies as st

from openxor.rng import MASK64, SplitMix64, Xoshiro256

u64 = st.integers(0, MASK64)


def test_splitmix64_reference_output() -> None:
    sm = SplitMix64(0)
    assert [sm.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


@given(u64)
def test_streams_are_reproducible(seed: int) -> None:
    a, b = Xoshiro256.stream(seed, 3), Xoshiro256.stream(seed, 3)
    assert [a.next_u64() for _ in range(8)] == [b.next_u64() for _ in range(8)]


def test_streams_differ_by_index() -> None:
    first = [Xoshiro256.stream(42, i).next_u64() for i in range(100)]
    assert len(set(first)) == len(first)


@given(u64, st.integers(1, 1000))
def test_below_stays_in_range(seed: int, bound: int) -> None:
    rng = Xoshiro256(seed)
    assert all(0 <= rng.below(bound) < bound for _ in range(20))


def test_below_rejects_empty_range() -> None:
    with pytest.raises(ValueError):
        Xoshiro256(1).below(0)


@given(u64, st.integers(0, 200))
def test_bits_are_taken_lsb_first(seed: int, n: int) -> None:
    words = Xoshiro256(seed)
    expected = []
    while len(expected) < n:
        word = words.next_u64()
        expected += [(word >> i) & 1 for i in range(min(64, n - len(expected)))]
    assert Xoshiro256(seed).bits(n) == expected


sizes = st.integers(1, 60).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n)))


@given(u64, sizes)
def test_sample_positions_are_distinct_and_sorted(
    seed: int, kn: tuple[int, int]
) -> None:
    k, n = kn
    positions = Xoshiro256(seed).sample_positions(k, n)
    assert len(positions) == k
    assert positions == sorted(set(positions))
    assert all(1 <= p <= n for p in positions)


def test_random_is_unit_interval() -> None:
    rng = Xoshiro256(7)
    values = [rng.random() for _ in range(1000)]
    assert all(0.0 <= v < 1.0 for v in values)
    assert 0.4 < sum(values) / len(values) < 0.6
