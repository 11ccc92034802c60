"""Selector bitstreams, restriction, and index traces."""

import math

import numpy as np
import pytest

from idealconv import (SelectorExhausted, complement_selector, derive_seed,
                       explicit_selector, index_trace, parse_sequence_spec,
                       parse_set_spec, restrict, sample_selector,
                       selector_frequency, default_schedule)

import oracles


class TestDeterminism:
    def test_fixed_seed_reproduces_bits(self):
        a = sample_selector(1234).bits(1, 10 ** 4 + 1)
        b = sample_selector(1234).bits(1, 10 ** 4 + 1)
        assert (a == b).all()

    def test_bits_match_reference_mixer(self):
        got = sample_selector(77).bits(1, 257)
        assert got.tolist() == oracles.coin_bits_ref(77, 256)

    def test_distinct_seeds_differ(self):
        a = sample_selector(1).bits(1, 1001)
        b = sample_selector(2).bits(1, 1001)
        assert (a != b).any()

    def test_derive_seed_is_stateless(self):
        assert derive_seed(99, 3) == derive_seed(99, 3)
        assert derive_seed(99, 3) != derive_seed(99, 4)
        assert derive_seed(99, 3) == oracles.splitmix_ref(99, 4)


class TestExplicitBits:
    def test_alternating_bits_select_odds(self):
        s = explicit_selector([1, 0] * 50)
        assert s.selected_between(1, 101).tolist() == list(range(1, 101, 2))

    def test_prefix_exhaustion(self):
        s = explicit_selector([1, 0, 1])
        with pytest.raises(SelectorExhausted):
            s.bits(1, 10)

    def test_not_non_terminating(self):
        assert explicit_selector([1, 1]).non_terminating is False
        assert sample_selector(0).non_terminating is True


class TestFrequency:
    def test_fair_coin_frequency(self):
        est = selector_frequency(sample_selector(2718), 10 ** 6)
        assert abs(est.trace[-1].value - 0.5) < 0.002

    def test_envelope_for_shipped_seeds(self):
        sched = default_schedule(10 ** 6)
        for seed in range(20):
            est = selector_frequency(sample_selector(seed), 10 ** 6, sched)
            for cv in est.trace[sched.tail_slice()]:
                bound = 5.0 * cv.n ** -0.5 * math.sqrt(math.log(cv.n))
                assert abs(cv.value - 0.5) < bound


class TestComplement:
    def test_bit_flip(self):
        s = explicit_selector([1, 1, 0, 0])
        c = complement_selector(s)
        assert c.bits(1, 5).tolist() == [0, 0, 1, 1]

    def test_double_complement_is_identity(self):
        s = sample_selector(5)
        cc = complement_selector(complement_selector(s))
        assert (s.bits(1, 1001) == cc.bits(1, 1001)).all()

    def test_partition_of_initial_segment(self):
        s = sample_selector(987)
        c = complement_selector(s)
        a = s.selected_between(1, 10 ** 4 + 1)
        b = c.selected_between(1, 10 ** 4 + 1)
        assert len(np.intersect1d(a, b)) == 0
        assert np.array_equal(np.union1d(a, b), np.arange(1, 10 ** 4 + 1))

    def test_ones_counts_complementary(self):
        s = sample_selector(55)
        c = complement_selector(s)
        ns = np.array([10, 100, 1000], dtype=np.int64)
        assert (s.ones_count_at(ns) + c.ones_count_at(ns) == ns).all()


class TestRestrict:
    def test_identity_through_odd_bits(self):
        x = parse_sequence_spec("identity")
        s = explicit_selector([1, 0] * 500)
        y = restrict(x, s)
        got = y.values(np.arange(1, 11, dtype=np.int64)).tolist()
        assert got == [1, 3, 5, 7, 9, 11, 13, 15, 17, 19]

    def test_all_ones_is_identity_restriction(self):
        x = parse_sequence_spec("alternating")
        s = explicit_selector([1] * 200)
        y = restrict(x, s)
        idx = np.arange(1, 201, dtype=np.int64)
        assert np.array_equal(y.values(idx), x.values(idx))

    def test_even_selector_freezes_alternating(self):
        x = parse_sequence_spec("alternating")
        s = explicit_selector([0, 1] * 300)
        y = restrict(x, s)
        vals = y.values(np.arange(1, 101, dtype=np.int64))
        assert (vals == 1.0).all()

    def test_restriction_is_idempotent_under_all_ones(self):
        x = parse_sequence_spec("spike:squares:2:alternating")
        s = sample_selector(31)
        y = restrict(x, s)
        z = restrict(y, explicit_selector([1] * 500))
        idx = np.arange(1, 501, dtype=np.int64)
        assert np.array_equal(z.values(idx), y.values(idx))

    def test_exhaustion_on_short_prefix(self):
        x = parse_sequence_spec("identity")
        y = restrict(x, explicit_selector([1, 0, 1]))
        with pytest.raises(SelectorExhausted):
            y.values(np.array([3], dtype=np.int64))

    def test_exhaustion_below_materialization_bound(self):
        x = parse_sequence_spec("identity")
        y = restrict(x, sample_selector(1), materialization_horizon=64)
        with pytest.raises(SelectorExhausted):
            y.values(np.array([60], dtype=np.int64))


class TestIndexTrace:
    def test_squares_positions_concentrate_at_half(self):
        s = sample_selector(314159)
        w = parse_set_spec("squares", 10 ** 8)  # ten thousand members
        est = index_trace(s, w)
        assert abs(est.trace[-1].value - 0.5) < 0.02

    def test_bits_at_arbitrary_positions_match_reference(self):
        s = sample_selector(11)
        idx = np.array([1, 4, 9, 10 ** 7], dtype=np.int64)
        want = [1 if oracles.splitmix_ref(11, int(i)) < (1 << 63) else 0
                for i in idx]
        assert s.bits_at(idx).tolist() == want

    def test_all_ones_selector_gives_exactly_one(self):
        s = explicit_selector([1] * 1000)
        w = parse_set_spec("naturals", 1000)
        est = index_trace(s, w)
        assert est.upper == 1.0 and est.lower == 1.0

    def test_zero_prefix_gives_zero(self):
        s = explicit_selector([0] * 1000)
        w = parse_set_spec("naturals", 1000)
        est = index_trace(s, w)
        assert est.upper == 0.0

    def test_full_set_trace_equals_selector_frequency(self):
        s = sample_selector(404)
        w = parse_set_spec("naturals", 10 ** 4)
        sched = default_schedule(10 ** 4)
        a = index_trace(s, w, sched)
        b = selector_frequency(s, 10 ** 4, sched)
        assert [cv.value for cv in a.trace] == [cv.value for cv in b.trace]

    def test_empty_window_rejected(self):
        s = sample_selector(1)
        from idealconv import SubsetWindow
        with pytest.raises(ValueError):
            index_trace(s, SubsetWindow.from_members([], horizon=10))
