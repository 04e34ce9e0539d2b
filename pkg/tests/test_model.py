"""Core data-model tests: parameters, demands, grouping, segments, payloads."""

from fractions import Fraction

import numpy as np
import pytest

from gbcache import (
    ClassRef,
    ParityRef,
    SubfileRef,
    SystemParams,
    Transcript,
    group_users,
    make_database,
    partition_subfiles,
    read_segment,
    transcript_stats,
    worst_case_demands,
    xor_payload,
)
from gbcache.model import CachePlacement


def small_params(n=3, k=10, m=Fraction(3, 10), f=20):
    return SystemParams(n_files=n, n_users=k, cache_capacity=m, file_len=f)


class TestSystemParams:
    def test_capacity_parsed_decimally(self):
        # float capacities mean their printed decimal, not the binary float
        p = SystemParams(n_files=3, n_users=10, cache_capacity=0.3, file_len=10)
        assert p.cache_capacity == Fraction(3, 10)

    def test_capacity_accepts_fraction_and_string(self):
        p = SystemParams(n_files=5, n_users=4, cache_capacity="5/4", file_len=8)
        assert p.cache_capacity == Fraction(5, 4)

    def test_bit_budget_floors(self):
        p = SystemParams(n_files=3, n_users=4, cache_capacity=Fraction(1, 3), file_len=10)
        assert p.cache_bit_budget == 3

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_files=0, n_users=1, cache_capacity=0, file_len=1),
            dict(n_files=1, n_users=0, cache_capacity=0, file_len=1),
            dict(n_files=1, n_users=1, cache_capacity=0, file_len=0),
            dict(n_files=2, n_users=1, cache_capacity=3, file_len=1),
            dict(n_files=2, n_users=1, cache_capacity=-1, file_len=1),
        ],
    )
    def test_rejects_bad_instances(self, kwargs):
        with pytest.raises(ValueError):
            SystemParams(**kwargs)


class TestDatabase:
    def test_shape_and_determinism(self):
        p = small_params()
        a = make_database(p, seed=7)
        b = make_database(p, seed=7)
        assert a.bits.shape == (3, 20)
        assert a.bits.dtype == np.uint8
        assert np.array_equal(a.bits, b.bits)
        assert set(np.unique(a.bits)) <= {0, 1}

    def test_seed_changes_bits(self):
        p = small_params(f=256)
        a = make_database(p, seed=0)
        b = make_database(p, seed=1)
        assert not np.array_equal(a.bits, b.bits)

    def test_file_bits_is_one_based(self):
        p = small_params()
        db = make_database(p, seed=3)
        assert np.array_equal(db.file_bits(1), db.bits[0])
        assert np.array_equal(db.file_bits(3), db.bits[2])


class TestWorstCaseDemands:
    def test_fewer_files_balanced_low_indices_first(self):
        # 10 users over 3 files: sizes 4,3,3 with the big group on file 1
        assert worst_case_demands(3, 10) == (1, 1, 1, 1, 2, 2, 2, 3, 3, 3)
        assert worst_case_demands(4, 9) == (1, 1, 1, 2, 2, 3, 3, 4, 4)
        assert worst_case_demands(2, 3) == (1, 1, 2)

    def test_enough_files_all_distinct(self):
        assert worst_case_demands(5, 5) == (1, 2, 3, 4, 5)
        assert worst_case_demands(9, 4) == (1, 2, 3, 4)


class TestGroupUsers:
    def test_identity_when_sorted(self):
        g = group_users((1, 1, 2, 2, 3))
        assert g.group_sizes == (2, 2, 1)
        assert g.prefix == (0, 2, 4, 5)
        assert g.user_order == (1, 2, 3, 4, 5)
        assert list(g.group_positions(2)) == [3, 4]
        assert g.user_at(5) == 5

    def test_stable_within_group(self):
        # ties keep original user order
        g = group_users((2, 1, 2, 1))
        assert g.user_order == (2, 4, 1, 3)
        assert g.group_sizes == (2, 2)

    def test_empty_groups_tracked(self):
        g = group_users((3, 3, 1), n_files=4)
        assert g.group_sizes == (1, 0, 2, 0)
        assert g.demanded_files() == (1, 3)
        assert list(g.group_positions(2)) == []

    @pytest.mark.parametrize("demands", [(), (0, 1), (1, 4)])
    def test_rejects_bad_demands(self, demands):
        with pytest.raises(ValueError):
            group_users(demands, n_files=3)


class TestSegments:
    def test_partition_subfiles_covers_file(self):
        p = small_params(n=2, k=4, m=Fraction(1, 2), f=12)
        refs = partition_subfiles(p, file=2)
        assert [r.part for r in refs] == [1, 2, 3, 4]
        assert [r.start for r in refs] == [0, 3, 6, 9]
        assert all(r.length == 3 for r in refs)

    def test_partition_requires_divisibility(self):
        p = small_params(n=2, k=4, m=Fraction(1, 2), f=10)
        with pytest.raises(ValueError):
            partition_subfiles(p, file=1)

    def test_read_segment_matches_slices(self):
        p = small_params(n=2, k=4, m=Fraction(1, 2), f=12)
        db = make_database(p, seed=5)
        ref = partition_subfiles(p, 1)[2]
        assert np.array_equal(read_segment(db, ref), db.bits[0, 6:9])
        cls = ClassRef(2, frozenset({1, 3}), np.array([0, 5, 7]))
        assert np.array_equal(read_segment(db, cls), db.bits[1, [0, 5, 7]])

    def test_read_segment_rejects_opaque_refs(self):
        p = small_params()
        db = make_database(p, seed=0)
        with pytest.raises(TypeError):
            read_segment(db, ParityRef(file=1, n_rows=4, seed=0, file_len=20))


class TestXorPayload:
    def test_zero_padding_to_longest_operand(self):
        p = small_params(n=2, k=2, m=1, f=8)
        db = make_database(p, seed=11)
        a = ClassRef(1, frozenset({1}), np.array([0, 1, 2]))
        b = ClassRef(2, frozenset({2}), np.array([4]))
        pay = xor_payload(db, (a, b), "part2")
        assert pay.n_bits == 3
        expect = db.bits[0, [0, 1, 2]].copy()
        expect[0] ^= db.bits[1, 4]
        assert np.array_equal(pay.data, expect)

    def test_rejects_duplicate_operands(self):
        p = small_params(n=2, k=4, m=Fraction(1, 2), f=8)
        db = make_database(p, seed=0)
        ref = partition_subfiles(p, 1)[0]
        with pytest.raises(ValueError):
            xor_payload(db, (ref, ref), "part1")

    def test_keys_follow_operand_order(self):
        p = small_params(n=2, k=4, m=Fraction(1, 2), f=8)
        db = make_database(p, seed=0)
        refs = partition_subfiles(p, 1)
        pay = xor_payload(db, (refs[1], refs[0]), "part1")
        assert pay.keys() == (("sub", 1, 2), ("sub", 1, 1))


class TestTranscript:
    def test_stats_tally_by_label(self):
        p = small_params(n=2, k=4, m=Fraction(1, 2), f=8)
        db = make_database(p, seed=2)
        refs = partition_subfiles(p, 1)
        pays = (
            xor_payload(db, (refs[0], refs[1]), "part1"),
            xor_payload(db, (refs[1], refs[2]), "part1"),
            xor_payload(db, (refs[2], refs[3]), "part2"),
        )
        tx = Transcript(payloads=pays, file_len=8, scheme="gbc")
        stats = transcript_stats(tx)
        assert stats.bits == {"part1": 4, "part2": 2}
        assert stats.payloads == {"part1": 2, "part2": 1}
        assert stats.total_bits == 6
        assert stats.rate == Fraction(6, 8)
        assert tx.rate == Fraction(3, 4)


class TestCachePlacement:
    def test_capacity_validation(self):
        p = SystemParams(n_files=2, n_users=1, cache_capacity=Fraction(1, 4), file_len=8)
        ok = CachePlacement(
            params=p, kind="random", positions=({1: np.array([0, 1])},)
        )
        ok.validate_capacity()
        over = CachePlacement(
            params=p, kind="random", positions=({1: np.array([0, 1, 2])},)
        )
        with pytest.raises(ValueError):
            over.validate_capacity()

    def test_missing_file_yields_empty_positions(self):
        p = SystemParams(n_files=2, n_users=1, cache_capacity=1, file_len=8)
        pl = CachePlacement(params=p, kind="random", positions=({1: np.array([3])},))
        assert pl.cached_positions(1, 2).size == 0
        assert pl.bits_used(1) == 1
