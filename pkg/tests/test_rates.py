"""Analytic rate engine tests.

Centralized quantities are exact Fractions; decentralized ones are floats
compared to 1e-12 because they involve (1-M/N)^K.
"""

import math
from fractions import Fraction as Fr

import pytest

from gbcache.rates import (
    GbdRates,
    RateCurvePoint,
    ag_point,
    best_centralized_plan,
    convex_envelope,
    cutset_bound,
    f_cost,
    in_zeta,
    man_grid_points,
    r_best_centralized,
    r_cfl_point,
    r_gbc,
    r_gbd_analytic,
    r_gbd_coded_closed,
    r_man_c,
    r_man_d,
    r_uncoded,
    r_wtp_lb,
    t_hat,
    t_star,
)


class TestUncoded:
    def test_values(self):
        assert r_uncoded(3, 10, Fr(3, 10)) == Fr(27, 10)
        assert r_uncoded(5, 3, 1) == Fr(12, 5)
        assert r_uncoded(3, 10, 0) == 3
        assert r_uncoded(3, 10, 3) == 0

    def test_capacity_range(self):
        with pytest.raises(ValueError):
            r_uncoded(3, 10, 4)


class TestManCentralized:
    def test_grid_values(self):
        # K(1 - M/N) min{1/(1+KM/N), N/K} at M = tN/K
        assert r_man_c(3, 10, Fr(3, 10)) == Fr(27, 10)
        assert r_man_c(3, 10, Fr(3, 5)) == Fr(12, 5)
        assert r_man_c(3, 10, 0) == 3
        assert r_man_c(3, 10, 3) == 0
        assert r_man_c(2, 4, Fr(1, 2)) == Fr(3, 2)

    def test_between_grid_points_lower_hull(self):
        # independent oracle: minimum over all chords of grid anchors
        n, k, m = 3, 10, Fr(9, 20)
        pts = [(p.m, p.r) for p in man_grid_points(n, k)]
        chord = min(
            ra + (rb - ra) * (m - ma) / (mb - ma)
            for ma, ra in pts
            for mb, rb in pts
            if ma <= m <= mb and ma != mb
        )
        assert r_man_c(n, k, m) == chord == Fr(93, 40)

    def test_off_grid_capacities_follow_the_hull(self):
        # grid capacities return the closed form even where it sits above
        # the hull; every other capacity is memory sharing
        n, k = 4, 7
        pts = [(p.m, p.r) for p in man_grid_points(n, k)]
        for num in range(0, 29):
            m = Fr(num, 7)
            if (m * k / n).denominator == 1:
                continue
            chord = min(
                ra + (rb - ra) * (m - ma) / (mb - ma)
                for ma, ra in pts
                for mb, rb in pts
                if ma <= m <= mb and ma != mb
            )
            assert r_man_c(n, k, m) == chord

    def test_grid_value_may_sit_above_the_hull(self):
        # at (4,7), t=1 the min{} switch makes pure subset caching worse
        # than sharing between its neighbors; the formula still rules the grid
        assert r_man_c(4, 7, Fr(4, 7)) == 3
        assert r_man_c(4, 7, Fr(4, 7) + Fr(1, 1000)) < Fr(17, 6)

    def test_grid_points_cover_zero_to_n(self):
        pts = man_grid_points(3, 10)
        assert len(pts) == 11
        assert pts[0].m == 0 and pts[-1].m == 3
        assert pts[-1].r == 0


class TestSmallCacheAnchors:
    def test_cfl_point(self):
        assert r_cfl_point(3, 10) == Fr(27, 10)  # N(1 - 1/K)
        assert r_cfl_point(4, 6) == Fr(10, 3)
        with pytest.raises(ValueError):
            r_cfl_point(5, 3)

    def test_ag_point_inside_zeta(self):
        assert in_zeta(4, 6)
        assert ag_point(4, 6) == Fr(8, 3)

    def test_ag_point_rejected_outside_zeta(self):
        assert not in_zeta(3, 10)  # N < 4
        assert not in_zeta(30, 50)  # 2K > 3N
        assert not in_zeta(5, 7)  # coprime
        with pytest.raises(ValueError):
            ag_point(3, 10)

    @pytest.mark.parametrize("n,k", [(4, 6), (6, 9), (8, 12), (10, 15)])
    def test_zeta_membership(self, n, k):
        assert in_zeta(n, k)
        assert 4 <= n < k <= 3 * n / 2
        assert math.gcd(n, k) > 1


class TestAnchorSelection:
    def test_f_cost_is_sharing_value_at_group_capacity(self):
        # f(N,K,t) interpolates the small-cache anchor and subset anchor t,
        # evaluated at M = N/K; re-derive it from those endpoints
        for n, k, t in ((3, 10, 4), (50, 130, 4), (100, 200, 2), (5, 12, 3)):
            m_lo, r_lo = Fr(1, k), r_cfl_point(n, k)
            m_hi, r_hi = Fr(t * n, k), Fr(k - t, t + 1)
            mu = (Fr(n, k) - m_lo) / (m_hi - m_lo)
            assert f_cost(n, k, t) == r_lo + mu * (r_hi - r_lo)

    def test_t_star_values(self):
        assert t_star(50, 130) == 4
        assert t_star(30, 50) == 2
        assert t_star(3, 10) == 4
        assert t_star(100, 200) == 2

    @pytest.mark.parametrize("n,k", [(3, 10), (7, 19), (50, 130), (12, 40)])
    def test_t_star_is_argmin(self, n, k):
        best = t_star(n, k)
        costs = {t: f_cost(n, k, t) for t in range(1, k + 1) if t * n != 1}
        assert costs[best] == min(costs.values())
        # ties break toward the smaller t
        assert all(costs[t] > costs[best] for t in costs if t < best)

    def test_t_hat_floors_at_two(self):
        assert t_hat(30, 50) == 2
        assert t_hat(3, 10) == 4
        assert t_hat(2, 50) == max(2, t_star(2, 50))


class TestBestCentralizedBaseline:
    def test_anchor_layout_outside_zeta(self):
        plan = best_centralized_plan(3, 10)
        assert not plan.zeta_member
        schemes = [a.scheme for a in plan.anchors]
        assert schemes[:2] == ["uncoded", "cfl"]
        assert all(s == "man-c" for s in schemes[2:])
        assert plan.anchors[0].m == 0 and plan.anchors[0].r == 3
        assert plan.anchors[1].m == Fr(1, 10)
        # subset anchors start at t* = 4
        assert plan.anchors[2].m == Fr(4 * 3, 10)

    def test_anchor_layout_inside_zeta(self):
        plan = best_centralized_plan(4, 6)
        schemes = [a.scheme for a in plan.anchors]
        assert schemes[:3] == ["uncoded", "cfl", "ag"]
        assert plan.anchors[2].m == Fr(3, 6)
        assert plan.anchors[2].r == Fr(8, 3)

    def test_baseline_at_group_capacity(self):
        assert r_best_centralized(3, 10, Fr(3, 10)) == Fr(267, 110)
        assert r_best_centralized(3, 10, Fr(3, 10)) == f_cost(3, 10, 4)
        assert r_best_centralized(100, 200, Fr(1, 2)) == Fr(16484, 199)

    def test_group_scheme_beats_baseline_at_its_capacity(self):
        for n, k in ((3, 10), (50, 130), (100, 200), (30, 50)):
            m = Fr(n, k)
            assert r_gbc(n, k, m) < r_best_centralized(n, k, m)

    def test_more_files_than_users_uses_grid_alone(self):
        plan = best_centralized_plan(10, 3)
        assert plan.t_star is None and plan.t_hat is None
        assert [a.scheme for a in plan.anchors] == ["man-c"] * 4
        assert r_best_centralized(10, 3, 0) == 3  # min(N, K) files in the clear


class TestGroupRate:
    def test_endpoint_values(self):
        # N - N(N+1)/(2K) at M = N/K
        assert r_gbc(3, 10, Fr(3, 10)) == Fr(12, 5)
        assert r_gbc(100, 200, Fr(1, 2)) == Fr(299, 4)
        # subset anchor value at M = t_hat N/K
        assert r_gbc(3, 10, Fr(12, 10)) == Fr(6, 5)

    def test_small_cache_branch(self):
        # below N/K the curve is N(1 - M/2 - 1/(2K)), meeting the
        # small-cache anchor exactly at M = 1/K
        assert r_gbc(3, 10, Fr(1, 10)) == r_cfl_point(3, 10)
        assert r_gbc(3, 10, Fr(1, 5)) == 3 * (1 - Fr(1, 10) - Fr(1, 20))

    def test_interpolates_between_its_anchors(self):
        # (3,10): t_hat=4, so the segment runs (3/10, 12/5) -> (12/10, 6/5)
        assert r_gbc(3, 10, Fr(3, 4)) == Fr(9, 5)
        lo, hi = Fr(3, 10), Fr(12, 10)
        for num in (4, 7, 11):
            m = lo + (hi - lo) * Fr(num, 12)
            expect = Fr(12, 5) + (Fr(6, 5) - Fr(12, 5)) * Fr(num, 12)
            assert r_gbc(3, 10, m) == expect

    def test_domain(self):
        with pytest.raises(ValueError):
            r_gbc(5, 3, Fr(5, 3))  # needs N < K
        with pytest.raises(ValueError):
            r_gbc(3, 10, Fr(1, 20))  # below 1/K
        with pytest.raises(ValueError):
            r_gbc(3, 10, 2)  # above t_hat N/K

    @pytest.mark.parametrize("n,k", [(3, 10), (4, 9), (30, 50), (50, 130)])
    def test_beats_every_sharing_cost(self, n, k):
        rg = r_gbc(n, k, Fr(n, k))
        for t in range(1, k + 1):
            if t * n == 1:
                continue
            assert rg <= f_cost(n, k, t)


class TestDecentralizedRates:
    def test_man_d_values(self):
        assert r_man_d(3, 5, 1) == pytest.approx(1.7366255144032923, abs=1e-12)
        assert r_man_d(3, 5, 0) == 3.0
        assert r_man_d(3, 5, 3) == 0.0
        # Kq min{(N/KM)(1-q^K), N/K} with the first branch active
        assert r_man_d(3, 2, 1) == pytest.approx(2 * (2 / 3) * (3 / 2) * (5 / 9), rel=1e-12)

    def test_man_d_matches_simplified_form_in_first_branch(self):
        # K q (N/KM)(1-q^K) == (N/M - 1)(1 - q^K)
        for n, k, m in ((3, 5, 1), (5, 12, 1), (4, 20, 0.5)):
            q = 1 - m / n
            expect = (n / m - 1) * (1 - q**k)
            if n / (k * m) * (1 - q**k) <= n / k:
                assert r_man_d(n, k, m) == pytest.approx(expect, rel=1e-12)

    def test_gbd_parts_at_example(self):
        g = r_gbd_analytic(3, 5, 1)
        assert g.total == pytest.approx(1.4074074074074074, abs=1e-10)
        assert g.part1 == pytest.approx(3 * (2 / 3) ** 5, abs=1e-12)
        assert g.total == pytest.approx(g.part1 + g.part2 + g.part3, abs=1e-12)
        assert g.coded == pytest.approx(r_gbd_coded_closed(3, 5, 1), abs=1e-12)

    @pytest.mark.parametrize("n,k", [(3, 5), (5, 12), (30, 50), (4, 9)])
    def test_gbd_identities_on_grid(self, n, k):
        for num in range(1, 20):
            m = n * num / 20
            g = r_gbd_analytic(n, k, m)
            assert g.part1 + g.part2 + g.part3 == pytest.approx(g.coded, abs=1e-9)
            assert g.total == min(g.coded, g.random)
            # the uncoded fallback sends the missing fraction of every file
            assert g.random == pytest.approx(n * (1 - m / n), abs=1e-12)

    def test_gbd_closed_form_matches_part_sum(self):
        for n, k, m in ((3, 5, 1), (5, 12, 1), (30, 50, 3), (7, 11, 2.5)):
            g = r_gbd_analytic(n, k, m)
            q = 1 - m / n
            closed = (
                n / m
                - 1
                - ((k - n - 2) * (1 + (k - n - 1) * m / (2 * n)) + n / m) * q ** (k - 1)
            )
            assert g.coded == pytest.approx(closed, rel=1e-12)

    def test_gbd_edges(self):
        g0 = r_gbd_analytic(3, 5, 0)
        assert g0 == GbdRates(3.0, 3.0, 0.0, 0.0, 3.0, 3.0)
        gn = r_gbd_analytic(3, 5, 3)
        assert gn.total == 0.0

    def test_gbd_monotone_in_capacity(self):
        values = [r_gbd_analytic(5, 12, 5 * num / 50).total for num in range(0, 51)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


class TestBounds:
    def test_cutset_values(self):
        assert cutset_bound(3, 10, 1) == Fr(2, 3)  # s=1: 1 - M/3
        assert cutset_bound(3, 10, 0) == 3
        assert cutset_bound(3, 10, 3) == 0
        assert cutset_bound(4, 2, 1) == 1  # s=2: 2 - 2M/2 beats s=1's 3/4

    def test_cutset_is_max_over_s(self):
        n, k, m = 5, 8, Fr(3, 2)
        expect = max(
            s - Fr(s, 1) * m / (n // s) for s in range(1, min(n, k) + 1)
        )
        assert cutset_bound(n, k, m) == max(expect, 0)

    def test_wtp_values(self):
        assert r_wtp_lb(3, 10, Fr(3, 10)) == Fr(5, 2)
        assert r_wtp_lb(4, 8, 1) == 2

    def test_wtp_is_min_of_two_expressions(self):
        n, k, m = 6, 9, Fr(2, 3)
        first = n - m - m * (n - 1) * k * (n - m) / (n * n * (k - 1))
        second = Fr(k * (n - m), n + k * m)
        assert r_wtp_lb(n, k, m) == min(first, second)

    @pytest.mark.parametrize("n,k", [(3, 10), (4, 9), (6, 13)])
    def test_cutset_below_achievable(self, n, k):
        for num in range(0, 21):
            m = Fr(n * num, 20)
            cut = cutset_bound(n, k, m)
            assert cut <= r_man_c(n, k, m)
            assert cut <= r_uncoded(n, k, m)


class TestConvexEnvelope:
    def test_interpolates_vertices(self):
        env = convex_envelope(
            [
                RateCurvePoint(Fr(0), Fr(4), "a"),
                RateCurvePoint(Fr(1), Fr(2), "b"),
                RateCurvePoint(Fr(2), Fr(1), "c"),
            ]
        )
        assert env.value(Fr(0)) == 4
        assert env.value(Fr(1, 2)) == 3
        assert env.value(Fr(3, 2)) == Fr(3, 2)

    def test_drops_points_above_hull(self):
        env = convex_envelope(
            [
                RateCurvePoint(Fr(0), Fr(4), "a"),
                RateCurvePoint(Fr(1), Fr(4), "bump"),
                RateCurvePoint(Fr(2), Fr(0), "c"),
            ]
        )
        assert env.value(Fr(1)) == 2  # chord of the outer points

    def test_collinear_points_harmless(self):
        env = convex_envelope(
            [
                RateCurvePoint(Fr(0), Fr(2), "a"),
                RateCurvePoint(Fr(1), Fr(1), "b"),
                RateCurvePoint(Fr(2), Fr(0), "c"),
            ]
        )
        assert env.value(Fr(1, 2)) == Fr(3, 2)

    def test_duplicate_capacity_keeps_cheaper(self):
        env = convex_envelope(
            [
                RateCurvePoint(Fr(0), Fr(3), "a"),
                RateCurvePoint(Fr(0), Fr(2), "better"),
                RateCurvePoint(Fr(1), Fr(0), "c"),
            ]
        )
        assert env.value(Fr(0)) == 2

    def test_rejects_outside_range(self):
        env = convex_envelope(
            [RateCurvePoint(Fr(0), Fr(1), "a"), RateCurvePoint(Fr(1), Fr(0), "b")]
        )
        with pytest.raises(ValueError):
            env.value(Fr(2))

    def test_needs_a_point(self):
        with pytest.raises(ValueError):
            convex_envelope([])
