"""Closed-form delivery rates, lower bounds, and memory-sharing envelopes.

Centralized expressions are evaluated in exact rational arithmetic and
return :class:`fractions.Fraction`; the decentralized expressions involve
powers of (1 - M/N) and return floats.  Capacities given as float or str
are parsed decimally, so 0.3 means 3/10.

Memory sharing between achievable (M, R) points is modeled by the lower
convex hull of the anchor set, computed and evaluated exactly.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, NamedTuple

__all__ = [
    "RateCurvePoint",
    "PiecewiseEnvelope",
    "MemorySharingPlan",
    "GbdRates",
    "r_uncoded",
    "r_man_c",
    "man_grid_points",
    "r_cfl_point",
    "r_man_d",
    "in_zeta",
    "f_cost",
    "t_star",
    "t_hat",
    "ag_point",
    "best_centralized_plan",
    "r_best_centralized",
    "r_gbc",
    "r_wtp_lb",
    "r_gbd_analytic",
    "r_gbd_coded_closed",
    "cutset_bound",
    "convex_envelope",
]


def _frac(value) -> Fraction:
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


def _check_capacity(n: int, m: Fraction) -> None:
    if not 0 <= m <= n:
        raise ValueError("capacity must lie in [0, n_files]")


@dataclass(frozen=True)
class RateCurvePoint:
    """One sample of a rate-capacity trade-off curve."""

    m: Fraction
    r: Fraction
    scheme: str
    note: str = "point"


@dataclass(frozen=True)
class PiecewiseEnvelope:
    """Lower convex hull of a point set, evaluable at any covered capacity."""

    vertices: tuple[tuple[Fraction, Fraction], ...]

    @property
    def m_min(self) -> Fraction:
        return self.vertices[0][0]

    @property
    def m_max(self) -> Fraction:
        return self.vertices[-1][0]

    def value(self, m) -> Fraction:
        m = _frac(m)
        if not self.m_min <= m <= self.m_max:
            raise ValueError(f"capacity {m} outside envelope range")
        xs = [v[0] for v in self.vertices]
        i = bisect_right(xs, m)
        if i == len(xs):
            return self.vertices[-1][1]
        m1, r1 = self.vertices[i - 1]
        m2, r2 = self.vertices[i]
        if m == m1:
            return r1
        return r1 + (r2 - r1) * (m - m1) / (m2 - m1)

    __call__ = value


def convex_envelope(points: Iterable) -> PiecewiseEnvelope:
    """Lower convex hull of (capacity, rate) points, exact.

    Parameters
    ----------
    points : iterable
        ``RateCurvePoint`` instances or plain ``(m, r)`` pairs.  Duplicate
        capacities keep the smallest rate.

    Returns
    -------
    PiecewiseEnvelope
        Hull vertices sorted by capacity; evaluation interpolates linearly
        between adjacent vertices in exact arithmetic.
    """
    best: dict[Fraction, Fraction] = {}
    for p in points:
        if isinstance(p, RateCurvePoint):
            m, r = p.m, p.r
        else:
            m, r = p
        m, r = _frac(m), _frac(r)
        if m not in best or r < best[m]:
            best[m] = r
    if len(best) < 2:
        raise ValueError("need at least two points with distinct capacities")
    hull: list[tuple[Fraction, Fraction]] = []
    for m, r in sorted(best.items()):
        while len(hull) >= 2:
            m1, r1 = hull[-2]
            m2, r2 = hull[-1]
            # middle vertex on or above the new chord contributes nothing
            if (m2 - m1) * (r - r1) - (r2 - r1) * (m - m1) <= 0:
                hull.pop()
            else:
                break
        hull.append((m, r))
    return PiecewiseEnvelope(vertices=tuple(hull))


def r_uncoded(n: int, k: int, m) -> Fraction:
    """Rate of plain replication caching: K(1 - M/N) min{1, N/K}."""
    m = _frac(m)
    _check_capacity(n, m)
    return k * (1 - m / n) * min(Fraction(1), Fraction(n, k))


def _man_c_value(n: int, k: int, m: Fraction) -> Fraction:
    if m == n:
        return Fraction(0)
    return k * (1 - m / n) * min(1 / (1 + Fraction(k, n) * m), Fraction(n, k))


def man_grid_points(n: int, k: int) -> list[RateCurvePoint]:
    """The K+1 subset-scheme anchors at M = tN/K for t in [0:K]."""
    return [
        RateCurvePoint(
            m=Fraction(t * n, k), r=_man_c_value(n, k, Fraction(t * n, k)), scheme="man-c"
        )
        for t in range(k + 1)
    ]


@lru_cache(maxsize=None)
def _man_c_envelope(n: int, k: int) -> PiecewiseEnvelope:
    return convex_envelope(man_grid_points(n, k))


def r_man_c(n: int, k: int, m) -> Fraction:
    """Subset-scheme rate.

    Parameters
    ----------
    n, k : int
        Library and user counts.
    m : capacity
        At a grid capacity tN/K the closed form K(1 - M/N) min{1/(1+KM/N), N/K}
        is returned exactly; between grid points the value comes from the
        lower convex hull of the grid anchors (memory sharing).

    Returns
    -------
    Fraction
    """
    m = _frac(m)
    _check_capacity(n, m)
    t = m * k / n
    if t.denominator == 1 and 0 <= t <= k:
        return _man_c_value(n, k, m)
    return _man_c_envelope(n, k).value(m)


def r_cfl_point(n: int, k: int) -> Fraction:
    """Small-cache anchor N(1 - 1/K) at M = 1/K; defined for K >= N."""
    if k < n:
        raise ValueError("anchor applies when users outnumber files (K >= N)")
    return n * (1 - Fraction(1, k))


def r_man_d(n: int, k: int, m) -> float:
    """Decentralized subset-scheme rate K(1 - M/N) min{(N/KM)(1-(1-M/N)^K), N/K}."""
    m = float(_frac(m))
    if not 0 <= m <= n:
        raise ValueError("capacity must lie in [0, n_files]")
    if m == 0:
        return float(min(n, k))
    if m == n:
        return 0.0
    q = 1 - m / n
    return k * q * min(n / (k * m) * (1 - q**k), n / k)


def in_zeta(n: int, k: int) -> bool:
    """Membership in the parameter family 4 <= N < K <= 3N/2 with gcd(N,K) > 1."""
    return 4 <= n < k and 2 * k <= 3 * n and gcd(n, k) > 1


def f_cost(n: int, k: int, t: int) -> Fraction:
    """Memory-sharing cost used to pick the best subset-scheme anchor.

    Parameters
    ----------
    n, k : int
        Library and user counts.
    t : int
        Candidate anchor index, 1 <= t <= K (and tN != 1).

    Returns
    -------
    Fraction
        (N-1)(K-t) / ((t+1)(tN-1)) + N^2 (1-1/K)(t-1) / (tN-1).
    """
    if not 1 <= t <= k:
        raise ValueError("t must lie in [1, K]")
    if t * n == 1:
        raise ValueError("t*N = 1 is outside the formula's domain")
    return Fraction((n - 1) * (k - t), (t + 1) * (t * n - 1)) + Fraction(
        n * n * (k - 1) * (t - 1), k * (t * n - 1)
    )


@lru_cache(maxsize=None)
def t_star(n: int, k: int) -> int:
    """Minimizer of ``f_cost`` over t in [1:K]; ties go to the smaller t."""
    if n > k:
        raise ValueError("defined for N <= K")
    best_t = None
    best_v = None
    for t in range(1, k + 1):
        if t * n == 1:
            continue
        v = f_cost(n, k, t)
        if best_v is None or v < best_v:
            best_t, best_v = t, v
    return best_t


def t_hat(n: int, k: int) -> int:
    """max{2, t*}: the far anchor of the group-based piecewise trade-off."""
    return max(2, t_star(n, k))


def ag_point(n: int, k: int) -> Fraction:
    """Rate of the intermediate anchor at M = (N-1)/K, family zeta only."""
    if not in_zeta(n, k):
        raise ValueError("anchor defined only inside the zeta family")
    return n - Fraction(n, k) + Fraction((k - 2) * (k - 2 * n), 2 * k)


@dataclass(frozen=True)
class MemorySharingPlan:
    """Anchor points and hull defining the best centralized trade-off."""

    anchors: tuple[RateCurvePoint, ...]
    t_star: int | None
    t_hat: int | None
    zeta_member: bool
    envelope: PiecewiseEnvelope


@lru_cache(maxsize=None)
def best_centralized_plan(n: int, k: int) -> MemorySharingPlan:
    """Assemble the anchor set for the best known centralized envelope.

    N > K uses the subset-scheme grid alone.  Inside the zeta family the
    anchors are the no-cache point, the M = 1/K anchor, the intermediate
    anchor at M = (N-1)/K, and the subset grid (t >= 2 instead of t >= 1
    exactly when K = 3N/2).  Otherwise the anchors are the no-cache point,
    the M = 1/K anchor, and the subset grid from t* upward.
    """
    if n > k:
        anchors = tuple(man_grid_points(n, k))
        plan = MemorySharingPlan(
            anchors=anchors,
            t_star=None,
            t_hat=None,
            zeta_member=False,
            envelope=convex_envelope(anchors),
        )
        return plan
    ts = t_star(n, k)
    pts = [RateCurvePoint(m=Fraction(0), r=Fraction(min(n, k)), scheme="uncoded")]
    pts.append(RateCurvePoint(m=Fraction(1, k), r=r_cfl_point(n, k), scheme="cfl"))
    zeta = in_zeta(n, k)
    if zeta:
        pts.append(
            RateCurvePoint(m=Fraction(n - 1, k), r=ag_point(n, k), scheme="ag")
        )
        t_lo = 2 if 2 * k == 3 * n else 1
    else:
        t_lo = ts
    for t in range(t_lo, k + 1):
        mt = Fraction(t * n, k)
        pts.append(RateCurvePoint(m=mt, r=_man_c_value(n, k, mt), scheme="man-c"))
    return MemorySharingPlan(
        anchors=tuple(pts),
        t_star=ts,
        t_hat=max(2, ts),
        zeta_member=zeta,
        envelope=convex_envelope(pts),
    )


def r_best_centralized(n: int, k: int, m) -> Fraction:
    """Best known centralized rate at capacity m (see ``best_centralized_plan``)."""
    m = _frac(m)
    _check_capacity(n, m)
    return best_centralized_plan(n, k).envelope.value(m)


def r_gbc(n: int, k: int, m) -> Fraction:
    """Group-based centralized rate on 1/K <= M <= t-hat N/K, for N < K.

    Parameters
    ----------
    n, k : int
        Library and user counts, N < K.
    m : capacity
        Below N/K the value is N(1 - M/2 - 1/(2K)).  At N/K this equals
        N - N(N+1)/(2K).  Above N/K the curve is the memory-sharing
        segment from that point to the subset-scheme anchor at t-hat,
        whose rate is (K - t-hat)/(t-hat + 1).

    Returns
    -------
    Fraction

    Raises
    ------
    ValueError
        If N >= K or m falls outside [1/K, t-hat N/K].
    """
    if n >= k:
        raise ValueError("defined for N < K")
    m = _frac(m)
    th = t_hat(n, k)
    lo, mid, hi = Fraction(1, k), Fraction(n, k), Fraction(th * n, k)
    if not lo <= m <= hi:
        raise ValueError(f"capacity {m} outside [{lo}, {hi}]")
    if m <= mid:
        return n * (1 - m / 2 - Fraction(1, 2 * k))
    r_mid = n - Fraction(n * (n + 1), 2 * k)
    r_hi = Fraction(k - th, th + 1)
    return r_mid + (r_hi - r_mid) * (m - mid) / (hi - mid)


def r_wtp_lb(n: int, k: int, m) -> Fraction:
    """Lower bound on the rate of the pairwise-exchange scheme.

    min of N - M - M(N-1)K(N-M)/(N^2(K-1)) and K(N-M)/(N+KM).
    """
    m = _frac(m)
    if k < 2:
        raise ValueError("needs at least two users")
    if not 0 < m <= n:
        raise ValueError("capacity must lie in (0, n_files]")
    first = n - m - Fraction(m * (n - 1) * k, 1) * (n - m) / (n * n * (k - 1))
    second = Fraction(k, 1) * (n - m) / (n + k * m)
    return min(first, second)


class GbdRates(NamedTuple):
    """Analytic decomposition of the group-based decentralized rate."""

    total: float
    part1: float
    part2: float
    part3: float
    coded: float
    random: float


def r_gbd_coded_closed(n: int, k: int, m) -> float:
    """Single-expression form of the coded-procedure rate (N < K)."""
    mf = float(_frac(m))
    if mf == 0:
        return float(n)
    q = 1 - mf / n
    return (
        n / mf
        - 1
        - ((k - n - 2) * (1 + (k - n - 1) / 2 * mf / n) + n / mf) * q ** (k - 1)
    )


def r_gbd_analytic(n: int, k: int, m) -> GbdRates:
    """Per-part and total group-based decentralized rates, N < K.

    Parameters
    ----------
    n, k : int
        Library and user counts, N < K.
    m : capacity
        0 <= m <= N; m = 0 is handled as the limit (everything uncached).

    Returns
    -------
    GbdRates
        (total, part1, part2, part3, coded, random) where coded is the
        sum of the three parts, random is the uncached fraction N(1-M/N)
        under worst-case demands, and total is their minimum.
    """
    if n >= k:
        raise ValueError("defined for N < K")
    mf = float(_frac(m))
    if not 0 <= mf <= n:
        raise ValueError("capacity must lie in [0, n_files]")
    if mf == 0:
        fn = float(n)
        return GbdRates(total=fn, part1=fn, part2=0.0, part3=0.0, coded=fn, random=fn)
    p = mf / n
    q = 1 - p
    part1 = n * q**k
    part2 = (n * k - n * (n + 1) / 2) * p * q ** (k - 1)
    part3 = (
        -(k - 2) * q**k
        - 0.5 * (k - 2) * (k + 1) * p * q ** (k - 1)
        + (n / mf) * (1 - q ** (k - 1))
        - 1
    )
    coded = part1 + part2 + part3
    random = n * q
    return GbdRates(
        total=min(coded, random),
        part1=part1,
        part2=part2,
        part3=part3,
        coded=coded,
        random=random,
    )


def cutset_bound(n: int, k: int, m) -> Fraction:
    """Information-theoretic floor max_s (s - sM/floor(N/s)), clamped at 0."""
    m = _frac(m)
    _check_capacity(n, m)
    best = Fraction(0)
    for s in range(1, min(n, k) + 1):
        best = max(best, s - s * m / (n // s))
    return best
