"""Centralized placement and delivery schemes on real bit arrays.

Two schemes live here.  The group-based scheme (GBC) targets the low-memory
point M = N/K: every user caches the same 1/K slice index of every file, and
delivery stitches the missing slices together with chains of pairwise XORs
inside each demand group plus one bridging XOR per group pair.  The subset
scheme (MAN) is the classical baseline at M = tN/K built on C(K, t) subfiles
indexed by t-subsets of users.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Sequence

import numpy as np

from .model import (
    CachePlacement,
    Database,
    ManSubfileRef,
    SubfileRef,
    SystemParams,
    Transcript,
    group_users,
    xor_payload,
)

__all__ = ["gbc_place", "gbc_deliver", "man_place", "man_deliver"]


def gbc_place(db: Database, params: SystemParams) -> CachePlacement:
    """Cache slice j of every file at user j.  Requires M = N/K and K | F."""
    n, k, f = params.n_files, params.n_users, params.file_len
    if params.cache_capacity != Fraction(n, k):
        raise ValueError("group-based placement needs cache capacity N/K")
    if f % k:
        raise ValueError("file length must be a multiple of the user count")
    seg = f // k
    per_user = []
    for j in range(1, k + 1):
        block = np.arange((j - 1) * seg, j * seg, dtype=np.int64)
        per_user.append({i: block for i in range(1, n + 1)})
    placement = CachePlacement(params=params, kind="gbc", positions=tuple(per_user))
    placement.validate_capacity()
    return placement


def gbc_deliver(db: Database, demands: Sequence[int], placement: CachePlacement) -> Transcript:
    """Group-based delivery.

    Users are regrouped by demanded file.  Part 1 sends a chain of XORs of
    adjacent members' slices inside each group, so each member can walk the
    chain from its own slice.  Part 2 handles every pair of non-empty groups
    (i, j): the chain of file i over group j's slices, the chain of file j
    over group i's slices, and a bridge XOR joining the two groups' last
    members.  Pairs touching an empty group are skipped entirely; their
    slices are owned by nobody, so no user needs them.
    """
    params = placement.params
    if placement.kind != "gbc":
        raise ValueError("placement was not produced by gbc_place")
    n, k, f = params.n_files, params.n_users, params.file_len
    if len(demands) != k:
        raise ValueError("demand vector length must equal the user count")
    grouping = group_users(demands, n)
    seg = f // k
    prefix = grouping.prefix

    def sub(file: int, position: int) -> SubfileRef:
        uid = grouping.user_at(position)
        return SubfileRef(file=file, part=uid, start=(uid - 1) * seg, length=seg)

    payloads = []
    for i in range(1, n + 1):
        for pos in range(prefix[i - 1] + 1, prefix[i]):
            payloads.append(xor_payload(db, (sub(i, pos), sub(i, pos + 1)), "part1"))
    for i in range(1, n):
        if grouping.group_sizes[i - 1] == 0:
            continue
        for j in range(i + 1, n + 1):
            if grouping.group_sizes[j - 1] == 0:
                continue
            for pos in range(prefix[j - 1] + 1, prefix[j]):
                payloads.append(xor_payload(db, (sub(i, pos), sub(i, pos + 1)), "part2"))
            for pos in range(prefix[i - 1] + 1, prefix[i]):
                payloads.append(xor_payload(db, (sub(j, pos), sub(j, pos + 1)), "part2"))
            bridge = (sub(i, prefix[j]), sub(j, prefix[i]))
            payloads.append(xor_payload(db, bridge, "part2"))
    return Transcript(
        payloads=tuple(payloads),
        file_len=f,
        scheme="gbc",
        meta={"procedure": "gbc", "demands": tuple(demands)},
    )


def _man_subsets(k: int, t: int) -> list[tuple[int, ...]]:
    return list(combinations(range(1, k + 1), t))


def man_place(db: Database, params: SystemParams, t: int) -> CachePlacement:
    """Cache, at each user, every subfile indexed by a t-subset containing it.

    Requires M = tN/K and K * C(K, t) | F so both the subfile length and the
    per-file cache share are whole numbers of bits.
    """
    n, k, f = params.n_files, params.n_users, params.file_len
    if not 0 <= t <= k:
        raise ValueError("subset size t must lie in [0, K]")
    if params.cache_capacity != Fraction(t * n, k):
        raise ValueError("subset placement needs cache capacity tN/K")
    if f % (k * comb(k, t)):
        raise ValueError("file length must be a multiple of K * C(K, t)")
    subsets = _man_subsets(k, t)
    seg = f // len(subsets)
    per_user: list[dict] = [dict() for _ in range(k)]
    for user in range(1, k + 1):
        slices = [
            np.arange(idx * seg, (idx + 1) * seg, dtype=np.int64)
            for idx, subset in enumerate(subsets)
            if user in subset
        ]
        if slices:
            block = np.concatenate(slices)
            for i in range(1, n + 1):
                per_user[user - 1][i] = block
    placement = CachePlacement(
        params=params, kind="man", positions=tuple(per_user), meta={"t": t}
    )
    placement.validate_capacity()
    return placement


def man_deliver(
    db: Database, demands: Sequence[int], placement: CachePlacement, t: int
) -> Transcript:
    """Subset delivery: one XOR per (t+1)-subset S, combining each member's
    demanded subfile indexed by the other members.

    Every subset is emitted, including those whose demands are already
    covered elsewhere, so the measured rate is exactly C(K,t+1)/C(K,t).
    """
    params = placement.params
    if placement.kind != "man" or placement.meta.get("t") != t:
        raise ValueError("placement was not produced by man_place at this t")
    n, k, f = params.n_files, params.n_users, params.file_len
    if len(demands) != k:
        raise ValueError("demand vector length must equal the user count")
    if min(demands) < 1 or max(demands) > n:
        raise ValueError("demand outside [1, n_files]")
    subsets = _man_subsets(k, t)
    index = {frozenset(s): i for i, s in enumerate(subsets)}
    seg = f // len(subsets) if subsets else 0
    payloads = []
    for s in combinations(range(1, k + 1), t + 1):
        ops = []
        for user in s:
            rest = frozenset(s) - {user}
            idx = index[rest]
            ops.append(
                ManSubfileRef(
                    file=demands[user - 1], users=rest, start=idx * seg, length=seg
                )
            )
        payloads.append(xor_payload(db, ops, "man"))
    return Transcript(
        payloads=tuple(payloads),
        file_len=f,
        scheme="man-c",
        meta={"procedure": "man", "t": t, "demands": tuple(demands)},
    )
