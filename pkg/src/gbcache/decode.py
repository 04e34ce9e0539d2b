"""Scheme-independent peeling decoder and end-to-end verifier.

The decoder knows nothing about how a transcript was produced.  It works
from what a payload declares about itself: the list of segment references
it XORs together.  A segment is known to a user if the user's cache holds
every one of its bit positions, if it has zero length, or if it was
resolved from an earlier payload.  Any payload with exactly one unknown
operand yields that operand (truncating the zero-padding), and the
process repeats to fixpoint, so the result is independent of payload
order.

Random-procedure payloads are not XORs of segments.  Parity payloads are
solved by elimination over GF(2) using the combination matrix implied by
their reference.  Accounting payloads carry no bits at all; decoding them
is taken on faith and flagged as modeled in the report, never silently
counted as a bit-exact success.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    BulkRef,
    CachePlacement,
    Database,
    ParityRef,
    Transcript,
)

__all__ = [
    "UserCache",
    "extract_cache",
    "ReconstructedFile",
    "peel_decode",
    "UserReport",
    "DecodeReport",
    "verify_all",
    "gf2_solve",
]


@dataclass(frozen=True)
class UserCache:
    """One user's cache contents: sorted positions and bit values per file."""

    user: int
    n_files: int
    file_len: int
    positions: tuple[np.ndarray, ...]
    bits: tuple[np.ndarray, ...]

    def file_positions(self, file: int) -> np.ndarray:
        return self.positions[file - 1]

    def file_bits(self, file: int) -> np.ndarray:
        return self.bits[file - 1]


def extract_cache(db: Database, placement: CachePlacement, user: int) -> UserCache:
    """Copy the bits a placement stores at one user."""
    params = placement.params
    positions = []
    bits = []
    for file in range(1, params.n_files + 1):
        pos = placement.cached_positions(user, file)
        positions.append(pos)
        bits.append(db.bits[file - 1, pos].copy())
    return UserCache(
        user=user,
        n_files=params.n_files,
        file_len=params.file_len,
        positions=tuple(positions),
        bits=tuple(bits),
    )


def _cache_lookup(cache: UserCache, ref) -> np.ndarray | None:
    """Bits of ``ref`` if the cache covers all its positions, else None."""
    want = ref.positions
    if want.size == 0:
        return np.empty(0, dtype=np.uint8)
    have = cache.file_positions(ref.file)
    if have.size == 0:
        return None
    idx = np.searchsorted(have, want)
    idx_ok = idx < have.size
    if not idx_ok.all() or not np.array_equal(have[idx], want):
        return None
    return cache.file_bits(ref.file)[idx]


def gf2_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Unique solution of a x = b over GF(2), or None.

    None means the system is rank-deficient in the unknowns or
    inconsistent; both are reported upstream as a decode failure.
    """
    a = a.astype(np.uint8).copy()
    b = b.astype(np.uint8).copy()
    rows, cols = a.shape
    if cols == 0:
        return np.empty(0, dtype=np.uint8)
    if rows < cols:
        return None
    for c in range(cols):
        sel = np.nonzero(a[c:, c])[0]
        if sel.size == 0:
            return None
        p = c + int(sel[0])
        if p != c:
            a[[c, p]] = a[[p, c]]
            b[[c, p]] = b[[p, c]]
        mask = a[:, c] == 1
        mask[c] = False
        if mask.any():
            a[mask] ^= a[c]
            b[mask] ^= b[c]
    if np.any(b[cols:]):
        return None
    return b[:cols]


@dataclass(frozen=True)
class ReconstructedFile:
    """Outcome of one user's decode attempt."""

    file: int
    bits: np.ndarray
    complete: bool
    n_covered: int
    modeled: bool
    covered: np.ndarray


def _solve_parity(cache: UserCache, ref: ParityRef, values: np.ndarray) -> np.ndarray | None:
    """Recover a full file from cached bits plus random parity rows."""
    from .decentralized import parity_rows

    f = ref.file_len
    matrix = parity_rows(ref.seed, ref.file, ref.n_rows, f)
    cached_pos = cache.file_positions(ref.file)
    known_mask = np.zeros(f, dtype=bool)
    known_mask[cached_pos] = True
    unknown_pos = np.nonzero(~known_mask)[0]
    rhs = values.astype(np.int64)
    if cached_pos.size:
        rhs = rhs ^ (matrix[:, cached_pos].astype(np.int64) @ cache.file_bits(ref.file) & 1)
    solved = gf2_solve(matrix[:, unknown_pos], (rhs & 1).astype(np.uint8))
    if solved is None:
        return None
    out = np.zeros(f, dtype=np.uint8)
    out[cached_pos] = cache.file_bits(ref.file)
    out[unknown_pos] = solved
    return out


def peel_decode(
    cache_k: UserCache,
    transcript: Transcript,
    demands: Sequence[int],
    k: int,
) -> ReconstructedFile:
    """Reconstruct user k's requested file from its cache and the broadcast.

    Runs the one-unknown peeling loop to fixpoint, then assembles the
    requested file from cached positions and every resolved segment of
    that file.  A partial result is returned rather than raised; the
    caller inspects ``complete``.
    """
    wanted = demands[k - 1]
    f = cache_k.file_len
    out = np.zeros(f, dtype=np.uint8)
    covered = np.zeros(f, dtype=bool)
    modeled = False

    cached_pos = cache_k.file_positions(wanted)
    out[cached_pos] = cache_k.file_bits(wanted)
    covered[cached_pos] = True

    known: dict = {}
    ref_by_key: dict = {}
    payload_ops: list[list] = []
    key_to_payloads: dict = {}
    unknown_count: list[int] = []
    xor_payloads = []

    for payload in transcript.payloads:
        op = payload.operands[0]
        if isinstance(op, BulkRef):
            if op.file == wanted:
                modeled = True
            continue
        if isinstance(op, ParityRef):
            if op.file == wanted and not covered.all():
                solved = _solve_parity(cache_k, op, payload.data)
                if solved is not None:
                    out = solved
                    covered[:] = True
            continue
        xor_payloads.append(payload)

    for i, payload in enumerate(xor_payloads):
        ops = list(payload.operands)
        payload_ops.append(ops)
        n_unknown = 0
        for ref in ops:
            key = ref.key
            ref_by_key.setdefault(key, ref)
            if key not in known:
                bits = _cache_lookup(cache_k, ref)
                if bits is not None:
                    known[key] = bits
            if key not in known:
                n_unknown += 1
                key_to_payloads.setdefault(key, []).append(i)
        unknown_count.append(n_unknown)

    queue = deque(i for i, n in enumerate(unknown_count) if n == 1)
    while queue:
        i = queue.popleft()
        if unknown_count[i] != 1:
            continue
        payload = xor_payloads[i]
        target = None
        acc = payload.data.copy()
        for ref in payload_ops[i]:
            bits = known.get(ref.key)
            if bits is None:
                target = ref
            else:
                acc[: bits.size] ^= bits
        known[target.key] = acc[: target.length]
        unknown_count[i] = 0
        for j in key_to_payloads.get(target.key, ()):
            if j == i:
                continue
            unknown_count[j] -= 1
            if unknown_count[j] == 1:
                queue.append(j)

    for key, bits in known.items():
        ref = ref_by_key[key]
        if ref.file != wanted or bits.size == 0:
            continue
        pos = ref.positions
        out[pos] = bits
        covered[pos] = True

    n_covered = int(covered.sum())
    return ReconstructedFile(
        file=wanted,
        bits=out,
        complete=bool(covered.all()),
        n_covered=n_covered,
        modeled=modeled,
        covered=covered,
    )


@dataclass(frozen=True)
class UserReport:
    """Per-user verification outcome against the ground-truth database."""

    user: int
    file: int
    success: bool
    complete: bool
    modeled: bool
    mismatched_bits: int
    missing_bits: int


@dataclass(frozen=True)
class DecodeReport:
    """Verification summary for one delivery transcript."""

    users: tuple[UserReport, ...]
    measured_rate: object  # Fraction
    total_bits: int
    chosen_procedure: str

    @property
    def all_ok(self) -> bool:
        return all(u.success for u in self.users)

    @property
    def n_failed(self) -> int:
        return sum(1 for u in self.users if not u.success)

    @property
    def error_observed(self) -> bool:
        """Whether the demand realization produced any decoding error."""
        return self.n_failed > 0


def verify_all(
    db: Database,
    placement: CachePlacement,
    transcript: Transcript,
    demands: Sequence[int],
) -> DecodeReport:
    """Decode every user and compare against the database bit for bit.

    A modeled decode (accounting-mode random delivery) counts as a
    success but keeps its ``modeled`` flag so callers can tell a
    bit-checked reconstruction from a bookkeeping one.
    """
    params = placement.params
    if len(demands) != params.n_users:
        raise ValueError("demand vector length must equal the user count")
    reports = []
    for user in range(1, params.n_users + 1):
        cache = extract_cache(db, placement, user)
        rec = peel_decode(cache, transcript, demands, user)
        truth = db.file_bits(rec.file)
        if rec.complete:
            mism = int(np.count_nonzero(rec.bits != truth))
            missing = 0
            success = mism == 0
        else:
            mism = int(np.count_nonzero(rec.bits[rec.covered] != truth[rec.covered]))
            missing = params.file_len - rec.n_covered
            success = rec.modeled and mism == 0
        reports.append(
            UserReport(
                user=user,
                file=rec.file,
                success=success,
                complete=rec.complete,
                modeled=rec.modeled,
                mismatched_bits=mism,
                missing_bits=missing,
            )
        )
    return DecodeReport(
        users=tuple(reports),
        measured_rate=transcript.rate,
        total_bits=transcript.total_bits,
        chosen_procedure=transcript.meta.get("procedure", transcript.scheme),
    )
