"""Core data model for coded-caching simulations.

A problem instance is a library of equal-length files (bit arrays), a set
of cache-equipped users, and a demand vector.  This module holds the
shared vocabulary used by every scheme: system parameters, the random
database, demand grouping, subfile partitions, cache placements, and
broadcast transcripts built from labeled XOR payloads.

Everything is deterministic given its inputs; randomness enters only
through explicit integer seeds.  File and user indices are 1-based
throughout the public surface so that transcripts read the same way they
are written down by hand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SystemParams",
    "Database",
    "GroupPartition",
    "SubfileRef",
    "ManSubfileRef",
    "ClassRef",
    "ParityRef",
    "BulkRef",
    "Payload",
    "Transcript",
    "TranscriptStats",
    "CachePlacement",
    "make_database",
    "worst_case_demands",
    "group_users",
    "partition_subfiles",
    "read_segment",
    "xor_payload",
    "transcript_stats",
]


def _as_fraction(value) -> Fraction:
    # floats go through the decimal parser so 0.3 means 3/10
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class SystemParams:
    """Instance size: N files, K users, cache capacity M (in files), file length F bits."""

    n_files: int
    n_users: int
    cache_capacity: Fraction
    file_len: int

    def __post_init__(self):
        object.__setattr__(self, "cache_capacity", _as_fraction(self.cache_capacity))
        if self.n_files < 1 or self.n_users < 1:
            raise ValueError("need at least one file and one user")
        if self.file_len < 1:
            raise ValueError("file length must be positive")
        if not 0 <= self.cache_capacity <= self.n_files:
            raise ValueError("cache capacity must lie in [0, n_files]")

    @property
    def cache_bit_budget(self) -> int:
        """Largest whole number of bits a single cache may hold."""
        return math.floor(self.cache_capacity * self.file_len)


@dataclass(frozen=True)
class Database:
    """The file library as an (n_files, file_len) array of 0/1 bytes."""

    bits: np.ndarray

    @property
    def n_files(self) -> int:
        return self.bits.shape[0]

    @property
    def file_len(self) -> int:
        return self.bits.shape[1]

    def file_bits(self, file: int) -> np.ndarray:
        return self.bits[file - 1]


def make_database(params: SystemParams, seed: int) -> Database:
    """Draw every file bit i.i.d. uniform from a generator keyed by ``seed``."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(params.n_files, params.file_len), dtype=np.uint8)
    return Database(bits=bits)


def worst_case_demands(n_files: int, n_users: int) -> tuple[int, ...]:
    """Demand vector that maximizes delivery load.

    With at least as many files as users every user asks for a distinct
    file.  With fewer files than users every file is requested and the
    group sizes are balanced, larger groups on the lower file indices.
    """
    if n_files >= n_users:
        return tuple(range(1, n_users + 1))
    base, rem = divmod(n_users, n_files)
    sizes = [base + 1] * rem + [base] * (n_files - rem)
    out: list[int] = []
    for i, size in enumerate(sizes, start=1):
        out.extend([i] * size)
    return tuple(out)


@dataclass(frozen=True)
class GroupPartition:
    """Stable regrouping of users by demanded file.

    ``user_order[p-1]`` is the original id of the user at sorted position p;
    positions ``prefix[i-1]+1 .. prefix[i]`` form the group demanding file i.
    """

    group_sizes: tuple[int, ...]
    prefix: tuple[int, ...]
    user_order: tuple[int, ...]

    @property
    def n_users(self) -> int:
        return len(self.user_order)

    @property
    def n_files(self) -> int:
        return len(self.group_sizes)

    def user_at(self, position: int) -> int:
        return self.user_order[position - 1]

    def group_positions(self, file: int) -> range:
        return range(self.prefix[file - 1] + 1, self.prefix[file] + 1)

    def demanded_files(self) -> tuple[int, ...]:
        return tuple(i for i, size in enumerate(self.group_sizes, start=1) if size > 0)


def group_users(demands: Sequence[int], n_files: int | None = None) -> GroupPartition:
    """Partition users into contiguous per-file groups, preserving input order inside each."""
    if not demands:
        raise ValueError("empty demand vector")
    n = max(demands) if n_files is None else n_files
    if min(demands) < 1 or max(demands) > n:
        raise ValueError("demand outside [1, n_files]")
    order = sorted(range(len(demands)), key=lambda idx: (demands[idx], idx))
    sizes = [0] * n
    for d in demands:
        sizes[d - 1] += 1
    prefix = [0]
    for s in sizes:
        prefix.append(prefix[-1] + s)
    return GroupPartition(
        group_sizes=tuple(sizes),
        prefix=tuple(prefix),
        user_order=tuple(idx + 1 for idx in order),
    )


# ---------------------------------------------------------------------------
# Bit-segment references.  A reference names a subset of one file's bit
# positions; payload data is the zero-padded XOR of its referenced segments,
# so a transcript is self-describing and can be decoded without side tables.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubfileRef:
    """Contiguous 1/K slice of a file, indexed by the user that caches it."""

    file: int
    part: int
    start: int
    length: int

    @property
    def key(self):
        return ("sub", self.file, self.part)

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.length, dtype=np.int64)


@dataclass(frozen=True)
class ManSubfileRef:
    """Slice of a file indexed by the t-subset of users that caches it."""

    file: int
    users: frozenset[int]
    start: int
    length: int

    @property
    def key(self):
        return ("man", self.file, self.users)

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.length, dtype=np.int64)


@dataclass(frozen=True)
class ClassRef:
    """Ownership class of a file: the bits cached by exactly ``cachers``."""

    file: int
    cachers: frozenset[int]
    _positions: np.ndarray = field(compare=False, repr=False)

    @property
    def key(self):
        return ("cls", self.file, self.cachers)

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    @property
    def length(self) -> int:
        return int(self._positions.size)


@dataclass(frozen=True)
class ParityRef:
    """Random linear combinations over one whole file (exact random delivery)."""

    file: int
    n_rows: int
    seed: int
    file_len: int

    @property
    def key(self):
        return ("rnd", self.file)

    @property
    def length(self) -> int:
        return self.n_rows


@dataclass(frozen=True)
class BulkRef:
    """Accounting placeholder charging ``n_bits`` for one requested file."""

    file: int
    n_bits: int

    @property
    def key(self):
        return ("blk", self.file)

    @property
    def length(self) -> int:
        return self.n_bits


@dataclass(frozen=True)
class Payload:
    """One broadcast item: operand references plus the transmitted bits."""

    operands: tuple
    data: np.ndarray = field(compare=False, repr=False)
    label: str = "part1"

    @property
    def n_bits(self) -> int:
        return int(self.data.size)

    def keys(self) -> tuple:
        return tuple(op.key for op in self.operands)


@dataclass
class Transcript:
    """Ordered broadcast produced by one delivery procedure."""

    payloads: tuple[Payload, ...]
    file_len: int
    scheme: str
    meta: dict = field(default_factory=dict)

    @property
    def total_bits(self) -> int:
        return sum(p.n_bits for p in self.payloads)

    @property
    def rate(self) -> Fraction:
        return Fraction(self.total_bits, self.file_len)


@dataclass(frozen=True)
class TranscriptStats:
    """Exact per-label bit and payload totals of a transcript."""

    bits: dict
    payloads: dict
    total_bits: int
    rate: Fraction


def transcript_stats(transcript: Transcript) -> TranscriptStats:
    """Tally bits and payload counts per part label; rate is exact."""
    bits: dict[str, int] = {}
    counts: dict[str, int] = {}
    for p in transcript.payloads:
        bits[p.label] = bits.get(p.label, 0) + p.n_bits
        counts[p.label] = counts.get(p.label, 0) + 1
    total = sum(bits.values())
    return TranscriptStats(
        bits=bits,
        payloads=counts,
        total_bits=total,
        rate=Fraction(total, transcript.file_len),
    )


def read_segment(db: Database, ref) -> np.ndarray:
    """Ground-truth bits behind a segment reference."""
    if isinstance(ref, (SubfileRef, ManSubfileRef)):
        return db.bits[ref.file - 1, ref.start : ref.start + ref.length]
    if isinstance(ref, ClassRef):
        return db.bits[ref.file - 1, ref.positions]
    raise TypeError(f"no database bits behind {type(ref).__name__}")


def xor_payload(db: Database, operands: Iterable, label: str) -> Payload:
    """Build a payload whose data is the zero-padded XOR of its operands."""
    ops = tuple(operands)
    keys = [op.key for op in ops]
    if len(set(keys)) != len(keys):
        raise ValueError("payload operands must reference distinct segments")
    length = max(op.length for op in ops)
    data = np.zeros(length, dtype=np.uint8)
    for op in ops:
        seg = read_segment(db, op)
        data[: seg.size] ^= seg
    return Payload(operands=ops, data=data, label=label)


@dataclass
class CachePlacement:
    """Per-user cached bit positions, one sorted array per (user, file).

    ``kind`` records which placement rule produced it ("gbc", "man" or
    "random"); deliveries check it to refuse mismatched placements.
    """

    params: SystemParams
    kind: str
    positions: tuple[dict, ...]
    meta: dict = field(default_factory=dict)

    def cached_positions(self, user: int, file: int) -> np.ndarray:
        return self.positions[user - 1].get(file, _EMPTY_POSITIONS)

    def bits_used(self, user: int) -> int:
        return int(sum(arr.size for arr in self.positions[user - 1].values()))

    def validate_capacity(self) -> None:
        budget = self.params.cache_bit_budget
        for user in range(1, self.params.n_users + 1):
            used = self.bits_used(user)
            if used > budget:
                raise ValueError(f"user {user} caches {used} bits, budget {budget}")


_EMPTY_POSITIONS = np.empty(0, dtype=np.int64)


def partition_subfiles(params: SystemParams, file: int) -> list[SubfileRef]:
    """Split one file into K equal contiguous subfiles, one per user index."""
    if params.file_len % params.n_users:
        raise ValueError("file length must be a multiple of the user count")
    seg = params.file_len // params.n_users
    return [
        SubfileRef(file=file, part=j, start=(j - 1) * seg, length=seg)
        for j in range(1, params.n_users + 1)
    ]
