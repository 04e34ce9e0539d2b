"""Bit-exact simulator and analytic rate engine for group-based coded caching."""

from .model import (
    BulkRef,
    CachePlacement,
    ClassRef,
    Database,
    GroupPartition,
    ManSubfileRef,
    ParityRef,
    Payload,
    SubfileRef,
    SystemParams,
    Transcript,
    TranscriptStats,
    group_users,
    make_database,
    partition_subfiles,
    read_segment,
    transcript_stats,
    worst_case_demands,
    xor_payload,
)
from .centralized import gbc_deliver, gbc_place, man_deliver, man_place
from .decentralized import (
    OwnershipMap,
    build_ownership,
    coded_part_bits,
    gbd_deliver,
    gbd_deliver_coded,
    gbd_deliver_random,
    man_dec_deliver,
    random_place,
)
from .decode import DecodeReport, UserCache, extract_cache, peel_decode, verify_all
from .rates import (
    GbdRates,
    MemorySharingPlan,
    PiecewiseEnvelope,
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

__version__ = "0.1.0"

__all__ = [
    "SystemParams",
    "Database",
    "GroupPartition",
    "CachePlacement",
    "Payload",
    "Transcript",
    "TranscriptStats",
    "SubfileRef",
    "ManSubfileRef",
    "ClassRef",
    "ParityRef",
    "BulkRef",
    "make_database",
    "worst_case_demands",
    "group_users",
    "partition_subfiles",
    "xor_payload",
    "read_segment",
    "transcript_stats",
    "gbc_place",
    "gbc_deliver",
    "man_place",
    "man_deliver",
    "OwnershipMap",
    "random_place",
    "build_ownership",
    "gbd_deliver",
    "gbd_deliver_coded",
    "gbd_deliver_random",
    "man_dec_deliver",
    "coded_part_bits",
    "UserCache",
    "extract_cache",
    "peel_decode",
    "verify_all",
    "DecodeReport",
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
    "__version__",
]
