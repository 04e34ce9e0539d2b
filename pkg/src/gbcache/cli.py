"""Command-line experiment harness.

Three subcommands:

* ``curve``: analytic rate-capacity curves for a set of schemes, as CSV.
* ``simulate``: one end-to-end run (database, placement, delivery,
  decode verification) reported as JSON; exits 2 if any user fails.
* ``sweep``: rates at M = N/K as a function of the user count, as CSV.

Presets fig3/fig4/fig6 (curve) and fig5 (sweep) pin the instance sizes
and capacity ranges used by the bundled experiments.  With ``--plot`` a
PNG is rendered next to the delimited output.  Exit codes: 0 success,
2 decode failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from math import comb
from pathlib import Path

from . import rates
from .centralized import gbc_deliver, gbc_place, man_deliver, man_place
from .decentralized import gbd_deliver, man_dec_deliver, random_place
from .decode import verify_all
from .model import SystemParams, make_database, transcript_stats, worst_case_demands

EXIT_OK = 0
EXIT_DECODE_FAILURE = 2
EXIT_CONFIG_ERROR = 3

CURVE_SCHEMES = (
    "uncoded",
    "man-c",
    "cfl-point",
    "ag-point",
    "gbc",
    "best-centralized",
    "wtp-lb",
    "cutset",
    "man-d",
    "gbd",
)
SIM_SCHEMES = ("gbc", "man-c", "gbd", "man-d")
POINT_SCHEMES = {"cfl-point", "ag-point"}

CURVE_PRESETS = {
    "fig3": {
        "n": 10,
        "k": 15,
        "schemes": ["gbc", "best-centralized", "wtp-lb", "cutset"],
        "m_lo": Fraction(1, 15),
        "m_hi": Fraction(4, 3),
    },
    "fig4": {
        "n": 50,
        "k": 130,
        "schemes": ["gbc", "best-centralized", "cutset"],
        "m_lo": Fraction(1, 130),
        "m_hi": Fraction(20, 13),
    },
    "fig6": {
        "n": 30,
        "k": 50,
        "schemes": ["gbd", "man-d", "best-centralized"],
        "m_lo": Fraction(1, 50),
        "m_hi": Fraction(30),
    },
}
SWEEP_PRESETS = {
    "fig5": {"n": 100, "k_lo": 200, "k_hi": 1000, "k_step": 50},
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the harness reserves 2 for decode
    # failures, so remap every parse problem to the config-error code
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG_ERROR)


def _fraction(text: str) -> Fraction:
    return Fraction(text)


def capacity_grid(lo: Fraction, hi: Fraction, points: int) -> list[Fraction]:
    """Evenly spaced exact capacities, endpoints included."""
    if points < 2 or hi <= lo:
        raise ConfigError("capacity range needs lo < hi and at least 2 points")
    step = Fraction(hi - lo, points - 1)
    return [lo + step * i for i in range(points)]


def _curve_value(scheme: str, n: int, k: int, m):
    if scheme == "uncoded":
        return rates.r_uncoded(n, k, m)
    if scheme == "man-c":
        return rates.r_man_c(n, k, m)
    if scheme == "gbc":
        return rates.r_gbc(n, k, m)
    if scheme == "best-centralized":
        return rates.r_best_centralized(n, k, m)
    if scheme == "wtp-lb":
        return rates.r_wtp_lb(n, k, m)
    if scheme == "cutset":
        return rates.cutset_bound(n, k, m)
    if scheme == "man-d":
        return rates.r_man_d(n, k, m)
    if scheme == "gbd":
        return rates.r_gbd_analytic(n, k, m).total
    raise ConfigError(f"unknown scheme {scheme!r}")


def run_curve(config: dict) -> list[dict]:
    """Rows (m, scheme, rate); rate is None where a scheme is undefined."""
    n, k = config["n"], config["k"]
    grid = capacity_grid(config["m_lo"], config["m_hi"], config["points"])
    rows = []
    for scheme in config["schemes"]:
        if scheme in POINT_SCHEMES:
            try:
                if scheme == "cfl-point":
                    anchor = (Fraction(1, k), rates.r_cfl_point(n, k))
                else:
                    anchor = (Fraction(n - 1, k), rates.ag_point(n, k))
                rows.append({"m": anchor[0], "scheme": scheme, "rate": anchor[1]})
            except ValueError as exc:
                print(f"curve: {scheme}: {exc}", file=sys.stderr)
                rows.append({"m": None, "scheme": scheme, "rate": None})
            continue
        for m in grid:
            try:
                rows.append({"m": m, "scheme": scheme, "rate": _curve_value(scheme, n, k, m)})
            except ValueError as exc:
                print(f"curve: {scheme} at M={m}: {exc}", file=sys.stderr)
                rows.append({"m": m, "scheme": scheme, "rate": None})
    return rows


def run_sweep(config: dict) -> list[dict]:
    """Rows over K at M = N/K with the percent reduction vs the baseline."""
    n = config["n"]
    rows = []
    for k in range(config["k_lo"], config["k_hi"] + 1, config["k_step"]):
        if k <= n:
            raise ConfigError("sweep needs K > N at every point")
        m = Fraction(n, k)
        r_gbc = rates.r_gbc(n, k, m)
        r_best = rates.r_best_centralized(n, k, m)
        rows.append(
            {
                "k": k,
                "r_gbc": r_gbc,
                "r_best": r_best,
                "cutset": rates.cutset_bound(n, k, m),
                "reduction_pct": 100 * (r_best - r_gbc) / r_best,
            }
        )
    return rows


def _granularity(scheme: str, k: int, t: int | None) -> int:
    if scheme == "gbc":
        return k
    if scheme == "man-c":
        return k * comb(k, t)
    return 1


def run_simulate(config: dict) -> tuple[dict, int]:
    """One full placement/delivery/decode run; returns (report, exit_code)."""
    scheme = config["scheme"]
    n, k, seed = config["n"], config["k"], config["seed"]
    t = config.get("t")

    if scheme == "man-c":
        if t is None:
            raise ConfigError("man-c needs --t")
        if not 0 <= t <= k:
            raise ConfigError("t must lie in [0, K]")
        expected_m = Fraction(t * n, k)
    elif scheme == "gbc":
        expected_m = Fraction(n, k)
    else:
        expected_m = None
    m = config.get("m")
    if m is None:
        if expected_m is None:
            raise ConfigError(f"{scheme} needs --m")
        m = expected_m
    if expected_m is not None and m != expected_m:
        raise ConfigError(f"{scheme} requires M = {expected_m}, got {m}")
    if scheme in ("gbd", "man-d") and not 0 < m <= n:
        raise ConfigError("decentralized schemes need 0 < M <= N")

    g = _granularity(scheme, k, t)
    f_eff = math.ceil(config["f"] / g) * g
    params = SystemParams(n_files=n, n_users=k, cache_capacity=m, file_len=f_eff)
    db = make_database(params, seed)
    demands = worst_case_demands(n, k)

    analytic = None
    if scheme == "gbc":
        placement = gbc_place(db, params)
        transcript = gbc_deliver(db, demands, placement)
        try:
            analytic = float(rates.r_gbc(n, k, m))
        except ValueError:
            analytic = None
    elif scheme == "man-c":
        placement = man_place(db, params, t)
        transcript = man_deliver(db, demands, placement, t)
        analytic = float(rates.r_man_c(n, k, m))
    elif scheme == "gbd":
        placement, ownership = random_place(db, params, seed)
        transcript = gbd_deliver(db, demands, placement, ownership)
        analytic = rates.r_gbd_analytic(n, k, m).total if n < k else None
    elif scheme == "man-d":
        placement, ownership = random_place(db, params, seed)
        transcript = man_dec_deliver(db, demands, placement, ownership)
        analytic = rates.r_man_d(n, k, m)
    else:
        raise ConfigError(f"unknown simulate scheme {scheme!r}")

    report = verify_all(db, placement, transcript, demands)
    stats = transcript_stats(transcript)
    measured = float(stats.rate)
    out = {
        "schema": 1,
        "config": {
            "scheme": scheme,
            "n": n,
            "k": k,
            "m": str(m),
            "t": t,
            "f_requested": config["f"],
            "f_effective": f_eff,
            "seed": seed,
            "demands": list(demands),
        },
        "measured": {
            "rate": measured,
            "rate_exact": str(stats.rate),
            "total_bits": stats.total_bits,
            "bits_by_part": dict(sorted(stats.bits.items())),
            "payloads_by_part": dict(sorted(stats.payloads.items())),
        },
        "analytic": {
            "rate": analytic,
            "delta": None if analytic is None else measured - analytic,
        },
        "decode": {
            "all_ok": report.all_ok,
            "n_failed": report.n_failed,
            "chosen_procedure": report.chosen_procedure,
            "modeled_users": sum(1 for u in report.users if u.modeled),
        },
    }
    if not report.all_ok:
        out["diagnostic"] = {
            "failed_users": [
                {
                    "user": u.user,
                    "file": u.file,
                    "mismatched_bits": u.mismatched_bits,
                    "missing_bits": u.missing_bits,
                }
                for u in report.users
                if not u.success
            ],
            "payloads": [
                {"label": p.label, "bits": p.n_bits, "keys": [str(key) for key in p.keys()]}
                for p in transcript.payloads[:50]
            ],
        }
    return out, EXIT_OK if report.all_ok else EXIT_DECODE_FAILURE


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return repr(float(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _rows_to_csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(row[h]) for h in header])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _plot_path(out: str | None) -> str:
    if out is None:
        raise ConfigError("--plot needs --out to place the figure")
    return str(Path(out).with_suffix(".png"))


def _build_parser() -> _Parser:
    parser = _Parser(prog="gbcache", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    cur = sub.add_parser("curve", help="analytic rate curves as CSV")
    cur.add_argument("--preset", choices=sorted(CURVE_PRESETS))
    cur.add_argument("--n", type=int)
    cur.add_argument("--k", type=int)
    cur.add_argument("--scheme", help="comma-separated subset of: " + ", ".join(CURVE_SCHEMES))
    cur.add_argument("--m-range", help="capacity range LO:HI, fractions allowed")
    cur.add_argument("--points", type=int, default=64)
    cur.add_argument("--format", choices=("csv", "json"), default="csv")
    cur.add_argument("--out")
    cur.add_argument("--plot", action="store_true")

    sim = sub.add_parser("simulate", help="end-to-end run with decode verification")
    sim.add_argument("--scheme", required=True, choices=SIM_SCHEMES)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--k", type=int, required=True)
    sim.add_argument("--m", type=_fraction)
    sim.add_argument("--t", type=int)
    sim.add_argument("--f", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--format", choices=("csv", "json"), default="json")
    sim.add_argument("--out")
    sim.add_argument("--plot", action="store_true")

    swp = sub.add_parser("sweep", help="rates at M=N/K over a range of K")
    swp.add_argument("--preset", choices=sorted(SWEEP_PRESETS))
    swp.add_argument("--n", type=int)
    swp.add_argument("--k", help="user-count range LO:HI:STEP")
    swp.add_argument("--format", choices=("csv", "json"), default="csv")
    swp.add_argument("--out")
    swp.add_argument("--plot", action="store_true")
    return parser


def _parse_m_range(text: str) -> tuple[Fraction, Fraction]:
    try:
        lo, hi = text.split(":")
        return Fraction(lo), Fraction(hi)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad --m-range {text!r}: {exc}") from None


def _curve_config(args) -> dict:
    config = {"points": args.points}
    if args.preset:
        preset = CURVE_PRESETS[args.preset]
        config.update(n=preset["n"], k=preset["k"], schemes=list(preset["schemes"]))
        config["m_lo"], config["m_hi"] = preset["m_lo"], preset["m_hi"]
        config["preset"] = args.preset
    if args.n is not None:
        config["n"] = args.n
    if args.k is not None:
        config["k"] = args.k
    if args.scheme:
        schemes = [s.strip() for s in args.scheme.split(",") if s.strip()]
        bad = [s for s in schemes if s not in CURVE_SCHEMES]
        if bad:
            raise ConfigError(f"unknown scheme(s): {', '.join(bad)}")
        config["schemes"] = schemes
    if args.m_range:
        config["m_lo"], config["m_hi"] = _parse_m_range(args.m_range)
    flags = {"n": "--n", "k": "--k", "schemes": "--scheme", "m_lo": "--m-range", "m_hi": "--m-range"}
    for key, flag in flags.items():
        if key not in config:
            raise ConfigError(f"curve needs --preset or explicit {flag}")
    return config


def _sweep_config(args) -> dict:
    config = {}
    if args.preset:
        config.update(SWEEP_PRESETS[args.preset])
        config["preset"] = args.preset
    if args.n is not None:
        config["n"] = args.n
    if args.k:
        try:
            lo, hi, step = (int(x) for x in args.k.split(":"))
        except ValueError:
            raise ConfigError(f"bad --k range {args.k!r}, expected LO:HI:STEP") from None
        config.update(k_lo=lo, k_hi=hi, k_step=step)
    for key in ("n", "k_lo"):
        if key not in config:
            raise ConfigError("sweep needs --preset or both --n and --k LO:HI:STEP")
    if config["k_step"] < 1:
        raise ConfigError("--k step must be positive")
    return config


def _rows_as_json(rows) -> str:
    clean = []
    for row in rows:
        clean.append(
            {
                key: (float(v) if isinstance(v, Fraction) else v)
                for key, v in row.items()
            }
        )
    return json.dumps({"schema": 1, "rows": clean}, indent=2, sort_keys=True) + "\n"


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "curve":
            config = _curve_config(args)
            rows = run_curve(config)
            if args.format == "csv":
                _emit(_rows_to_csv(rows, ["m", "scheme", "rate"]), args.out)
            else:
                _emit(_rows_as_json(rows), args.out)
            if args.plot:
                from .plotting import render_curve_figure

                title = config.get("preset")
                render_curve_figure(
                    rows, _plot_path(args.out),
                    title=f"N={config['n']}, K={config['k']}" + (f" ({title})" if title else ""),
                )
            return EXIT_OK

        if args.command == "sweep":
            config = _sweep_config(args)
            rows = run_sweep(config)
            header = ["k", "r_gbc", "r_best", "cutset", "reduction_pct"]
            if args.format == "csv":
                _emit(_rows_to_csv(rows, header), args.out)
            else:
                _emit(_rows_as_json(rows), args.out)
            if args.plot:
                from .plotting import render_sweep_figure

                render_sweep_figure(rows, _plot_path(args.out), title=f"N={config['n']}")
            return EXIT_OK

        config = {
            "scheme": args.scheme,
            "n": args.n,
            "k": args.k,
            "m": args.m,
            "t": args.t,
            "f": args.f,
            "seed": args.seed,
        }
        if args.f < 1:
            raise ConfigError("--f must be positive")
        report, code = run_simulate(config)
        if args.format == "json":
            _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
        else:
            row = {
                "m": report["config"]["m"],
                "scheme": args.scheme,
                "rate": report["analytic"]["rate"],
                "measured": report["measured"]["rate"],
                "delta": report["analytic"]["delta"],
                "seed": args.seed,
                "f_effective": report["config"]["f_effective"],
            }
            _emit(
                _rows_to_csv(
                    [row], ["m", "scheme", "rate", "measured", "delta", "seed", "f_effective"]
                ),
                args.out,
            )
        if args.plot:
            from .plotting import render_simulate_figure

            render_simulate_figure(report, _plot_path(args.out))
        return code
    except (ConfigError, ValueError) as exc:
        print(f"gbcache: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
