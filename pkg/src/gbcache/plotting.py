"""Figure rendering for experiment outputs.

Draws the same rows the CSV/JSON writers emit, so a figure is always a
view of data that exists on disk next to it.  The Agg backend keeps this
usable in headless runs; files only, nothing is displayed.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["render_curve_figure", "render_sweep_figure", "render_simulate_figure"]

# schemes that are single anchor points rather than curves
_POINT_SCHEMES = {"cfl-point", "ag-point"}


def render_curve_figure(rows, path, title: str | None = None) -> None:
    """Line chart of rate vs capacity, one series per scheme."""
    series: dict[str, tuple[list, list]] = {}
    for row in rows:
        if row["rate"] is None:
            continue
        xs, ys = series.setdefault(row["scheme"], ([], []))
        xs.append(float(row["m"]))
        ys.append(float(row["rate"]))
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for scheme, (xs, ys) in series.items():
        if scheme in _POINT_SCHEMES:
            ax.plot(xs, ys, "o", label=scheme)
        else:
            ax.plot(xs, ys, label=scheme)
    ax.set_xlabel("cache capacity M (files)")
    ax.set_ylabel("delivery rate R (files)")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    if series:
        ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_sweep_figure(rows, path, title: str | None = None) -> None:
    """Rates at M = N/K as the user count grows, plus the reduction column."""
    ks = [row["k"] for row in rows]
    fig, (ax, ax2) = plt.subplots(
        2, 1, figsize=(7.0, 6.0), sharex=True, height_ratios=[3, 1]
    )
    for key, label in (("r_gbc", "group-based"), ("r_best", "best baseline"), ("cutset", "cut-set bound")):
        ax.plot(ks, [float(row[key]) for row in rows], label=label)
    ax.set_ylabel("delivery rate at M = N/K")
    ax.grid(alpha=0.3)
    ax.legend()
    ax2.plot(ks, [float(row["reduction_pct"]) for row in rows], color="tab:red")
    ax2.set_xlabel("number of users K")
    ax2.set_ylabel("reduction %")
    ax2.grid(alpha=0.3)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_simulate_figure(report, path, title: str | None = None) -> None:
    """Bar chart of measured bits per payload label for one simulation."""
    bits = report["measured"]["bits_by_part"]
    labels = list(bits)
    values = [bits[label] for label in labels]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(labels, values, color="tab:blue")
    ax.set_ylabel("broadcast bits")
    measured = report["measured"]["rate"]
    analytic = report["analytic"]["rate"]
    note = f"measured R = {measured:.4f}"
    if analytic is not None:
        note += f", analytic R = {analytic:.4f}"
    ax.set_title(title or note)
    if title:
        ax.text(0.98, 0.95, note, ha="right", va="top", transform=ax.transAxes)
    ax.grid(axis="y", alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
