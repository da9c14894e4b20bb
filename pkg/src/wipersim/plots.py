"""Matplotlib figures rendered next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .policy import Decision

_DPI = 150


def _day_series(report, arm):
    days = sorted({row.day for row in report.rows if row.arm == arm})
    means = [report.day_stats[(d, arm)][0] for d in days]
    errs = [report.day_stats[(d, arm)][1] for d in days]
    return days, means, errs


def save_reference_mse_figure(report, path) -> None:
    """Per-arm mean MSE against the baseline frame, by observation day."""
    fig, ax = plt.subplots(figsize=(6, 4))
    arms = []
    for row in report.rows:
        if row.arm not in arms:
            arms.append(row.arm)
    for arm in arms:
        days, means, errs = _day_series(report, arm)
        ax.errorbar(days, means, yerr=errs, marker="o", capsize=3, label=arm)
    ax.set_xlabel("day")
    ax.set_ylabel("mean MSE vs day 0")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_pair_mse_figure(report, path) -> None:
    """Mean MSE between the control and treated frames, by day."""
    days = sorted(report.pair_stats)
    means = [report.pair_stats[d][0] for d in days]
    errs = [report.pair_stats[d][1] for d in days]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(days, means, yerr=errs, marker="s", capsize=3, color="tab:red")
    ax.set_xlabel("day")
    ax.set_ylabel("mean MSE control vs treated")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_timeline_figure(timeline, path) -> None:
    """Closed-loop MSE trajectory with cleaning and stall markers."""
    days = [e.day for e in timeline]
    mses = [e.mse for e in timeline]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(days, mses, marker=".", color="tab:blue", label="MSE vs day 0")
    for entry in timeline:
        if entry.decision is Decision.CLEAN:
            ax.axvline(entry.day, color="tab:green", alpha=0.6, linestyle="--")
        elif entry.decision is Decision.STALLED:
            ax.axvline(entry.day, color="tab:red", alpha=0.8, linestyle=":")
    ax.set_xlabel("day")
    ax.set_ylabel("MSE vs day 0")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_calibration_figure(targets, fit_days, fit_values, path) -> None:
    """Fitted MSE trajectory over the calibration targets."""
    tdays = [d for d, _ in targets]
    tvals = [v for _, v in targets]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(tdays, tvals, "o", color="tab:orange", label="targets")
    ax.plot(fit_days, fit_values, marker=".",
            color="tab:blue", label="fitted model")
    ax.set_xlabel("day")
    ax.set_ylabel("MSE vs day 0")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
