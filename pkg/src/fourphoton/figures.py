"""Matplotlib renderings of the CSV outputs, written next to them."""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def scan_figure(path, rows: Sequence[dict]) -> None:
    """Fringe plot of a phase scan: ideal rate and, if present, MC counts."""
    betas = [row["beta"] for row in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(betas, [row["rate_ideal"] for row in rows], "-", label="ideal rate")
    if rows and "counts_mc" in rows[0]:
        ax2 = ax.twinx()
        ax2.plot(betas, [row["counts_mc"] for row in rows], "o", ms=4,
                 color="tab:red", label="simulated counts")
        ax2.set_ylabel("counts per window")
    ax.set_xlabel(r"$\beta$ (rad)")
    ax.set_ylabel("four-fold rate (arb.)")
    ax.set_title("post-selected four-fold fringe")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def truncation_figure(path, rows) -> None:
    """Two-fold and four-fold visibility against expansion order."""
    orders = [row.order for row in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(orders, [row.twofold_visibility for row in rows], "o-")
    ax1.set_xlabel("expansion order")
    ax1.set_ylabel("two-fold visibility")
    ax1.set_yscale("log")
    ax2.plot(orders, [row.fourfold_visibility for row in rows], "o-")
    ax2.set_xlabel("expansion order")
    ax2.set_ylabel("four-fold visibility")
    ax2.set_ylim(0.99, 1.001)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def analyze_figure(path, per_alpha: Sequence[tuple[float, float, float]]) -> None:
    """Per-setting visibilities with error bars and the violation threshold."""
    alphas = [a for a, _, _ in per_alpha]
    vs = [v for _, v, _ in per_alpha]
    errs = [s for _, _, s in per_alpha]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.errorbar(alphas, vs, yerr=errs, fmt="o", capsize=3)
    ax.axhline(1 / math.sqrt(2), color="tab:red", ls=":",
               label=r"violation threshold $1/\sqrt{2}$")
    ax.set_xlabel(r"$\alpha$ (rad)")
    ax.set_ylabel("fringe visibility")
    ax.set_ylim(0, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
