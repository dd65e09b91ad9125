"""Report figures, rendered headlessly next to the delimited outputs.

Each renderer takes the in-memory report object and a target path and
writes one PNG.  Figures are a convenience layer over the CSV/JSON
outputs, never a data source; the command line can switch them off.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_flow_trace(trace, path) -> None:
    """Scalar curvature plus the tracked functionals over time."""
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    top.plot(trace.times, trace.functionals["scal"], label="scal", color="tab:red")
    top.plot(trace.times, trace.functionals["norm"], label="norm", color="tab:gray")
    if np.all(trace.functionals["norm"] > 0):
        top.set_yscale("log")
    top.set_ylabel("curvature size")
    top.legend(loc="best", fontsize=8)
    top.set_title(f"{trace.kind} flow, dim {trace.dim}, stopped: {trace.stopped}")

    for fid in sorted(trace.functionals):
        if fid in ("scal", "norm"):
            continue
        bottom.plot(trace.times, trace.functionals[fid], label=fid)
    bottom.axhline(0.0, color="black", linewidth=0.6)
    bottom.set_xlabel("t")
    bottom.set_ylabel("tracked functionals")
    bottom.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_invariance(reports, path) -> None:
    """Excursion strip per cone with the worst value marked."""
    reports = list(reports)
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(reports), 4.2))
    for k, rep in enumerate(reports):
        x = k + np.linspace(-0.18, 0.18, rep.excursions.size)
        ax.plot(x, rep.excursions, ".", color="tab:blue", alpha=0.7)
        ax.plot([k], [rep.worst_excursion], "v", color="tab:red")
    ax.axhline(0.0, color="black", linewidth=0.6)
    ax.set_xticks(range(len(reports)))
    ax.set_xticklabels([f"{r.cone}\n(n={r.dim})" for r in reports], fontsize=8)
    ax.set_ylabel("defect excursion / scale")
    ax.set_title("cone invariance along the reaction flow")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_verifier_table(reports, path) -> None:
    """Violation magnitudes against per-claim thresholds, one bar per claim."""
    reports = list(reports)
    floor = 1e-18
    names = [r.claim for r in reports]
    viol = np.log10(np.maximum([r.max_violation for r in reports], floor))
    thr = np.log10(np.maximum([r.threshold for r in reports], floor))
    colors = []
    for r in reports:
        if not r.asserting:
            colors.append("tab:gray")
        else:
            colors.append("tab:green" if r.passed else "tab:red")
    y = np.arange(len(reports))
    fig, ax = plt.subplots(figsize=(7.0, 1.2 + 0.32 * len(reports)))
    ax.barh(y, viol - np.log10(floor), left=np.log10(floor), color=colors, alpha=0.8)
    ax.plot(thr, y, "k|", markersize=10, label="threshold")
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("log10 max violation")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
