"""Figure rendering for the CLI report paths.

Every command that writes a CSV can render the same rows as a PNG next to
it.  Figures are informative rather than polished: bar charts with error
bars for per-pattern estimates, similarity curves for convergence studies
and log-log scaling plots for the benchmarks.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["plot_estimates", "plot_compare", "plot_convergence", "plot_bench"]


def _pattern_ticks(ax, labels):
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)


def plot_estimates(rows, path):
    """rows: (pattern_label, mean, stderr)."""
    labels = [r[0] for r in rows]
    means = [r[1] for r in rows]
    errs = [r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * len(rows)), 3.2))
    ax.bar(range(len(rows)), means, yerr=errs, capsize=2, color="#4878a8")
    ax.axhline(0.0, color="k", lw=0.6)
    _pattern_ticks(ax, labels)
    ax.set_ylabel("probability")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_compare(rows, similarity, path):
    """rows: (pattern_label, estimate, stderr, oracle)."""
    labels = [r[0] for r in rows]
    idx = range(len(rows))
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * len(rows)), 3.2))
    ax.bar([i - 0.2 for i in idx], [r[1] for r in rows], width=0.4,
           yerr=[r[2] for r in rows], capsize=2, label="estimate", color="#4878a8")
    ax.bar([i + 0.2 for i in idx], [r[3] for r in rows], width=0.4,
           label="exact", color="#c05b4d")
    _pattern_ticks(ax, labels)
    ax.set_ylabel("probability")
    ax.set_title(f"cosine similarity {similarity:.5f}", fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_convergence(rows, path):
    """rows: (n, samples, similarity)."""
    by_n = {}
    for n, samples, sim in rows:
        by_n.setdefault(n, []).append((samples, sim))
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    for n, pts in sorted(by_n.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3,
                label=f"N={n}")
    ax.set_xlabel("samples per pattern")
    ax.set_ylabel("cosine similarity")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_bench(rows, path):
    """rows: BenchRow-like (n, photons, precompute_ms, per_sample_us)."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7.4, 3.2))
    pre = sorted({(r.n, r.precompute_ms) for r in rows})
    ax1.loglog([p[0] for p in pre], [p[1] for p in pre], marker="o", ms=4)
    ax1.set_xlabel("modes")
    ax1.set_ylabel("precompute [ms]")
    by_m = {}
    for r in rows:
        by_m.setdefault(r.photons, []).append((r.n, r.per_sample_us))
    for m, pts in sorted(by_m.items()):
        pts.sort()
        ax2.loglog([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=4,
                   label=f"M={m}")
    ax2.set_xlabel("modes")
    ax2.set_ylabel("time per sample [us]")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
