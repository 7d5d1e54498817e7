"""Matplotlib renderers for benchmark outputs (written to files, never shown)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_WIDTH = 6.0


def _new_axes(ncols=1):
    fig, axes = plt.subplots(1, ncols,
                             figsize=(_WIDTH * ncols, _WIDTH * _GOLDEN))
    return fig, axes


def plot_run_trace(trace, path, title=None):
    """Residual norm against cumulative evaluations, log scale."""
    fig, ax = _new_axes()
    ax.semilogy([e.cumulative_fevals for e in trace],
                [e.residual_norm for e in trace], lw=1.2)
    ax.set_xlabel("residual evaluations")
    ax.set_ylabel("Euclidean norm of the residual")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_compare(rows, x_field, path):
    """Evaluations and wall time against the swept parameter, one line per method."""
    fig, (ax_f, ax_t) = _new_axes(ncols=2)
    methods = []
    for row in rows:
        if row["method"] not in methods:
            methods.append(row["method"])
    for method in methods:
        sub = [r for r in rows if r["method"] == method]
        xs = [r[x_field] for r in sub]
        ax_f.semilogy(xs, [max(r["fevals"], 1) for r in sub], "o-", label=method)
        ax_t.semilogy(xs, [max(r["elapsed_seconds"], 1e-3) for r in sub],
                      "o-", label=method)
    for ax, ylabel in ((ax_f, "residual evaluations"), (ax_t, "time (s)")):
        ax.set_xlabel(x_field)
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_depth_sweep(rows, path):
    """Iterations and wall time against the acceleration depth."""
    fig, (ax_i, ax_t) = _new_axes(ncols=2)
    ps = [r["p"] for r in rows]
    ax_i.plot(ps, [r["iterations"] for r in rows], "o-")
    ax_i.set_ylabel("iterations")
    ax_t.plot(ps, [r["elapsed_seconds"] for r in rows], "o-")
    ax_t.set_ylabel("time (s)")
    for ax in (ax_i, ax_t):
        ax.set_xlabel("depth p")
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
