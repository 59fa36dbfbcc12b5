"""Figures written alongside the CSV outputs (headless Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update(
    {
        "font.size": 9,
        "axes.labelsize": 9,
        "legend.fontsize": 8,
        "xtick.labelsize": 8,
        "ytick.labelsize": 8,
        "figure.dpi": 100,
        "savefig.bbox": "tight",
    }
)

# Fixed metadata keeps repeated runs byte-stable.
_PNG_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def plot_convergence(feasibility, objective_rows, path, epsilon=None):
    """Feasibility ``||C - D||_inf`` and objective terms per iteration."""
    it = np.arange(1, len(feasibility) + 1)
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(8, 3))
    ax0.semilogy(it, np.maximum(feasibility, np.finfo(float).tiny), "k-")
    if epsilon is not None:
        ax0.axhline(epsilon, color="r", ls="--", lw=0.8, label=r"$\varepsilon$")
        ax0.legend(frameon=False)
    ax0.set_xlabel("iteration")
    ax0.set_ylabel(r"$\|C-D\|_\infty$")
    if objective_rows:
        for key, style in (("regression", "b-"), ("mmd", "g-"), ("group_norm_sum", "m-")):
            ax1.plot(it, [getattr(r, key) for r in objective_rows], style, label=key)
        ax1.set_yscale("symlog", linthresh=1e-6)
        ax1.legend(frameon=False)
    ax1.set_xlabel("iteration")
    _save(fig, path)


def plot_grid(records, path_kappa, path_xi):
    """Best M-F1 per kappa (over xi) and per xi (over kappa)."""
    kappas = sorted({r.kappa for r in records})
    xis = sorted({r.xi for r in records})
    by_k = [max(r.macro_f1 for r in records if r.kappa == k) for k in kappas]
    by_x = [max(r.macro_f1 for r in records if r.xi == x) for x in xis]
    acc_k = [max(r.accuracy for r in records if r.kappa == k) for k in kappas]
    acc_x = [max(r.accuracy for r in records if r.xi == x) for x in xis]

    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.plot(kappas, by_k, "o-", ms=3, label="M-F1")
    ax.plot(kappas, acc_k, "s--", ms=3, label="ACC")
    ax.set_xlabel(r"$\kappa$ (salient groups)")
    ax.set_ylabel("best over $\\xi$")
    ax.set_ylim(0, 1.02)
    ax.legend(frameon=False)
    _save(fig, path_kappa)

    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.plot(xis, by_x, "o-", ms=3, label="M-F1")
    ax.plot(xis, acc_x, "s--", ms=3, label="ACC")
    if min(xis) > 0:
        ax.set_xscale("log")
    else:
        ax.set_xscale("symlog", linthresh=min([x for x in xis if x > 0], default=1.0))
    ax.set_xlabel(r"$\xi$ (MMD weight)")
    ax.set_ylabel(r"best over $\kappa$")
    ax.set_ylim(0, 1.02)
    ax.legend(frameon=False)
    _save(fig, path_xi)


def plot_mask(mask, regions, path):
    """Heat map of accumulated group norms with selected rectangles outlined."""
    fig, ax = plt.subplots(figsize=(3.5, 3.5))
    im = ax.imshow(mask, cmap="gray", vmin=0, vmax=max(float(mask.max()), 1e-300), interpolation="nearest")
    for r in regions:
        ax.add_patch(plt.Rectangle((r.x - 0.5, r.y - 0.5), r.w, r.h, fill=False, ec="tab:red", lw=0.6))
    ax.set_xticks([])
    ax.set_yticks([])
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04, label=r"$\sum \|\hat C_i\|_F$")
    _save(fig, path)
