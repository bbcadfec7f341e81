"""PNG figures for CLI reports. Rendering is off-screen (Agg)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_profiles", "plot_residual", "plot_sweep", "plot_levels", "plot_oracle_compare"]

# no timestamp or version chunk, so identical inputs give identical files
_PNG_META = {"Software": None}


def _save(fig, file):
    fig.tight_layout()
    fig.savefig(file, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def plot_profiles(paths: dict, file, title=None):
    """Overlay of several paths, keyed by legend label."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, path in paths.items():
        ax.plot(path.t, path.x, lw=1.2, label=label)
    ax.axhline(1.0, color="0.6", lw=0.6, ls=":")
    ax.axhline(-1.0, color="0.6", lw=0.6, ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel("x(t)")
    if title:
        ax.set_title(title)
    if len(paths) > 1:
        ax.legend(fontsize=8)
    _save(fig, file)


def plot_residual(path, res, file):
    """|central-difference residual| on the interior nodes, log scale."""
    fig, ax = plt.subplots(figsize=(6.4, 3.2))
    vals = np.abs(np.asarray(res))
    ax.semilogy(path.t[1:-1], np.maximum(vals, 1e-300), lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("|residual|")
    _save(fig, file)


def plot_sweep(table, file):
    rows = [r for r in table.rows if np.isfinite(r.J)]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    eps = np.array([r.eps for r in rows])
    J = np.array([r.J for r in rows])
    ax.semilogx(eps, J, "o-", label="b_eps")
    ax.axhline(table.b_0, color="k", lw=0.8, ls="--", label="b_0")
    ax.set_xlabel("eps")
    ax.set_ylabel("level")
    ax.legend(fontsize=8)
    _save(fig, file)


def plot_levels(table, file):
    names = list(table.levels)
    vals = [table.levels[k].value for k in names]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.bar(names, vals, color="0.55")
    for i, v in enumerate(vals):
        ax.text(i, v, f"{v:.6f}", ha="center", va="bottom", fontsize=8)
    ax.set_ylabel("J")
    _save(fig, file)


def plot_oracle_compare(path, oracle_x, file):
    """Discrete minimiser against the oracle profile, with the pointwise gap."""
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(6.4, 5.0), sharex=True)
    ax0.plot(path.t, path.x, lw=1.2, label="minimiser")
    ax0.plot(path.t, oracle_x, lw=0.8, ls="--", label="oracle")
    ax0.set_ylabel("x(t)")
    ax0.legend(fontsize=8)
    ax1.plot(path.t, path.x - oracle_x, lw=0.8)
    ax1.set_xlabel("t")
    ax1.set_ylabel("difference")
    _save(fig, file)
