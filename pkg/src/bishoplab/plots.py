"""Figure rendering for the command-line report path.

Imported lazily: only the --plot flag pays the matplotlib import.  The
Agg backend keeps everything headless, and the PNG metadata is pinned so
repeated runs of the same manifest produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_META = {"Software": "bishop"}


def _finish(fig, path: str) -> None:
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def line_plot(
    path: str,
    x: np.ndarray,
    curves,  # iterable of (label, ndarray)
    title: str,
    xlabel: str,
    ylabel: str,
    logy: bool = False,
) -> None:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for label, y in curves:
        ax.plot(x, y, lw=1.0, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if any(label for label, _ in curves):
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _finish(fig, path)


def profile_plot(
    path: str, ts: np.ndarray, log_abs: np.ndarray, tol: float, title: str
) -> None:
    """Determinant modulus over one period, log scale, tol line drawn."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    with np.errstate(over="ignore"):
        ax.semilogy(ts, np.exp(log_abs), lw=0.8, label="|D(t)|")
    ax.axhline(tol, color="red", lw=0.8, ls="--", label=f"tol = {tol:g}")
    ax.set_title(title)
    ax.set_xlabel("t")
    ax.set_ylabel("|D|")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _finish(fig, path)


def scaling_plot(
    path: str, tols, measures, title: str
) -> None:
    """Level-set measure against tolerance, log-log with a slope-1 guide."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(tols, measures, "o-", lw=1.0, label="measure")
    guide = [measures[0] * t / tols[0] for t in tols]
    ax.loglog(tols, guide, "--", lw=0.8, color="gray", label="slope 1")
    ax.set_title(title)
    ax.set_xlabel("tol")
    ax.set_ylabel("measure")
    ax.grid(True, alpha=0.3, which="both")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _finish(fig, path)
