"""Static PNG renderings of recovery output, written next to the CSV.

Uses the Agg backend unconditionally; this package never opens windows.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finite_mask(x):
    return np.isfinite(np.asarray(x, dtype=float))


def plot_recovered(path, x, q_hat, epsilon0, a=None) -> None:
    """Recovered potential and the contour functional it came from."""
    x = np.asarray(x, dtype=float)
    fig, (ax_q, ax_e) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    ax_q.plot(x, np.real(q_hat), label="Re q", color="tab:blue")
    ax_q.plot(x, np.imag(q_hat), label="Im q", color="tab:orange")
    ax_q.set_ylabel("recovered q")
    ax_e.plot(x, np.real(epsilon0), label="Re eps0", color="tab:blue")
    ax_e.plot(x, np.imag(epsilon0), label="Im eps0", color="tab:orange")
    ax_e.set_ylabel("epsilon0")
    ax_e.set_xlabel("x")
    for ax in (ax_q, ax_e):
        if a is not None:
            ax.axvline(a, color="0.6", linestyle=":", linewidth=1.0)
        ax.legend(loc="best", fontsize=9)
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_mhat_decay(path, contour, mhat) -> None:
    """|Mhat| against |s| on log axes; the tail slope is the decay order."""
    s = np.abs(contour.s)
    mag = np.abs(np.asarray(mhat, dtype=complex))
    keep = (s > 0) & (mag > 0)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.loglog(s[keep], mag[keep], ".", markersize=3, color="tab:blue")
    ax.set_xlabel("|s|")
    ax.set_ylabel("|Mhat|")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_roundtrip_error(path, x, err_abs, exclusion=None) -> None:
    """Pointwise |q_hat - q| from a round-trip run."""
    x = np.asarray(x, dtype=float)
    err = np.asarray(err_abs, dtype=float)
    keep = _finite_mask(err) & (err > 0)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.semilogy(x[keep], err[keep], ".-", markersize=3, color="tab:red")
    if exclusion is not None:
        lo, hi = exclusion
        ax.axvspan(lo, hi, color="0.85", zorder=0)
    ax.set_xlabel("x")
    ax.set_ylabel("|q_hat - q|")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
