"""Matplotlib figure rendering for the CLI report path."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_indicator(imap, path, db_range=(-30.0, 0.0), title=None):
    """Render a dB-scale indicator map to an image file."""
    if imap.scale != "db":
        raise ValueError("render_indicator expects a dB-scale map")
    g = imap.grid
    lo, hi = db_range
    fig, ax = plt.subplots(figsize=(5.4, 4.8))
    im = ax.imshow(
        imap.as_image(),
        origin="lower",
        extent=(g.x_min, g.x_max, g.y_min, g.y_max),
        vmin=lo,
        vmax=hi,
        cmap="jet",
        interpolation="nearest",
    )
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label="dB")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_residuals(trace, path, title=None):
    """Render reconstruction and CV residual curves versus iteration."""
    it = np.asarray(trace.iteration)
    fig, ax = plt.subplots(figsize=(5.8, 4.0))
    ax.semilogy(it, trace.r_rec, label="reconstruction residual")
    r_cv = np.asarray(trace.r_cv, dtype=float)
    if np.any(np.isfinite(r_cv)):
        ax.semilogy(it, r_cv, label="CV residual")
        if trace.n_opt is not None:
            ax.axvline(trace.n_opt, color="k", ls="--", lw=0.8, label="selected iterate")
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual norm")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
