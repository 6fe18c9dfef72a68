"""Figure rendering for reports and snapshots (headless matplotlib).

Each figure lands next to its CSV so a run directory is self-contained:
rate plots are log-log with the target-rate reference line drawn through the
last data point, field plots show q (and u in 1D), block spectra are stem
plots over the dyadic index.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update(
    {
        "figure.figsize": (6.0, 4.0),
        "figure.dpi": 110,
        "savefig.bbox": "tight",
        "axes.grid": True,
        "grid.alpha": 0.3,
    }
)


def rate_plot(report, path: str) -> str | None:
    """Log-log error vs small parameter with the target-rate guide line.

    Returns the written path, or None (with a warning) for a report with no
    plottable points.
    """
    small = np.array(report.small_params, dtype=float)
    err = np.array(report.errors, dtype=float)
    ok = np.isfinite(err) & (err > 0)
    if not np.any(ok):
        import warnings

        warnings.warn(f"report has no plottable points; skipping {path}")
        return None
    fig, ax = plt.subplots()
    ax.loglog(small[ok], err[ok], "ko-", label="measured error")
    x0, y0 = small[ok][-1], err[ok][-1]
    guide = y0 * (small[ok] / x0) ** report.h
    ax.loglog(small[ok], guide, "k--", label=f"reference slope {report.h:g}")
    if report.slope is not None:
        ax.set_title(f"{report.family}: fitted slope {report.slope:.3f} (r2={report.r2:.4f})")
    ax.set_xlabel("small parameter")
    ax.set_ylabel(f"trajectory difference, {report.norm_flavor} s={report.s:g}")
    ax.legend()
    fig.savefig(path)
    plt.close(fig)
    return path


def field_plot(grid, state, path: str) -> str:
    """1D: q and u line plots; 2D: density image."""
    fig, ax = plt.subplots()
    if grid.dim == 1:
        (x,) = grid.meshgrid()
        ax.plot(x, state.q, label="q")
        ax.plot(x, state.u[0], label="u")
        ax.set_xlabel("x")
        ax.legend()
    else:
        im = ax.imshow(
            (1.0 + state.q).T,
            origin="lower",
            extent=(0, grid.length, 0, grid.length),
            cmap="viridis",
        )
        fig.colorbar(im, ax=ax, label="density")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    ax.set_title(f"t = {state.t:.4g}")
    fig.savefig(path)
    plt.close(fig)
    return path


def block_spectrum_plot(decomp, path: str) -> str:
    fig, ax = plt.subplots()
    ax.semilogy(decomp.js, np.maximum(decomp.block_l2, 1e-300), "ko-")
    ax.set_xlabel("dyadic index j")
    ax.set_ylabel("block L2 norm")
    fig.savefig(path)
    plt.close(fig)
    return path


def gap_plot(gap_summary: dict, path: str) -> str:
    """Order-parameter gap vs 1/alpha with the quadratic guide line."""
    small = 1.0 / np.array(gap_summary["alphas"], dtype=float)
    vals = np.array(gap_summary["integral_norms"], dtype=float)
    fig, ax = plt.subplots()
    ax.loglog(small, vals, "ko-", label="integrated gap")
    guide = vals[-1] * (small / small[-1]) ** 2
    ax.loglog(small, guide, "k--", label="reference slope 2")
    ax.set_xlabel("1/alpha")
    ax.set_ylabel("gap norm")
    ax.set_title(f"fitted slope {gap_summary['slope']:.3f}")
    ax.legend()
    fig.savefig(path)
    plt.close(fig)
    return path
