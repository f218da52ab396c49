"""Log-log convergence plots written as self-contained, reproducible SVG files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import InsufficientDataError, NoDataError  # noqa: E402
from .harness import ZERO_ERROR, fit_rate  # noqa: E402

# fixed salt and no timestamp: identical input gives an identical file
_RC = {"svg.hashsalt": "walkbsde", "svg.fonttype": "path", "font.size": 9}


def emit_plot(points, path, reference_slope: float | None = None, title: str = "",
              ylabel: str = "error"):
    """Scatter of ``(n, error)`` on log-log axes with fitted and reference lines.

    The fitted line needs at least three positive errors and the
    reference line (slope ``reference_slope``, anchored at the first
    point) at least two points; with fewer, only the scatter is drawn.
    Returns the fitted :class:`RateFit` or ``None``.
    """
    pts = [(int(n), float(e)) for n, e in points]
    if not pts:
        raise NoDataError("nothing to plot: the rate table is empty")
    shown = [(n, e) for n, e in pts if e > ZERO_ERROR]
    fit = None
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        if shown:
            ns = np.array([n for n, _ in shown], dtype=float)
            es = np.array([e for _, e in shown])
            ax.loglog(ns, es, "o", color="C0", label="measured")
            if len(shown) >= 2:
                grid = np.geomspace(ns.min(), ns.max(), 50)
                try:
                    fit = fit_rate(shown)
                except InsufficientDataError:
                    fit = None
                if fit is not None:
                    ax.loglog(grid, np.exp(fit.intercept) * grid ** fit.slope, "-", color="C0",
                              label=f"fit, slope {fit.slope:.3f}")
                if reference_slope is not None:
                    ref = es[0] * (grid / ns[0]) ** reference_slope
                    ax.loglog(grid, ref, "--", color="C3",
                              label=f"reference slope {reference_slope:.3g}")
            ax.legend(loc="best", frameon=False)
        else:
            ax.text(0.5, 0.5, "all errors are zero", ha="center", va="center",
                    transform=ax.transAxes)
        ax.set_xlabel("n")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return fit

