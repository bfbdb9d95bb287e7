"""
Log-log rate curves: one marker line per series plus its dashed fitted power law.
"""
import logging
import math
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

params = {
    "axes.labelsize": 12,
    "axes.titlesize": 13,
    "font.size": 11,
    "legend.fontsize": 10,
    "lines.linewidth": 2,
    "figure.figsize": [6.4, 4.4],
}


def loglog_figure(
    series: Dict[str, Tuple[Sequence[float], Sequence[float]]],
    fits: Optional[Dict[str, Tuple[float, float]]] = None,
    title: str = "",
    x_label: str = "n",
    y_label: str = "mean error",
):
    """
    Plot series on log axes.

    Args:
        series: name -> (xs, ys); nonpositive points are dropped
        fits: name -> (slope, intercept) of log y = intercept + slope log x (natural logs)
        title: plot title
        x_label: horizontal axis label
        y_label: vertical axis label

    Returns:
        matplotlib Figure
    """
    fits = fits or {}
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        for name, (xs, ys) in series.items():
            xs = np.asarray(xs, dtype=float)
            ys = np.asarray(ys, dtype=float)
            keep = (xs > 0) & (ys > 0)
            if not keep.any():
                continue
            xs, ys = xs[keep], ys[keep]
            (line,) = ax.plot(xs, ys, marker="o", label=name)
            if name in fits:
                slope, intercept = fits[name]
                ax.plot(xs, math.exp(intercept) * xs ** slope, linestyle="--", color=line.get_color(),
                        label=f"{name} fit (slope {slope:.3f})")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(x_label)
        ax.set_ylabel(y_label)
        if title:
            ax.set_title(title)
        if ax.lines:
            ax.legend()
        fig.tight_layout()
    return fig


def write_loglog_svg(path: Union[str, Path], series, fits=None, **labels) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig = loglog_figure(series, fits, **labels)
    try:
        fig.savefig(path, format="svg")
    finally:
        plt.close(fig)
    logger.info(f"wrote {path}")
    return path
