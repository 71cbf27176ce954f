"""Static figures rendered to PNG with the non-interactive Agg backend.

Figures carry no timestamp or software metadata, so the files are
byte-reproducible for fixed inputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .hilbert import Sample  # noqa: E402

STYLE = {
    "figure.figsize": (7.0, 3.6),
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "lines.linewidth": 1.2,
    "path.simplify": False,
    "svg.hashsalt": "arhlab",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    fig.savefig(tmp, format="png", metadata={"Software": None})
    plt.close(fig)
    tmp.replace(path)
    return path


def plot_segments(sample: Sample, path, count: int = 5, title: str = "") -> Path:
    """Consecutive segments drawn end to end on the time axis [0, count]."""
    count = min(count, len(sample))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        t = sample.grid.base.points
        for i in range(count):
            ax.plot(i + t, sample.values[i, : t.size], color=f"C{i % 10}")
            if i:
                ax.axvline(i, color="0.8", lw=0.6, zorder=0)
        ax.set_xlabel("time (segments)")
        ax.set_ylabel("X(t)")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_forecast(months, actual, predicted, path, history=None, title: str = "") -> Path:
    """Observed and predicted values of a forecast year, optionally after past years."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        months = np.asarray(months)
        if history is not None:
            h = np.asarray(history, dtype=float).ravel()
            ax.plot(np.arange(-h.size, 0) + months[0], h, color="0.6", label="history")
        ax.plot(months, actual, "o-", color="k", ms=3, label="observed")
        ax.plot(months, predicted, "s--", color="C3", ms=3, label="predicted")
        ax.set_xlabel("month")
        ax.set_ylabel("value")
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_cusum(bridge_norms, critical: float | None, path, title: str = "") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        b = np.asarray(bridge_norms)
        ax.plot(np.arange(1, b.size + 1), b, color="C0", label="bridge norm")
        if critical is not None:
            ax.axhline(critical, color="C3", ls="--", label="critical value")
        ax.set_xlabel("index")
        ax.set_ylabel("||S(j) - (j/N) S(N)|| / sqrt(N)")
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_spectrum(eigenvalues, path, count: int = 20, title: str = "") -> Path:
    lam = np.asarray(eigenvalues)[:count]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        pos = lam > 0
        ax.semilogy(np.arange(1, lam.size + 1)[pos], lam[pos], "o-", ms=3)
        ax.set_xlabel("index")
        ax.set_ylabel("eigenvalue")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_histogram(values, path, reference: float | None = None, xlabel: str = "",
                   title: str = "") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.hist(np.asarray(values), bins=30, color="C0", alpha=0.8)
        if reference is not None:
            ax.axvline(reference, color="C3", ls="--")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("count")
        if title:
            ax.set_title(title)
        return _save(fig, path)
