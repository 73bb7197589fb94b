"""Figure rendering for the report path.

All figures are drawn from the same data that lands in the report CSVs; the
CSVs stay the canonical machine-readable output.
"""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .stats import pearson  # noqa: E402


def _signif_code(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    if p < 0.1:
        return "'"
    return ""


def plot_correlogram(columns: dict[str, np.ndarray], path) -> None:
    """Scatter matrix, with Pearson coefficients in the upper panel."""
    names = list(columns)
    d = len(names)
    fig, axes = plt.subplots(d, d, figsize=(1.5 * d, 1.5 * d))
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            ax = axes[i][j]
            ax.set_xticks([])
            ax.set_yticks([])
            if i == j:
                ax.text(0.5, 0.5, a, ha="center", va="center", fontsize=11,
                        transform=ax.transAxes)
                continue
            x, y = columns[b], columns[a]
            mask = np.isfinite(x) & np.isfinite(y)
            if i > j:
                ax.plot(x[mask], y[mask], "o", ms=1.5, alpha=0.6)
            else:
                try:
                    r, p = pearson(x[mask], y[mask])
                    ax.text(0.5, 0.5, f"{r:.2f}{_signif_code(p)}",
                            ha="center", va="center",
                            fontsize=6 + 8 * abs(r), transform=ax.transAxes)
                except ValueError:
                    ax.text(0.5, 0.5, "NA", ha="center", va="center", fontsize=7,
                            transform=ax.transAxes)
    fig.suptitle("correlation matrix of observed variables")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_ets_scatter(columns: dict[str, np.ndarray], log_ets: np.ndarray, path) -> None:
    """log(ets) against every variable; the categorical first panel is boxed."""
    names = list(columns)
    cols = 4
    rows = math.ceil(len(names) / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.6 * rows))
    flat = np.ravel(axes)
    for ax in flat[len(names):]:
        ax.set_visible(False)
    for ax, name in zip(flat, names):
        x = columns[name]
        mask = np.isfinite(x) & np.isfinite(log_ets)
        if name == "k":
            levels = sorted(set(x[mask].tolist()))
            data = [log_ets[mask][x[mask] == lv] for lv in levels]
            ax.boxplot(data, tick_labels=[f"{lv:g}" for lv in levels])
        else:
            ax.plot(x[mask], log_ets[mask], "o", ms=2.5, alpha=0.7)
        ax.set_xlabel(name)
        ax.set_ylabel("log(ets)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_residual_qq(bundle, path) -> None:
    """Residuals vs fitted values, and the studentized-residual QQ panel."""
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(5.5, 8))
    top.plot(bundle.fitted, bundle.residuals, "o", ms=3, alpha=0.7)
    top.axhline(0.0, ls=":", color="k")
    top.set_xlabel("fitted values")
    top.set_ylabel("residuals")
    bottom.plot(bundle.qq_theoretical, bundle.qq_observed, "o", ms=3, alpha=0.7)
    lim = max(1.0, float(np.abs(bundle.qq_theoretical).max(initial=0.0)),
              float(np.abs(bundle.qq_observed).max(initial=0.0)))
    line = np.array([-lim, lim])
    bottom.plot(line, line, "r-", lw=1)
    bottom.set_xlabel("theoretical quantiles")
    bottom.set_ylabel("studentized residuals")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_component_residual(fit, bundle, path) -> None:
    """Partial residuals per predictor with the partial regression line."""
    names = list(bundle.partial_residuals)
    if not names:
        return
    cols = min(2, len(names))
    rows = math.ceil(len(names) / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(4.2 * cols, 3.2 * rows),
                             squeeze=False)
    flat = [ax for row in axes for ax in row]
    for ax in flat[len(names):]:
        ax.set_visible(False)
    for ax, name in zip(flat, names):
        x, pr = bundle.partial_residuals[name]
        ax.plot(x, pr, "o", ms=3, alpha=0.7)
        beta = fit.beta[fit.names.index(name)]
        xs = np.array([x.min(), x.max()])
        ax.plot(xs, pr.mean() + beta * (xs - x.mean()), "r:", lw=1.5)
        ax.set_xlabel(name)
        ax.set_ylabel("partial residual")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
