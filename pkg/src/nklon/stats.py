"""Success-performance estimation and correlation statistics.

The expected running time combines the success rate over independent
restarts with the mean cost of the successful ones; the number of restarts
before the first success is geometric, which gives
E(T) = ((1 - ps) / ps) * fe_max + mean_ts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special


class UnsolvedInstanceError(ValueError):
    """No successful run: the expected running time is undefined."""


@dataclass(frozen=True)
class SuccessStats:
    """Restart-experiment summary for one instance."""

    ps: float
    mean_ts: float | None  # mean evaluations of successful runs; None iff ps == 0
    fe_max: int
    n_runs: int
    solved: bool

    def __post_init__(self):
        if (self.ps > 0) != self.solved:
            raise ValueError("solved flag inconsistent with ps")
        if self.solved and self.mean_ts is None:
            raise ValueError("mean_ts required when solved")


def ets(stats: SuccessStats) -> float:
    """Expected evaluations to first success under independent restarts."""
    if not stats.solved:
        raise UnsolvedInstanceError(
            f"ps = 0 over {stats.n_runs} runs; expected running time undefined")
    return ((1.0 - stats.ps) / stats.ps) * stats.fe_max + stats.mean_ts


# ---------------------------------------------------------------------------
# distribution tails via the regularized incomplete beta function
# ---------------------------------------------------------------------------

def student_t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with df degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    half = 0.5 * float(special.betainc(0.5 * df, 0.5, x))
    return half if t >= 0 else 1.0 - half


def student_t_cdf(t: float, df: float) -> float:
    return 1.0 - student_t_sf(t, df)


def t_pvalue_two_sided(t: float, df: float) -> float:
    return min(1.0, 2.0 * student_t_sf(abs(t), df))


def f_sf(f: float, d1: float, d2: float) -> float:
    """P(F > f) for the F distribution with (d1, d2) degrees of freedom."""
    if d1 <= 0 or d2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return float(special.betainc(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f)))


def f_cdf(f: float, d1: float, d2: float) -> float:
    return 1.0 - f_sf(f, d1, d2)


# ---------------------------------------------------------------------------
# correlation estimators
# ---------------------------------------------------------------------------

def midranks(x) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their positions."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    ends = np.r_[starts[1:], len(xs)]
    avg = (starts + ends - 1) / 2.0 + 1.0
    out = np.empty(len(xs))
    out[order] = np.repeat(avg, ends - starts)
    return out


def _corr_p(r: float, m: int) -> float:
    """Two-sided p for a correlation r on m points via the t transform."""
    if 1.0 - r * r <= 0.0:
        return 0.0
    t = r * math.sqrt((m - 2) / (1.0 - r * r))
    return t_pvalue_two_sided(t, m - 2)


def pearson(x, y) -> tuple[float, float]:
    """Sample Pearson correlation and its two-sided t-test p-value."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d vectors of equal length")
    m = len(x)
    if m < 3:
        raise ValueError(f"need at least 3 observations, got {m}")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(float(xc @ xc))
    sy = math.sqrt(float(yc @ yc))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("zero variance input")
    r = float(xc @ yc) / (sx * sy)
    r = max(-1.0, min(1.0, r))
    return r, _corr_p(r, m)


def spearman(x, y) -> tuple[float, float]:
    """Rank correlation (mid-ranks) with the same t-approximation p-value."""
    return pearson(midranks(x), midranks(y))


def correlation_matrix(columns: dict[str, np.ndarray]) -> list[dict]:
    """Pairwise Pearson + Spearman over named columns, NaN-aware.

    Returns long-format rows (var_a, var_b, pearson_r, pearson_p,
    spearman_rho, spearman_p, n_obs) for every ordered pair, using
    pairwise-complete observations; degenerate pairs get NaN statistics.
    """
    names = list(columns)
    arrays = {k: np.asarray(v, dtype=float) for k, v in columns.items()}
    rows = []
    for a in names:
        for b in names:
            xa, xb = arrays[a], arrays[b]
            mask = np.isfinite(xa) & np.isfinite(xb)
            n_obs = int(mask.sum())
            out = {"var_a": a, "var_b": b, "n_obs": n_obs,
                   "pearson_r": math.nan, "pearson_p": math.nan,
                   "spearman_rho": math.nan, "spearman_p": math.nan}
            if n_obs >= 3:
                try:
                    out["pearson_r"], out["pearson_p"] = pearson(xa[mask], xb[mask])
                except ValueError:
                    pass
                try:
                    out["spearman_rho"], out["spearman_p"] = spearman(xa[mask], xb[mask])
                except ValueError:
                    pass
            rows.append(out)
    return rows
