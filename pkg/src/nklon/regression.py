"""Ordinary least squares with dummy coding, AIC backward elimination, and
residual diagnostics.

Fits go through a QR decomposition (never the normal equations). Categorical
columns expand to treatment-coded indicator blocks with the smallest level as
baseline; a block is dropped or kept as one unit during elimination.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr as pivoted_qr
from scipy.linalg import solve_triangular
from scipy.special import ndtri

from .stats import f_sf, t_pvalue_two_sided


class RankDeficiencyError(np.linalg.LinAlgError):
    """Design matrix is numerically rank deficient."""


@dataclass
class Dataset:
    """Named numeric columns, one response, and the expansion bookkeeping."""

    columns: dict[str, np.ndarray]
    response: str
    dummy_blocks: dict[str, list[str]] = field(default_factory=dict)
    log_columns: tuple[str, ...] = ()
    n_dropped: int = 0

    @property
    def n_rows(self) -> int:
        return len(self.columns[self.response])

    def predictor_units(self) -> list[str]:
        """Droppable units: dummy-block names plus plain predictor columns."""
        in_blocks = {c for cols in self.dummy_blocks.values() for c in cols}
        units = list(self.dummy_blocks)
        units += [c for c in self.columns if c != self.response and c not in in_blocks]
        return units

    def expand_units(self, units: list[str]) -> list[str]:
        cols = []
        for u in units:
            if u in self.dummy_blocks:
                cols.extend(self.dummy_blocks[u])
            elif u in self.columns:
                cols.append(u)
            else:
                raise KeyError(f"unknown predictor {u!r}")
        return cols


def build_dataset(records: list[dict], response: str, *, categorical: tuple[str, ...] = (),
                  log_transform: tuple[str, ...] = ()) -> Dataset:
    """Assemble a Dataset from row dicts, dropping rows with missing values.

    `categorical` names expand to 0/1 indicator columns per level (smallest
    level is the baseline and gets no column). `log_transform` names are
    replaced by log(<name>) columns; the registry records the new names.
    """
    if not records:
        raise ValueError("no records")
    names = list(records[0])
    if response not in names:
        raise ValueError(f"response {response!r} not in records")
    keep = []
    for rec in records:
        vals = [rec[c] for c in names]
        if any(v is None or (isinstance(v, float) and math.isnan(v)) for v in vals):
            continue
        keep.append(rec)
    n_dropped = len(records) - len(keep)
    if not keep:
        raise ValueError("all rows dropped for missingness")

    columns: dict[str, np.ndarray] = {}
    dummy_blocks: dict[str, list[str]] = {}
    log_columns: list[str] = []
    out_response = response
    for c in names:
        raw = np.array([rec[c] for rec in keep], dtype=float)
        if c in categorical:
            levels = sorted(set(raw.tolist()))
            block = []
            for lv in levels[1:]:
                lv_name = f"{c}{lv:g}"
                columns[lv_name] = (raw == lv).astype(float)
                block.append(lv_name)
            dummy_blocks[c] = block
        elif c in log_transform:
            if np.any(raw <= 0):
                raise ValueError(f"cannot log-transform {c!r}: non-positive values")
            new = f"log({c})"
            columns[new] = np.log(raw)
            log_columns.append(new)
            if c == response:
                out_response = new
        else:
            columns[c] = raw
    return Dataset(columns=columns, response=out_response, dummy_blocks=dummy_blocks,
                   log_columns=tuple(log_columns), n_dropped=n_dropped)


@dataclass(frozen=True)
class RegressionFit:
    names: list[str]          # coefficient names, intercept first
    beta: np.ndarray
    se: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    rss: float
    tss: float
    sigma: float              # residual standard error
    df_resid: int
    r_squared: float
    adj_r_squared: float
    f_stat: float
    f_pvalue: float
    units: list[str]          # droppable units that entered the model
    n_dropped: int
    design: np.ndarray        # the full design matrix, intercept included

    @property
    def n_obs(self) -> int:
        return len(self.residuals)

    @property
    def n_predictors(self) -> int:
        return len(self.names) - 1

    def coefficient(self, name: str) -> float:
        return float(self.beta[self.names.index(name)])


def ols_fit(ds: Dataset, units: list[str] | None = None) -> RegressionFit:
    """Least squares via QR, with the usual coefficient and fit statistics."""
    if units is None:
        units = ds.predictor_units()
    cols = ds.expand_units(units)
    y = ds.columns[ds.response]
    m = len(y)
    X = np.column_stack([np.ones(m)] + [ds.columns[c] for c in cols]) \
        if cols else np.ones((m, 1))
    names = ["(Intercept)"] + cols
    p = len(cols)
    if m <= p + 1:
        raise ValueError(f"{m} rows cannot identify {p + 1} coefficients")

    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    tol = np.finfo(float).eps * max(X.shape) * (diag.max() if diag.size else 1.0)
    if np.any(diag <= tol):
        _, Rp, piv = pivoted_qr(X, mode="economic", pivoting=True)
        rank = int(np.sum(np.abs(np.diag(Rp)) > tol))
        bad = sorted(names[i] for i in piv[rank:])
        raise RankDeficiencyError(f"design matrix is rank deficient; "
                                  f"collinear columns: {', '.join(bad)}")
    beta = solve_triangular(R, Q.T @ y)
    fitted = X @ beta
    e = y - fitted
    rss = float(e @ e)
    tss = float(((y - y.mean()) ** 2).sum())
    df = m - p - 1
    sigma2 = rss / df
    r_inv = solve_triangular(R, np.eye(p + 1))
    se = np.sqrt(sigma2 * (r_inv * r_inv).sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_values = np.where(se > 0, beta / se, np.nan)
    p_values = np.array([t_pvalue_two_sided(t, df) if np.isfinite(t) else np.nan
                         for t in t_values])
    if tss > 0:
        r2 = 1.0 - rss / tss
    else:
        r2 = 0.0  # constant response explains nothing
    adj = 1.0 - (1.0 - r2) * (m - 1) / df if df > 0 else np.nan
    if p > 0 and rss > 0 and tss > 0:
        f_stat = ((tss - rss) / p) / (rss / df)
        f_p = f_sf(f_stat, p, df)
    elif p > 0 and rss == 0 and tss > 0:
        f_stat, f_p = math.inf, 0.0
    else:
        f_stat, f_p = math.nan, math.nan
    return RegressionFit(names=names, beta=beta, se=se, t_values=t_values,
                         p_values=p_values, residuals=e, fitted=fitted, rss=rss,
                         tss=tss, sigma=math.sqrt(sigma2), df_resid=df,
                         r_squared=r2, adj_r_squared=adj, f_stat=f_stat, f_pvalue=f_p,
                         units=list(units), n_dropped=ds.n_dropped, design=X)


def _perfect_fit(fit: RegressionFit) -> bool:
    """Residuals at floating-point noise level relative to the fitted scale."""
    scale = max(1.0, float(np.abs(fit.fitted).max(initial=0.0)))
    return fit.rss <= (1e-12 * scale) ** 2 * fit.n_obs


def aic(fit: RegressionFit) -> float:
    """Gaussian AIC up to an additive constant shared by models of one dataset."""
    m = fit.n_obs
    if _perfect_fit(fit):
        warnings.warn("perfect fit: AIC is -inf", RuntimeWarning)
        return -math.inf
    return m * math.log(fit.rss / m) + 2 * (fit.n_predictors + 2)


def backward_eliminate(ds: Dataset, units: list[str] | None = None,
                       p_threshold: float | None = None,
                       ) -> tuple[RegressionFit, list[dict]]:
    """Drop the predictor whose removal lowers AIC most, until none does.

    Dummy blocks count as single droppable units. Ties break on unit name.
    With `p_threshold`, a post-pass then repeatedly drops the least
    significant unit whose best column p-value exceeds the threshold.
    """
    current = list(units) if units is not None else ds.predictor_units()
    fit = ols_fit(ds, current)
    best_aic = aic(fit)
    trace = [{"action": "start", "aic": best_aic, "units": list(current)}]
    while current:
        candidates = []
        for u in sorted(current):
            reduced = [x for x in current if x != u]
            cand_fit = ols_fit(ds, reduced)
            candidates.append((aic(cand_fit), u, cand_fit))
        cand_aic, drop, cand_fit = min(candidates, key=lambda c: (c[0], c[1]))
        if cand_aic < best_aic:
            current = [x for x in current if x != drop]
            fit, best_aic = cand_fit, cand_aic
            trace.append({"action": f"drop {drop}", "aic": best_aic,
                          "units": list(current)})
        else:
            break
    if p_threshold is not None:
        while current:
            unit_p = {}
            for u in current:
                cols = ds.expand_units([u])
                unit_p[u] = min(fit.p_values[fit.names.index(c)] for c in cols)
            worst = max(sorted(unit_p), key=lambda u: unit_p[u])
            if unit_p[worst] <= p_threshold:
                break
            current = [x for x in current if x != worst]
            fit = ols_fit(ds, current)
            trace.append({"action": f"drop {worst} (p={unit_p[worst]:.3g})",
                          "aic": aic(fit), "units": list(current)})
    return fit, trace


@dataclass(frozen=True)
class DiagnosticsBundle:
    fitted: np.ndarray
    residuals: np.ndarray
    leverage: np.ndarray
    studentized: np.ndarray          # NaN at exact-fit (leverage 1) points
    flagged: np.ndarray              # True where studentization is impossible
    qq_theoretical: np.ndarray
    qq_observed: np.ndarray          # sorted studentized residuals
    partial_residuals: dict[str, tuple[np.ndarray, np.ndarray]]  # name -> (x, e + b*x)


def diagnostics(fit: RegressionFit) -> DiagnosticsBundle:
    """Residual, leverage, QQ, and component+residual data for a fit."""
    X = fit.design
    Q, _ = np.linalg.qr(X)
    leverage = (Q * Q).sum(axis=1)
    flagged = leverage >= 1.0 - 1e-12
    stud = np.full(len(leverage), np.nan)
    if _perfect_fit(fit):
        # no residual scale to studentize against
        flagged = np.ones(len(leverage), dtype=bool)
        ok = ~flagged
    else:
        ok = ~flagged
        stud[ok] = fit.residuals[ok] / (fit.sigma * np.sqrt(1.0 - leverage[ok]))
    obs = np.sort(stud[ok])
    m = len(obs)
    theo = ndtri((np.arange(1, m + 1) - 0.5) / m) if m else np.empty(0)
    partial = {}
    for j, name in enumerate(fit.names):
        if name == "(Intercept)":
            continue
        x = X[:, j]
        partial[name] = (x.copy(), fit.residuals + fit.beta[j] * x)
    return DiagnosticsBundle(fitted=fit.fitted.copy(), residuals=fit.residuals.copy(),
                             leverage=leverage, studentized=stud, flagged=flagged,
                             qq_theoretical=theo, qq_observed=obs,
                             partial_residuals=partial)


def _fmt_p(p: float) -> str:
    if math.isnan(p):
        return "NA"
    if p < 2.2e-16:
        return "< 2.2e-16"
    return f"{p:.3g}"


def fit_report(fit: RegressionFit, title: str = "Linear regression") -> str:
    """Plain-text coefficient table plus the usual summary lines."""
    lines = [title, ""]
    name_w = max(len(s) for s in fit.names)
    header = f"{'':<{name_w}}  {'Estimate':>12}  {'Std. Error':>12}  {'t value':>9}  Pr(>|t|)"
    lines.append(header)
    for i, name in enumerate(fit.names):
        lines.append(f"{name:<{name_w}}  {fit.beta[i]:>12.5g}  {fit.se[i]:>12.5g}  "
                     f"{fit.t_values[i]:>9.4g}  {_fmt_p(fit.p_values[i])}")
    lines.append("")
    lines.append(f"Residual standard error: {fit.sigma:.4g} on {fit.df_resid} "
                 f"degrees of freedom")
    if fit.n_dropped:
        lines.append(f"  ({fit.n_dropped} observations deleted due to missingness)")
    lines.append(f"Multiple R-squared: {fit.r_squared:.4f},  "
                 f"Adjusted R-squared: {fit.adj_r_squared:.4f}")
    lines.append(f"F-statistic: {fit.f_stat:.4g} on {fit.n_predictors} and "
                 f"{fit.df_resid} DF,  p-value: {_fmt_p(fit.f_pvalue)}")
    return "\n".join(lines) + "\n"
