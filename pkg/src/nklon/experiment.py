"""Experiment orchestration: instance sweeps, resumability, report building.

A sweep walks every (n, k, seed) triple of a plan through generate ->
partition -> LON -> metrics -> restart experiment, writing one LON file and
one JSON part per instance plus combined CSVs and a manifest. Parts are the
resume unit: a rerun skips triples whose part carries the same config hash.
The report path turns the combined CSVs into aggregate tables, correlation
matrices, regression summaries, diagnostics data, and (optionally) figures.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, fields as dc_fields
from pathlib import Path

import numpy as np

from .basins import basin_partition, global_optimum
from .ils import IlsConfig, default_fe_max, read_runs_csv, restart_experiment
from .lon import extract_lon, write_lon
from .metrics import CSV_FIELDS, metrics_row, row_to_dict
from .nk import full_fitness, generate_instance
from .regression import (backward_eliminate, build_dataset, diagnostics,
                         fit_report, ols_fit)
from .stats import SuccessStats, UnsolvedInstanceError, correlation_matrix, ets, spearman


class PlanError(ValueError):
    """Invalid experiment plan."""


class ReportInputError(ValueError):
    """Report inputs do not describe the same instance set."""


METRIC_NAMES = ("nv", "lo", "lv", "fnn", "wii", "cc", "zout", "y2", "knn")
EXTRA_FIELDS = ("fe_max", "restarts", "ps", "mean_ts", "ets")
SWEEP_CSV_FIELDS = CSV_FIELDS + EXTRA_FIELDS


@dataclass
class ExperimentPlan:
    n: int
    k_list: list[int]
    seeds_per_k: int
    seed_base: int = 0
    d: int = 2
    fe_max: int | None = None         # default: floor(2**n / 5)
    restarts: int = 500
    perturbation_bits: int = 2
    ils_seed: int = 0
    out: str = "sweep-out"
    workers: int = 1

    def __post_init__(self):
        if not 1 <= self.n <= 30:
            raise PlanError(f"n={self.n} outside [1, 30]")
        if not self.k_list:
            raise PlanError("k_list is empty")
        for k in self.k_list:
            if not 0 <= k <= self.n - 1:
                raise PlanError(f"k={k} outside [0, n-1] for n={self.n}")
        if len(set(self.k_list)) != len(self.k_list):
            raise PlanError("duplicate entries in k_list")
        if self.seeds_per_k < 1:
            raise PlanError("seeds_per_k must be >= 1")
        if not 1 <= self.d <= self.n:
            raise PlanError(f"d={self.d} outside [1, n]")
        if self.workers < 1:
            raise PlanError("workers must be >= 1")

    @property
    def resolved_fe_max(self) -> int:
        return self.fe_max if self.fe_max is not None else default_fe_max(self.n)

    def triples(self) -> list[tuple[int, int, int]]:
        return [(self.n, k, self.seed_base + i)
                for k in self.k_list for i in range(self.seeds_per_k)]


_PLAN_INT_KEYS = {"n", "seeds_per_k", "seed_base", "d", "fe_max", "restarts",
                  "perturbation_bits", "ils_seed", "workers"}


def plan_from_file(path) -> ExperimentPlan:
    """Parse the flat `key = value` plan format (hash comments allowed)."""
    values: dict = {}
    known = {f.name for f in dc_fields(ExperimentPlan)}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PlanError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in known:
                raise PlanError(f"{path}: line {lineno}: unknown key {key!r}")
            try:
                if key == "k_list":
                    values[key] = [int(x) for x in val.replace(",", " ").split()]
                elif key in _PLAN_INT_KEYS:
                    values[key] = int(val)
                else:
                    values[key] = val
            except ValueError as exc:
                raise PlanError(f"{path}: line {lineno}: {exc}") from None
    missing = {"n", "k_list", "seeds_per_k"} - set(values)
    if missing:
        raise PlanError(f"{path}: missing required keys: {', '.join(sorted(missing))}")
    return ExperimentPlan(**values)


def instance_master_seed(ils_seed: int, n: int, k: int, seed: int) -> int:
    ss = np.random.SeedSequence([ils_seed, n, k, seed])
    return int(ss.generate_state(1, np.uint64)[0])


def config_hash(n: int, k: int, seed: int, d: int, fe_max: int, restarts: int,
                perturbation_bits: int, master_seed: int) -> str:
    text = f"{n},{k},{seed},{d},{fe_max},{restarts},{perturbation_bits},{master_seed}"
    return hashlib.sha1(text.encode()).hexdigest()[:16]


def run_instance(n: int, k: int, seed: int, d: int, cfg: IlsConfig):
    """Full per-instance pipeline; returns (lon, metrics row, stats, records, ets)."""
    inst = generate_instance(n, k, seed)
    fv = full_fitness(inst)
    part = basin_partition(inst, fv)
    _, go_f = global_optimum(part)
    lon = extract_lon(inst, part, d)
    row = metrics_row(lon)
    stats, records = restart_experiment(inst, go_f, cfg, fv=fv)
    try:
        ets_value = ets(stats)
    except UnsolvedInstanceError:
        ets_value = None
    return lon, row, stats, records, ets_value


def _part_paths(out: Path, n: int, k: int, seed: int) -> tuple[Path, Path]:
    name = f"n{n}_k{k}_s{seed}"
    return out / "parts" / f"{name}.json", out / "lons" / f"{name}.lon"


def _compute_and_store(args) -> tuple[str, str]:
    """Worker body: run one instance and persist its part + LON file."""
    n, k, seed, d, fe_max, restarts, pbits, ils_seed, out_str = args
    out = Path(out_str)
    part_path, lon_path = _part_paths(out, n, k, seed)
    master = instance_master_seed(ils_seed, n, k, seed)
    h = config_hash(n, k, seed, d, fe_max, restarts, pbits, master)
    key = f"{n},{k},{seed}"
    try:
        cfg = IlsConfig(fe_max=fe_max, restarts=restarts, perturbation_bits=pbits,
                        master_seed=master)
        lon, row, stats, records, ets_value = run_instance(n, k, seed, d, cfg)
        tmp = lon_path.with_suffix(".tmp")
        write_lon(lon, tmp)
        tmp.replace(lon_path)
        payload = {
            "config_hash": h,
            "n": n, "k": k, "seed": seed, "d": d,
            "fe_max": fe_max, "restarts": restarts,
            "perturbation_bits": pbits, "master_seed": master,
            "metrics": row_to_dict(row),
            "ps": stats.ps, "mean_ts": stats.mean_ts, "ets": ets_value,
            "runs": [[r.run_index, int(r.success), r.fe_used, r.best_fitness]
                     for r in records],
        }
        tmp = part_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload))
        tmp.replace(part_path)
        return key, "ok"
    except Exception as exc:  # record and keep sweeping
        return key, f"error: {exc}"


def sweep(plan: ExperimentPlan, echo=print) -> int:
    """Run the whole plan; returns 0, or 2 when any instance failed."""
    out = Path(plan.out)
    (out / "parts").mkdir(parents=True, exist_ok=True)
    (out / "lons").mkdir(parents=True, exist_ok=True)
    fe_max = plan.resolved_fe_max
    triples = plan.triples()
    statuses: dict[str, str] = {}
    todo = []
    for (n, k, seed) in triples:
        part_path, lon_path = _part_paths(out, n, k, seed)
        master = instance_master_seed(plan.ils_seed, n, k, seed)
        h = config_hash(n, k, seed, plan.d, fe_max, plan.restarts,
                        plan.perturbation_bits, master)
        key = f"{n},{k},{seed}"
        if part_path.exists() and lon_path.exists():
            try:
                cached = json.loads(part_path.read_text())
            except json.JSONDecodeError:
                cached = {}
            if cached.get("config_hash") == h:
                statuses[key] = "cached"
                continue
        todo.append((n, k, seed, plan.d, fe_max, plan.restarts,
                     plan.perturbation_bits, plan.ils_seed, str(out)))
    started = time.time()
    if plan.workers > 1 and todo:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            for key, status in pool.map(_compute_and_store, todo):
                statuses[key] = status
                echo(f"[sweep] {key}: {status} ({time.time() - started:.1f}s)")
    else:
        for args in todo:
            key, status = _compute_and_store(args)
            statuses[key] = status
            echo(f"[sweep] {key}: {status} ({time.time() - started:.1f}s)")

    manifest = {
        "tool": "nklon sweep",
        "plan": asdict(plan),
        "fe_max": fe_max,
        "instances": {f"{n},{k},{seed}": statuses.get(f"{n},{k},{seed}", "missing")
                      for (n, k, seed) in triples},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    provenance = (f"nklon sweep; manifest=manifest.json; n={plan.n}; "
                  f"k_list={','.join(map(str, plan.k_list))}; "
                  f"seeds={plan.seed_base}..{plan.seed_base + plan.seeds_per_k - 1}; "
                  f"d={plan.d}; fe_max={fe_max}; restarts={plan.restarts}")
    _write_sweep_csvs(out, triples, provenance)
    failed = [k for k, v in statuses.items() if v.startswith("error")]
    for key in failed:
        echo(f"[sweep] FAILED {key}: {statuses[key]}")
    return 2 if failed else 0


def _write_sweep_csvs(out: Path, triples, provenance: str) -> None:
    metrics_rows = []
    runs_rows = []
    for (n, k, seed) in triples:
        part_path, _ = _part_paths(out, n, k, seed)
        if not part_path.exists():
            continue
        payload = json.loads(part_path.read_text())
        rec = dict(payload["metrics"])
        rec["fe_max"] = payload["fe_max"]
        rec["restarts"] = payload["restarts"]
        rec["ps"] = payload["ps"]
        rec["mean_ts"] = payload["mean_ts"]
        rec["ets"] = payload["ets"]
        metrics_rows.append(rec)
        for run_index, success, fe_used, best in payload["runs"]:
            runs_rows.append([n, k, seed, run_index, success, fe_used, repr(best)])
    with open(out / "metrics.csv", "w", newline="") as fh:
        fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_CSV_FIELDS)
        for rec in metrics_rows:
            w.writerow(["" if rec.get(f) is None else
                        (repr(rec[f]) if isinstance(rec[f], float) else rec[f])
                        for f in SWEEP_CSV_FIELDS])
    with open(out / "runs.csv", "w", newline="") as fh:
        fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "k", "seed", "run_index", "success", "fe_used", "best_fitness"])
        w.writerows(runs_rows)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def read_sweep_metrics(path) -> list[dict]:
    """Rows of the sweep metrics CSV with proper types (None for blanks)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    out = []
    int_fields = {"n", "k", "seed", "nv", "lo_unreachable", "fe_max", "restarts"}
    for rec in csv.DictReader(lines):
        row: dict = {}
        for key, raw in rec.items():
            if key == "undefined":
                row[key] = raw
            elif raw == "" or raw is None:
                row[key] = None
            elif key in int_fields:
                row[key] = int(raw)
            else:
                row[key] = float(raw)
        out.append(row)
    return out


def _mean_sd(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else None
    return float(arr.mean()), sd


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report(metrics_path, runs_path, out_dir, figures: bool = True,
           p_threshold: float | None = None, echo=print) -> None:
    """Aggregate tables, correlations, regression, diagnostics, and figures."""
    rows = read_sweep_metrics(metrics_path)
    runs = read_runs_csv(runs_path)
    m_keys = {(r["n"], r["k"], r["seed"]) for r in rows}
    r_keys = set(runs)
    if m_keys != r_keys:
        only_m = sorted(m_keys - r_keys)
        only_r = sorted(r_keys - m_keys)
        raise ReportInputError(
            f"instance sets differ; only in metrics: {only_m}; only in runs: {only_r}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    provenance = f"nklon report; metrics={metrics_path}; runs={runs_path}"

    # success statistics recomputed from the run log
    for row in rows:
        records = runs[(row["n"], row["k"], row["seed"])]
        succ = [r for r in records if r.success]
        row["ps"] = len(succ) / len(records)
        row["mean_ts"] = (sum(r.fe_used for r in succ) / len(succ)) if succ else None
        stats = SuccessStats(ps=row["ps"], mean_ts=row["mean_ts"], fe_max=row["fe_max"],
                             n_runs=len(records), solved=bool(succ))
        row["ets"] = ets(stats) if stats.solved else None

    _write_table1(out / "table1_by_k.csv", rows, provenance)
    _write_spearman_ets(out / "spearman_ets.csv", rows, provenance)

    solved = [r for r in rows if r["ets"] is not None]
    corr_cols = {name: np.array([_nan(r[name]) for r in solved])
                 for name in ("k",) + METRIC_NAMES + ("ets",)}
    _write_correlations(out / "correlations.csv", corr_cols, provenance)
    _write_ets_scatter(out / "ets_scatter.csv", solved, provenance)

    fits = _regression_reports(out, rows, p_threshold, provenance)
    if figures:
        from . import plots
        plots.plot_correlogram(corr_cols, out / "fig_correlogram.png")
        log_ets = np.log(corr_cols["ets"])
        plots.plot_ets_scatter(
            {name: corr_cols[name] for name in ("k",) + METRIC_NAMES},
            log_ets, out / "fig_ets_scatter.png")
        if fits is not None:
            final_fit, bundle = fits
            plots.plot_residual_qq(bundle, out / "fig_residual_qq.png")
            plots.plot_component_residual(final_fit, bundle,
                                          out / "fig_component_residual.png")
    echo(f"[report] wrote {out}")


def _nan(v) -> float:
    return math.nan if v is None else float(v)


def _write_table1(path, rows, provenance) -> None:
    groups: dict[tuple[int, int], list[dict]] = {}
    for r in rows:
        groups.setdefault((r["n"], r["k"]), []).append(r)
    variables = METRIC_NAMES + ("ets",)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        header = ["n", "k", "instances"]
        for v in variables:
            header += [f"{v}_mean", f"{v}_sd"]
        w.writerow(header)
        for (n, k) in sorted(groups):
            grp = groups[(n, k)]
            line = [n, k, len(grp)]
            for v in variables:
                mean, sd = _mean_sd([r[v] for r in grp if r[v] is not None])
                line += [_fmt(mean), _fmt(sd)]
            w.writerow(line)


def _write_spearman_ets(path, rows, provenance) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "spearman_rho", "p_value", "n_obs"])
        for name in METRIC_NAMES:
            pairs = [(r[name], r["ets"]) for r in rows
                     if r[name] is not None and r["ets"] is not None]
            if len(pairs) >= 3:
                try:
                    rho, p = spearman([a for a, _ in pairs], [b for _, b in pairs])
                    w.writerow([name, repr(rho), repr(p), len(pairs)])
                    continue
                except ValueError:
                    pass
            w.writerow([name, "", "", len(pairs)])


def _write_correlations(path, columns, provenance) -> None:
    rows = correlation_matrix(columns)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["var_a", "var_b", "pearson_r", "pearson_p",
                    "spearman_rho", "spearman_p", "n_obs"])
        for r in rows:
            w.writerow([r["var_a"], r["var_b"],
                        _fmt_nan(r["pearson_r"]), _fmt_nan(r["pearson_p"]),
                        _fmt_nan(r["spearman_rho"]), _fmt_nan(r["spearman_p"]),
                        r["n_obs"]])


def _fmt_nan(v: float) -> str:
    return "" if (isinstance(v, float) and math.isnan(v)) else repr(v)


def _write_ets_scatter(path, solved_rows, provenance) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variable", "x", "log_ets"])
        for name in ("k",) + METRIC_NAMES:
            for r in solved_rows:
                if r[name] is not None:
                    w.writerow([name, _fmt(float(r[name])),
                                repr(math.log(r["ets"]))])


def _regression_reports(out: Path, rows, p_threshold, provenance):
    records = []
    for r in rows:
        rec = {"ets": r["ets"], "k": float(r["k"])}
        for name in METRIC_NAMES:
            rec[name] = r[name]
        records.append(rec)
    try:
        ds = build_dataset(records, "ets", categorical=("k",),
                           log_transform=("ets", "nv"))
        full = ols_fit(ds)
    except (ValueError, np.linalg.LinAlgError) as exc:
        (out / "regression_full.txt").write_text(
            f"regression not fitted: {exc}\n")
        return None
    (out / "regression_full.txt").write_text(
        fit_report(full, "Full model: log(ets) ~ k dummies + log(nv) + metrics"))
    final, trace = backward_eliminate(ds, p_threshold=p_threshold)
    (out / "regression_final.txt").write_text(
        fit_report(final, "Final model after backward elimination"))
    trace_lines = [f"step {i}: {t['action']}; aic={t['aic']:.4f}; "
                   f"units={','.join(t['units'])}" for i, t in enumerate(trace)]
    (out / "elimination_trace.txt").write_text("\n".join(trace_lines) + "\n")

    bundle = diagnostics(final)
    with open(out / "diag_residuals.csv", "w", newline="") as fh:
        fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fitted", "residual", "leverage", "studentized", "flagged"])
        for i in range(len(bundle.fitted)):
            w.writerow([repr(float(bundle.fitted[i])), repr(float(bundle.residuals[i])),
                        repr(float(bundle.leverage[i])),
                        _fmt_nan(float(bundle.studentized[i])),
                        int(bundle.flagged[i])])
    with open(out / "diag_qq.csv", "w", newline="") as fh:
        fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theoretical_quantile", "studentized_residual"])
        for t, o in zip(bundle.qq_theoretical, bundle.qq_observed):
            w.writerow([repr(float(t)), repr(float(o))])
    with open(out / "diag_component_residual.csv", "w", newline="") as fh:
        fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["predictor", "x", "partial_residual"])
        for name, (x, pr) in bundle.partial_residuals.items():
            for xi, pi in zip(x, pr):
                w.writerow([name, repr(float(xi)), repr(float(pi))])
    return final, bundle
