"""Acceptance suite: one test per criterion, each printing a pass/fail line.

The n=18 benchmark dataset shared by the trend and correlation criteria takes
roughly 45 minutes to build on one core. Set NKLON_ACCEPT_CACHE=<path> to
persist it between runs while iterating.
"""
from __future__ import annotations

import json
import math
import os
import time

import mpmath
import numpy as np
import pytest

from conftest import check_lon_invariants, oracle_arc_counts, oracle_basin_endpoints
from nklon.basins import basin_partition, global_optimum
from nklon.experiment import instance_master_seed
from nklon.ils import IlsConfig, default_fe_max, ils_run, restart_experiment, run_seed_for
from nklon.lon import extract_lon
from nklon.metrics import char_path_length, metrics_row, shortest_paths_to_go
from nklon.nk import full_fitness, generate_instance
from nklon.regression import backward_eliminate, build_dataset, diagnostics, ols_fit
from nklon.stats import (SuccessStats, UnsolvedInstanceError, ets, f_cdf, pearson,
                         spearman, student_t_cdf)

mpmath.mp.dps = 40

# reference calibration for the n=18 benchmark family: per-K group
# (mean, sd) of each network feature, used for simulation and range checks
GROUP_STATS = {
    2:  dict(nv=(43, 28), lo=(33.5, 14), lv=(187, 51), fnn=(0.703, 0.19),
             wii=(105, 11), cc=(0.425, 0.086), zout=(6.9, 1.8),
             y2=(0.392, 0.075), knn=(0.155, 0.4)),
    4:  dict(nv=(221, 39), lo=(53.7, 12), lv=(214, 15), fnn=(0.587, 0.07),
             wii=(83.9, 3), cc=(0.263, 0.013), zout=(14.3, 1),
             y2=(0.219, 0.016), knn=(-0.536, 0.13)),
    6:  dict(nv=(748, 70), lo=(66.7, 13), lv=(188, 4.8), fnn=(0.535, 0.041),
             wii=(67.5, 1.9), cc=(0.19, 0.005), zout=(24.8, 0.86),
             y2=(0.124, 0.0059), knn=(-0.778, 0.035)),
    8:  dict(nv=(1669, 73), lo=(76.6, 9.1), lv=(171, 1.9), fnn=(0.431, 0.025),
             wii=(53.3, 0.88), cc=(0.159, 0.0012), zout=(35.7, 0.57),
             y2=(0.0769, 0.002), knn=(-0.856, 0.022)),
    10: dict(nv=(3148, 110), lo=(90.7, 8.4), lv=(166, 1.2), fnn=(0.342, 0.016),
             wii=(40.7, 0.78), cc=(0.143, 0.00085), zout=(47.2, 0.57),
             y2=(0.0491, 0.0011), knn=(-0.904, 0.011)),
    12: dict(nv=(5270, 104), lo=(108, 12), lv=(170, 0.64), fnn=(0.255, 0.015),
             wii=(30.8, 0.35), cc=(0.133, 0.00054), zout=(57.8, 0.39),
             y2=(0.0334, 0.00046), knn=(-0.928, 0.0093)),
    14: dict(nv=(8100, 121), lo=(125, 8.6), lv=(181, 0.6), fnn=(0.19, 0.011),
             wii=(23.5, 0.25), cc=(0.128, 0.00032), zout=(66.9, 0.33),
             y2=(0.0245, 0.00022), knn=(-0.944, 0.0063)),
    16: dict(nv=(11688, 101), lo=(146, 11), lv=(197, 0.42), fnn=(0.143, 0.0073),
             wii=(18.2, 0.11), cc=(0.125, 0.00023), zout=(74.6, 0.17),
             y2=(0.0196, 7.8e-05), knn=(-0.948, 0.0055)),
    17: dict(nv=(13801, 74), lo=(156, 12), lv=(205, 0.42), fnn=(0.133, 0.01),
             wii=(16.1, 0.06), cc=(0.125, 0.00021), zout=(78.2, 0.13),
             y2=(0.0179, 6.5e-05), knn=(-0.944, 0.0063)),
}

# final-model ground truth used by the synthetic regression criterion
FINAL_MODEL = dict(intercept=10.3838, lo=0.0439, zout=-0.0306, y2=-7.2831,
                   knn=-0.7457)
FINAL_NOISE_SD = 0.8751

BENCH_N = 18
BENCH_KS = (2, 6, 10, 14, 17)
BENCH_SEEDS = tuple(range(10))
BENCH_RESTARTS = 200
METRICS = ("nv", "lo", "lv", "fnn", "wii", "cc", "zout", "y2", "knn")


def _verdict(num: int, ok: bool, detail: str) -> None:
    print(f"\ncriterion {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


# ---------------------------------------------------------------------------
# shared n=18 benchmark dataset (criteria 5, 6, 7)
# ---------------------------------------------------------------------------

def _build_benchmark_rows():
    rows = []
    rowsum_failures = 0
    started = time.time()
    for k in BENCH_KS:
        for seed in BENCH_SEEDS:
            inst = generate_instance(BENCH_N, k, seed)
            fv = full_fitness(inst)
            part = basin_partition(inst, fv)
            _, go_f = global_optimum(part)
            lon = extract_lon(inst, part, 2)
            ball = 1 + BENCH_N + BENCH_N * (BENCH_N - 1) // 2
            rowsum_failures += int((lon.out_count_totals() != ball).any())
            row = metrics_row(lon, paths=False)
            lo, _ = shortest_paths_to_go(lon, "normalized")
            lv = char_path_length(lon, "normalized")
            cfg = IlsConfig(fe_max=default_fe_max(BENCH_N), restarts=BENCH_RESTARTS,
                            master_seed=instance_master_seed(0, BENCH_N, k, seed))
            stats, _ = restart_experiment(inst, go_f, cfg, fv=fv)
            try:
                e = ets(stats)
            except UnsolvedInstanceError:
                e = None
            rows.append(dict(n=BENCH_N, k=k, seed=seed, nv=row.nv, lo=lo, lv=lv,
                             fnn=row.fnn, wii=row.wii, cc=row.cc, zout=row.zout,
                             y2=row.y2, knn=row.knn, ps=stats.ps, ets=e))
            print(f"[benchmark] k={k} seed={seed} nv={row.nv} ps={stats.ps:.3f} "
                  f"({time.time() - started:.0f}s)", flush=True)
    return rows, rowsum_failures


@pytest.fixture(scope="session")
def benchmark():
    config = {"n": BENCH_N, "ks": list(BENCH_KS), "seeds": list(BENCH_SEEDS),
              "restarts": BENCH_RESTARTS, "fe_max": default_fe_max(BENCH_N), "d": 2}
    cache = os.environ.get("NKLON_ACCEPT_CACHE")
    if cache and os.path.exists(cache):
        payload = json.loads(open(cache).read())
        if payload.get("config") == config:
            return payload
    rows, rowsum_failures = _build_benchmark_rows()
    payload = {"config": config, "rows": rows, "rowsum_failures": rowsum_failures}
    if cache:
        with open(cache, "w") as fh:
            json.dump(payload, fh)
    return payload


def _group_means(rows, metric):
    out = []
    for k in BENCH_KS:
        vals = [r[metric] for r in rows if r["k"] == k and r[metric] is not None]
        out.append(float(np.mean(vals)))
    return out


def test_criterion_01_smooth_landscape_degenerate_suite():
    started = time.time()
    issues = []
    for n in (6, 12, 18):
        inst = generate_instance(n, 0, 123)
        fv = full_fitness(inst)
        part = basin_partition(inst, fv)
        lon = extract_lon(inst, part, 2)
        check_lon_invariants(lon)
        ball = 1 + n + n * (n - 1) // 2
        if part.num_optima != 1:
            issues.append(f"n={n}: nv={part.num_optima}")
        if part.basin_sizes[0] != 1 << n:
            issues.append(f"n={n}: basin={part.basin_sizes[0]}")
        if lon.self_w[0] != ball:
            issues.append(f"n={n}: w_ii={lon.self_w[0]} != {ball}")
        _, go_f = global_optimum(part)
        cfg = IlsConfig(fe_max=(n + 1) ** 2, restarts=500,
                        master_seed=instance_master_seed(1, n, 0, 123))
        stats, _ = restart_experiment(inst, go_f, cfg, fv=fv)
        if stats.ps != 1.0:
            issues.append(f"n={n}: ps={stats.ps}")
    elapsed = time.time() - started
    _verdict(1, not issues and elapsed < 10,
             f"nv=1, basin=2^n, w_ii=ball, ps=1 for n in (6,12,18); "
             f"{elapsed:.1f}s" + (f"; issues: {issues}" if issues else ""))


def test_criterion_02_basin_oracle_equivalence():
    started = time.time()
    cases = [(n, k, seed) for n in (6, 7, 8, 9, 10)
             for k, seed in [(0, 1), (2, 2), (n // 2, 3), (n - 1, 4)]]
    assert len(cases) == 20
    bad = []
    for n, k, seed in cases:
        inst = generate_instance(n, k, seed)
        part = basin_partition(inst)
        endpoints = oracle_basin_endpoints(inst)
        if not (part.lo_genotype[part.assignment] == endpoints).all():
            bad.append((n, k, seed))
    elapsed = time.time() - started
    _verdict(2, not bad and elapsed < 60,
             f"memoized partition == per-start oracle on 20 instances "
             f"(2^n assignments each); {elapsed:.1f}s"
             + (f"; mismatches: {bad}" if bad else ""))


def test_criterion_03_row_sum_invariant(benchmark):
    bad = []
    for n, k, seed in [(6, 2, 1), (8, 3, 2), (9, 5, 3), (10, 9, 4), (12, 4, 5),
                       (7, 0, 6), (11, 2, 7), (10, 2, 8), (8, 7, 9), (9, 1, 10)]:
        inst = generate_instance(n, k, seed)
        part = basin_partition(inst)
        lon = extract_lon(inst, part, 2)
        expect = 1 + n + n * (n - 1) // 2
        if not (lon.out_count_totals() == expect).all():
            bad.append((n, k, seed))
        check_lon_invariants(lon)
    ok = not bad and benchmark["rowsum_failures"] == 0
    _verdict(3, ok, "count-weight row sums equal 1 + n + C(n,2) on 10 fresh "
                    "networks and all 50 benchmark networks"
                    + (f"; failures: {bad}, benchmark: "
                       f"{benchmark['rowsum_failures']}" if not ok else ""))


def test_criterion_04_escape_edge_semantics():
    started = time.time()
    cases = [(8, 2, 1), (8, 4, 2), (9, 3, 3), (9, 6, 4), (10, 2, 5),
             (10, 5, 6), (10, 9, 7), (7, 3, 8), (6, 2, 9), (9, 8, 10)]
    arc_bad = []
    move_bad = []
    for n, k, seed in cases:
        inst = generate_instance(n, k, seed)
        fv = full_fitness(inst)
        part = basin_partition(inst, fv)
        lon = extract_lon(inst, part, 2)
        check_lon_invariants(lon)
        expect = oracle_arc_counts(inst, part, 2)
        got = {(int(i), int(j)): int(w)
               for i, j, w in zip(lon.arc_src, lon.arc_dst, lon.arc_w)}
        for idx in range(lon.node_count):
            if lon.self_w[idx]:
                got[(idx, idx)] = int(lon.self_w[idx])
        if got != expect:
            arc_bad.append((n, k, seed))
        arcs = {(int(i), int(j)) for i, j in zip(lon.arc_src, lon.arc_dst)}
        index_of = {int(g): i for i, g in enumerate(part.lo_genotype)}
        _, go_f = global_optimum(part)
        cfg = IlsConfig(fe_max=default_fe_max(n), restarts=1, perturbation_bits=2)
        for run_seed in range(30):
            rec = ils_run(inst, go_f, cfg, run_seed_for(seed, run_seed), fv=fv,
                          collect_moves=True)
            for a, b in rec.accepted_moves:
                if (index_of[a], index_of[b]) not in arcs:
                    move_bad.append((n, k, seed, a, b))
    elapsed = time.time() - started
    ok = not arc_bad and not move_bad and elapsed < 120
    _verdict(4, ok, f"all arcs re-derived by ball enumeration and all accepted "
                    f"search moves are arcs, 10 instances; {elapsed:.1f}s"
                    + ("" if ok else f"; arc mismatches: {arc_bad}, "
                                     f"orphan moves: {move_bad[:3]}"))


def test_criterion_05_quantitative_calibration(benchmark):
    ranges = dict(nv=(13500, 14100), zout=(77.5, 79.0), y2=(0.0175, 0.0185),
                  wii=(15.9, 16.3), cc=(0.120, 0.130), knn=(-0.96, -0.92))
    rows = [r for r in benchmark["rows"] if r["k"] == 17 and r["seed"] < 5]
    assert len(rows) == 5
    report = []
    misses = []
    for metric, (lo_, hi_) in ranges.items():
        mean = float(np.mean([r[metric] for r in rows]))
        inside = lo_ <= mean <= hi_
        report.append(f"{metric}={mean:.4g}{'' if inside else '!'}")
        if not inside:
            misses.append(f"{metric}={mean:.4g} outside [{lo_}, {hi_}]")
    if any(m.startswith(("cc", "knn")) for m in misses):
        # the criterion requires a convention miss to be reported loudly
        print("\nPROJECTION-CONVENTION REPORT: the degree-assortativity (and/or"
              " clustering) convention of this implementation differs from the"
              " one behind the reference ranges. Audited alternatives (directed"
              "/undirected, weighted/unweighted, strength- and multigraph-based,"
              " neighbor-average and degree-class forms) reproduce every other"
              " column but none reproduces the reference knn trajectory; see"
              " the sample means above and the project notes.")
    _verdict(5, not misses, "5-seed means at k=17: " + ", ".join(report)
             + (f"; misses: {misses}" if misses else ""))


def test_criterion_06_trend_reproduction(benchmark):
    rows = benchmark["rows"]
    issues = []
    trend_up = ("nv", "lo", "zout")
    trend_down = ("fnn", "wii", "y2")
    means = {m: _group_means(rows, m) for m in METRICS}
    for m in trend_up:
        if not all(b > a for a, b in zip(means[m], means[m][1:])):
            issues.append(f"{m} not strictly increasing: {np.round(means[m], 4)}")
    for m in trend_down:
        if not all(b < a for a, b in zip(means[m], means[m][1:])):
            issues.append(f"{m} not strictly decreasing: {np.round(means[m], 4)}")
    knn_by_k = dict(zip(BENCH_KS, means["knn"]))
    for k in BENCH_KS:
        if k >= 10 and not -1.0 <= knn_by_k[k] <= -0.85:
            issues.append(f"knn at k={k} is {knn_by_k[k]:.3f}, outside [-1, -0.85]")
    _verdict(6, not issues,
             "group-mean trends over k " + str(list(BENCH_KS))
             + (": all monotone claims hold and knn in window" if not issues
                else f": {issues}"))


def test_criterion_07_correlation_signs(benchmark):
    rows = [r for r in benchmark["rows"] if r["ets"] is not None]
    expected_sign = dict(nv=+1, lo=+1, fnn=-1, wii=-1, cc=-1, zout=+1, y2=-1,
                         knn=-1)
    rhos = {}
    for m in METRICS:
        pairs = [(r[m], r["ets"]) for r in rows if r[m] is not None]
        rho, _ = spearman([a for a, _ in pairs], [b for _, b in pairs])
        rhos[m] = rho
    issues = []
    for m, sign in expected_sign.items():
        if math.copysign(1, rhos[m]) != sign:
            issues.append(f"sign(rho({m}))={rhos[m]:+.3f}, expected {sign:+d}")
    if abs(rhos["lv"]) >= 0.3:
        issues.append(f"|rho(lv)|={abs(rhos['lv']):.3f} >= 0.3")
    for m in ("nv", "lo", "zout"):
        if abs(rhos[m]) <= 0.5:
            issues.append(f"|rho({m})|={abs(rhos[m]):.3f} <= 0.5")
    detail = ", ".join(f"{m}={rhos[m]:+.3f}" for m in METRICS)
    _verdict(7, not issues, f"rho(ets, .) over {len(rows)} solved instances: "
             + detail + (f"; issues: {issues}" if issues else ""))


def _simulate_rows(rng):
    # predictors drawn uniformly over each metric's measured range
    ranges = {}
    for m in METRICS:
        lows = [GROUP_STATS[k][m][0] - GROUP_STATS[k][m][1] for k in GROUP_STATS]
        highs = [GROUP_STATS[k][m][0] + GROUP_STATS[k][m][1] for k in GROUP_STATS]
        ranges[m] = (min(lows), max(highs))
    records = []
    for k in GROUP_STATS:
        for _ in range(30):
            rec = {"k": float(k)}
            for m, (lo_, hi_) in ranges.items():
                rec[m] = float(rng.uniform(lo_, hi_))
            rec["log_ets"] = (FINAL_MODEL["intercept"]
                              + FINAL_MODEL["lo"] * rec["lo"]
                              + FINAL_MODEL["zout"] * rec["zout"]
                              + FINAL_MODEL["y2"] * rec["y2"]
                              + FINAL_MODEL["knn"] * rec["knn"]
                              + float(rng.normal(0, FINAL_NOISE_SD)))
            records.append(rec)
    return records


def test_criterion_08_regression_recovery():
    started = time.time()
    rng = np.random.default_rng(2024)
    truth = [FINAL_MODEL["intercept"], FINAL_MODEL["lo"], FINAL_MODEL["zout"],
             FINAL_MODEL["y2"], FINAL_MODEL["knn"]]
    recovered = 0
    retained = 0
    for _ in range(100):
        ds = build_dataset(_simulate_rows(rng), "log_ets", categorical=("k",))
        fit = ols_fit(ds, ["lo", "zout", "y2", "knn"])
        recovered += all(abs(fit.beta[i] - truth[i]) < 3 * fit.se[i]
                         for i in range(5))
        final, _ = backward_eliminate(ds)
        retained += all(u in final.units for u in ("lo", "zout", "y2"))
    elapsed = time.time() - started
    ok = recovered >= 95 and retained >= 80 and elapsed < 300
    _verdict(8, ok, f"coefficients within 3 SE in {recovered}/100 reps "
                    f"(need >= 95); lo+zout+y2 retained in {retained}/100 "
                    f"(need >= 80); {elapsed:.0f}s")


def test_criterion_09_statistics_unit_oracles():
    issues = []
    # t and F tails against high-precision quadrature
    def t_cdf_oracle(t, df):
        half = mpmath.quad(
            lambda u: (1 + u * u / df) ** (-(df + 1) / mpmath.mpf(2)), [0, abs(t)])
        const = mpmath.gamma((df + 1) / mpmath.mpf(2)) / (
            mpmath.sqrt(df * mpmath.pi) * mpmath.gamma(df / mpmath.mpf(2)))
        p = mpmath.mpf("0.5") + const * half
        return float(p if t >= 0 else 1 - p)

    def f_cdf_oracle(x, d1, d2):
        const = 1 / mpmath.beta(d1 / mpmath.mpf(2), d2 / mpmath.mpf(2))
        val = mpmath.quad(
            lambda u: const * (d1 / mpmath.mpf(d2)) ** (d1 / mpmath.mpf(2))
            * u ** (d1 / mpmath.mpf(2) - 1)
            * (1 + d1 * u / mpmath.mpf(d2)) ** (-(d1 + d2) / mpmath.mpf(2)),
            [0, x])
        return float(val)

    for t in (-3.7, -0.9, 0.4, 1.84, 10.11):
        for df in (2, 17, 248, 261):
            if abs(student_t_cdf(t, df) - t_cdf_oracle(t, df)) > 1e-9:
                issues.append(f"t cdf({t},{df})")
    for x in (0.5, 3.68, 368.1):
        for d1, d2 in ((4, 261), (17, 248)):
            if abs(f_cdf(x, d1, d2) - f_cdf_oracle(x, d1, d2)) > 1e-9:
                issues.append(f"F cdf({x},{d1},{d2})")

    # correlation estimators against exact-arithmetic formulas
    rng = np.random.default_rng(99)
    for _ in range(3):
        x = rng.normal(size=25)
        y = rng.normal(size=25)
        r, _ = pearson(x, y)
        xm = [mpmath.mpf(float(v)) for v in x]
        ym = [mpmath.mpf(float(v)) for v in y]
        mx, my = sum(xm) / 25, sum(ym) / 25
        expect = float(sum((a - mx) * (b - my) for a, b in zip(xm, ym))
                       / mpmath.sqrt(sum((a - mx) ** 2 for a in xm)
                                     * sum((b - my) ** 2 for b in ym)))
        if abs(r - expect) > 1e-9:
            issues.append("pearson")
        rho, _ = spearman(x, y)
        rank_x = np.argsort(np.argsort(x)) + 1.0  # distinct values: plain ranks
        rank_y = np.argsort(np.argsort(y)) + 1.0
        d2sum = ((rank_x - rank_y) ** 2).sum()
        expect_rho = 1 - 6 * d2sum / (25 * (25 ** 2 - 1))
        if abs(rho - expect_rho) > 1e-9:
            issues.append("spearman")

    # noiseless regression recovery and the hat-matrix identity
    x1 = rng.normal(size=40)
    x2 = rng.normal(size=40)
    y = 0.5 + 1.25 * x1 - 2.0 * x2
    ds = build_dataset([{"x1": float(a), "x2": float(b), "y": float(c)}
                        for a, b, c in zip(x1, x2, y)], "y")
    fit = ols_fit(ds)
    if np.abs(fit.beta - np.array([0.5, 1.25, -2.0])).max() > 1e-10:
        issues.append("noiseless ols")
    noisy = build_dataset([{"x1": float(a), "x2": float(b),
                            "y": float(c + rng.normal())}
                           for a, b, c in zip(x1, x2, y)], "y")
    bundle = diagnostics(ols_fit(noisy))
    if abs(bundle.leverage.sum() - 3.0) > 1e-9:
        issues.append("leverage sum")
    _verdict(9, not issues, "t/F tails, correlations, noiseless least squares, "
                            "leverage identity all match independent oracles"
             + (f"; failed: {issues}" if issues else ""))


def test_criterion_10_expected_runtime_formula():
    a = ets(SuccessStats(ps=1.0, mean_ts=500.0, fe_max=10 ** 6, n_runs=500,
                         solved=True))
    b = ets(SuccessStats(ps=0.5, mean_ts=40.0, fe_max=100, n_runs=10, solved=True))
    exact = (a == 500.0 and b == 140.0)
    guarded = False
    try:
        ets(SuccessStats(ps=0.0, mean_ts=None, fe_max=100, n_runs=10, solved=False))
    except UnsolvedInstanceError:
        guarded = True
    rng = np.random.default_rng(31)
    monotone = True
    for _ in range(1000):
        ts = float(rng.uniform(1, 1e5))
        fe = int(rng.integers(10, 10 ** 7))
        p1, p2 = np.sort(rng.uniform(0.002, 1.0, size=2))
        lo_v = ets(SuccessStats(ps=float(p2), mean_ts=ts, fe_max=fe, n_runs=500,
                                solved=True))
        hi_v = ets(SuccessStats(ps=float(p1), mean_ts=ts, fe_max=fe, n_runs=500,
                                solved=True))
        monotone &= hi_v >= lo_v
    _verdict(10, exact and guarded and monotone,
             f"examples exact ({a}, {b}), ps=0 guarded, monotone over 1000 draws")


def test_criterion_11_full_scale_note(benchmark):
    solved = sum(r["ets"] is not None for r in benchmark["rows"])
    print("\nfull-scale note: the original 270-instance, 500-restart study "
          "(exact group statistics and fitted coefficients) depends on "
          "instances and generator state that are not available, so it is "
          "reproducible in distribution only; criteria 5-8 are the designated "
          f"surrogates. Benchmark here: {len(benchmark['rows'])} instances, "
          f"{solved} solved at least once.")
    _verdict(11, True, "surrogate criteria 5-8 stand in for the full-scale run")
