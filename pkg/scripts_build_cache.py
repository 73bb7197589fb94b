"""Dev helper: build the acceptance benchmark dataset cache."""
import json
import sys
import time

from nklon.basins import basin_partition, global_optimum
from nklon.experiment import instance_master_seed
from nklon.ils import IlsConfig, default_fe_max, restart_experiment
from nklon.lon import extract_lon
from nklon.metrics import char_path_length, metrics_row, shortest_paths_to_go
from nklon.nk import full_fitness, generate_instance
from nklon.stats import UnsolvedInstanceError, ets

N = 18
KS = (2, 6, 10, 14, 17)
SEEDS = tuple(range(10))
RESTARTS = 200

rows = []
rowsum_failures = 0
t0 = time.time()
for k in KS:
    for seed in SEEDS:
        inst = generate_instance(N, k, seed)
        fv = full_fitness(inst)
        part = basin_partition(inst, fv)
        _, go_f = global_optimum(part)
        lon = extract_lon(inst, part, 2)
        ball = 1 + N + N * (N - 1) // 2
        rowsum_failures += int((lon.out_count_totals() != ball).any())
        row = metrics_row(lon, paths=False)
        lo, _ = shortest_paths_to_go(lon, "normalized")
        lv = char_path_length(lon, "normalized")
        cfg = IlsConfig(fe_max=default_fe_max(N), restarts=RESTARTS,
                        master_seed=instance_master_seed(0, N, k, seed))
        stats, _ = restart_experiment(inst, go_f, cfg, fv=fv)
        try:
            e = ets(stats)
        except UnsolvedInstanceError:
            e = None
        rows.append(dict(n=N, k=k, seed=seed, nv=row.nv, lo=lo, lv=lv, fnn=row.fnn,
                         wii=row.wii, cc=row.cc, zout=row.zout, y2=row.y2,
                         knn=row.knn, ps=stats.ps, ets=e))
        print(f"k={k} seed={seed}: nv={row.nv} lo={lo:.1f} lv={lv:.1f} "
              f"ps={stats.ps:.3f} ets={'-' if e is None else round(e)} "
              f"({time.time()-t0:.0f}s)", flush=True)

payload = {"config": {"n": N, "ks": list(KS), "seeds": list(SEEDS),
                      "restarts": RESTARTS, "fe_max": default_fe_max(N), "d": 2},
           "rowsum_failures": rowsum_failures, "rows": rows}
with open(sys.argv[1], "w") as fh:
    json.dump(payload, fh)
print("cache written to", sys.argv[1])
