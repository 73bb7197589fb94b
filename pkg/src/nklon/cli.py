"""Command-line interface.

Subcommands: generate, partition, extract, metrics, ils, sweep, report.
Exit codes: 0 success, 1 usage error, 2 partial sweep failure, 3 I/O or
file-format error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .basins import basin_partition, global_optimum, write_partition
from .experiment import (ExperimentPlan, PlanError, ReportInputError,
                         plan_from_file, report, sweep)
from .ils import IlsConfig, default_fe_max, restart_experiment, write_runs_csv
from .lon import LonFormatError, extract_lon, read_lon, to_dot, write_lon
from .metrics import metrics_row, write_metrics_csv
from .nk import (InstanceFormatError, ParameterError, full_fitness,
                 generate_instance, read_instance, write_instance)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage to 1
        raise UsageError(message)


def _add_instance_args(p):
    p.add_argument("--n", type=int, help="locus count")
    p.add_argument("--k", type=int, help="epistasis degree")
    p.add_argument("--seed", type=int, help="instance seed")
    p.add_argument("--instance", help="instance file (alternative to --n/--k/--seed)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nklon", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write an instance file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("partition", help="exhaustive basin partition tables")
    _add_instance_args(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("extract", help="extract the local optima network")
    _add_instance_args(p)
    p.add_argument("--d", type=int, default=2, help="escape distance threshold")
    p.add_argument("--out", required=True, help="LON file")
    p.add_argument("--dot", help="also write a DOT rendering here")

    p = sub.add_parser("metrics", help="network metrics of LON files")
    p.add_argument("--lon", nargs="+", required=True, help="LON file(s)")
    p.add_argument("--out", required=True, help="metrics CSV")

    p = sub.add_parser("ils", help="restart experiment on one instance")
    _add_instance_args(p)
    p.add_argument("--fe-max", type=int, help="evaluation budget (default 2^n/5)")
    p.add_argument("--restarts", type=int, default=500)
    p.add_argument("--perturbation-bits", type=int, default=2)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="run log CSV")

    p = sub.add_parser("sweep", help="run a full experiment plan")
    p.add_argument("--plan", help="plan file (key = value lines)")
    p.add_argument("--n", type=int)
    p.add_argument("--k-list", help="comma-separated k values")
    p.add_argument("--seeds", type=int, help="seeds per k")
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--fe-max", type=int)
    p.add_argument("--restarts", type=int, default=500)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("report", help="aggregate tables, analyses, and figures")
    p.add_argument("--metrics", required=True, help="metrics CSV from sweep")
    p.add_argument("--runs", required=True, help="run log CSV from sweep")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--p-threshold", type=float,
                   help="optional significance post-pass for elimination")
    return parser


def _load_instance(args):
    if args.instance:
        return read_instance(args.instance)
    if args.n is None or args.k is None or args.seed is None:
        raise UsageError("provide --instance or all of --n/--k/--seed")
    return generate_instance(args.n, args.k, args.seed)


def _cmd_generate(args) -> int:
    inst = generate_instance(args.n, args.k, args.seed)
    write_instance(inst, args.out)
    return EXIT_OK


def _cmd_partition(args) -> int:
    inst = _load_instance(args)
    part = basin_partition(inst)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_partition(part, out / "assignment.csv", out / "optima.csv")
    print(f"[partition] {part.num_optima} optima over {1 << inst.n} genotypes")
    return EXIT_OK


def _cmd_extract(args) -> int:
    inst = _load_instance(args)
    part = basin_partition(inst)
    lon = extract_lon(inst, part, args.d)
    write_lon(lon, args.out)
    if args.dot:
        Path(args.dot).write_text(to_dot(lon))
    print(f"[extract] {lon.node_count} nodes, {len(lon.arc_src)} arcs -> {args.out}")
    return EXIT_OK


def _cmd_metrics(args) -> int:
    rows = [metrics_row(read_lon(path)) for path in args.lon]
    write_metrics_csv(rows, args.out, provenance=f"nklon metrics; lons={len(rows)}")
    return EXIT_OK


def _cmd_ils(args) -> int:
    inst = _load_instance(args)
    fv = full_fitness(inst)
    part = basin_partition(inst, fv)
    _, go_f = global_optimum(part)
    fe_max = args.fe_max if args.fe_max is not None else default_fe_max(inst.n)
    cfg = IlsConfig(fe_max=fe_max, restarts=args.restarts,
                    perturbation_bits=args.perturbation_bits,
                    master_seed=args.master_seed)
    stats, records = restart_experiment(inst, go_f, cfg, fv=fv)
    key = (inst.n, inst.k, inst.seed)
    write_runs_csv([(key, records)], args.out,
                   provenance=f"nklon ils; manifest={args.out}.manifest.json")
    manifest = {"tool": "nklon ils", "n": inst.n, "k": inst.k, "seed": inst.seed,
                "fe_max": fe_max, "restarts": args.restarts,
                "perturbation_bits": args.perturbation_bits,
                "master_seed": args.master_seed,
                "ps": stats.ps, "mean_ts": stats.mean_ts}
    Path(f"{args.out}.manifest.json").write_text(json.dumps(manifest, indent=2,
                                                            sort_keys=True))
    print(f"[ils] ps={stats.ps:.3f} over {args.restarts} restarts (fe_max={fe_max})")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if args.plan:
        plan = plan_from_file(args.plan)
        if args.out:
            plan.out = args.out
        if args.workers != 1:
            plan.workers = args.workers
    else:
        if args.n is None or not args.k_list or args.seeds is None or not args.out:
            raise UsageError("sweep needs --plan, or --n/--k-list/--seeds/--out")
        plan = ExperimentPlan(
            n=args.n,
            k_list=[int(x) for x in args.k_list.replace(",", " ").split()],
            seeds_per_k=args.seeds, seed_base=args.seed_base, d=args.d,
            fe_max=args.fe_max, restarts=args.restarts,
            out=args.out, workers=args.workers)
    return sweep(plan)


def _cmd_report(args) -> int:
    report(args.metrics, args.runs, args.out, figures=not args.no_figures,
           p_threshold=args.p_threshold)
    return EXIT_OK


_DISPATCH = {
    "generate": _cmd_generate,
    "partition": _cmd_partition,
    "extract": _cmd_extract,
    "metrics": _cmd_metrics,
    "ils": _cmd_ils,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[args.cmd](args)
    except (UsageError, PlanError, ParameterError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceFormatError, LonFormatError, ReportInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
