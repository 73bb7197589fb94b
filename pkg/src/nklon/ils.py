"""Iterated local search with k-bit perturbation and improve-only acceptance.

Each run starts from a uniform random genotype, climbs to an optimum, then
repeatedly perturbs the incumbent (flipping `perturbation_bits` distinct
random bits), climbs again, and accepts only strictly fitter optima. A run
succeeds the moment the incumbent's fitness equals the known global-optimum
fitness; it fails when the evaluation budget is exhausted. Every fitness
lookup counts one evaluation; the evaluation that reaches the budget
completes, then the run stops.

RNG protocol per run (PCG64 seeded with `run_seed`): one `integers(2**n)`
draw for the start, then `perturbation_bits` sequential `integers(n - j)`
partial Fisher-Yates draws per perturbation. Run seeds derive from
(master_seed, run_index) through numpy's SeedSequence.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .nk import NkInstance, fitness, full_fitness
from .stats import SuccessStats


@dataclass(frozen=True)
class IlsConfig:
    fe_max: int
    restarts: int = 500
    perturbation_bits: int = 2
    master_seed: int = 0

    def __post_init__(self):
        if self.fe_max < 1:
            raise ValueError("fe_max must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.perturbation_bits < 1:
            raise ValueError("perturbation_bits must be >= 1")


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    success: bool
    fe_used: int
    best_fitness: float
    accepted_moves: tuple[tuple[int, int], ...] | None = None


def default_fe_max(n: int) -> int:
    """One fifth of the search space, the benchmark budget convention."""
    return (1 << n) // 5


def run_seed_for(master_seed: int, run_index: int) -> int:
    ss = np.random.SeedSequence([master_seed, run_index])
    return int(ss.generate_state(1, np.uint64)[0])


def _draw_distinct_bits(rng: np.random.Generator, n: int, m: int) -> list[int]:
    """m distinct flip positions via partial Fisher-Yates (m draws)."""
    idx = list(range(n))
    for j in range(m):
        t = j + int(rng.integers(n - j))
        idx[j], idx[t] = idx[t], idx[j]
    return idx[:m]


def ils_run(inst: NkInstance, go_fitness: float, cfg: IlsConfig, run_seed: int,
            fv=None, eval_fn=None, collect_moves: bool = False) -> RunRecord:
    """One independent ILS run; see the module docstring for the protocol.

    `fv` may carry the precomputed full fitness table (array or list) to
    avoid per-call evaluation; `eval_fn` overrides the fitness lookup
    entirely (used by instrumented tests). Exactly one evaluation source is
    consulted per counted evaluation.
    """
    n = inst.n
    if not 1 <= cfg.perturbation_bits <= n:
        raise ValueError("perturbation_bits must be in [1, n]")
    if eval_fn is not None:
        value = eval_fn
    elif fv is not None:
        fvl = fv.tolist() if isinstance(fv, np.ndarray) else fv
        value = fvl.__getitem__
    else:
        value = lambda g: fitness(inst, g)
    fe_max = cfg.fe_max
    rng = np.random.default_rng(run_seed)
    fe = 0

    def descend(start: int):
        """Best-improvement descent under the budget.

        Returns (lo, f, completed); completed is False when the budget ran
        out before the final confirming neighborhood scan finished. Every
        counted evaluation is an actual `value` call, including the ones
        spent on a scan that cannot finish.
        """
        nonlocal fe
        s = start
        f = value(s)
        fe += 1
        if fe >= fe_max:
            return s, f, False
        while True:
            if fe + n > fe_max:
                # the scan cannot finish; the evaluations in flight complete
                for b in range(fe_max - fe):
                    value(s ^ (1 << b))
                fe = fe_max
                return s, f, False
            best_f = -1.0
            best_s = s
            for b in range(n):
                nb = s ^ (1 << b)
                nf = value(nb)
                if nf > best_f:
                    best_f = nf
                    best_s = nb
            fe += n
            if best_f > f:
                s, f = best_s, best_f
                if fe >= fe_max:
                    return s, f, False  # moved, but no budget left to confirm
            else:
                return s, f, True

    moves: list[tuple[int, int]] = []
    start = int(rng.integers(1 << n))
    s_star, f_star, completed = descend(start)
    success = completed and f_star == go_fitness
    while not success and fe < fe_max:
        pert = s_star
        for b in _draw_distinct_bits(rng, n, cfg.perturbation_bits):
            pert ^= 1 << b
        cand, f_cand, completed = descend(pert)
        if not completed:
            break
        if f_cand > f_star:
            if collect_moves:
                moves.append((s_star, cand))
            s_star, f_star = cand, f_cand
            success = f_star == go_fitness
    return RunRecord(run_index=0, success=success, fe_used=fe, best_fitness=f_star,
                     accepted_moves=tuple(moves) if collect_moves else None)


def restart_experiment(inst: NkInstance, go_fitness: float, cfg: IlsConfig,
                       fv=None, collect_moves: bool = False,
                       ) -> tuple[SuccessStats, list[RunRecord]]:
    """cfg.restarts independent runs; per-run seeds from (master_seed, index)."""
    if fv is None:
        fv = full_fitness(inst)
    fvl = fv.tolist() if isinstance(fv, np.ndarray) else fv
    records = []
    for idx in range(cfg.restarts):
        rec = ils_run(inst, go_fitness, cfg, run_seed_for(cfg.master_seed, idx),
                      fv=fvl, collect_moves=collect_moves)
        records.append(RunRecord(run_index=idx, success=rec.success, fe_used=rec.fe_used,
                                 best_fitness=rec.best_fitness,
                                 accepted_moves=rec.accepted_moves))
    successes = [r for r in records if r.success]
    ps = len(successes) / cfg.restarts
    mean_ts = (sum(r.fe_used for r in successes) / len(successes)) if successes else None
    stats = SuccessStats(ps=ps, mean_ts=mean_ts, fe_max=cfg.fe_max,
                         n_runs=cfg.restarts, solved=bool(successes))
    return stats, records


RUNS_CSV_FIELDS = ("n", "k", "seed", "run_index", "success", "fe_used", "best_fitness")


def write_runs_csv(per_instance: list[tuple[tuple[int, int, int], list[RunRecord]]],
                   path, provenance: str | None = None) -> None:
    """Run log rows keyed by instance triple (n, k, seed)."""
    with open(path, "w", newline="") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUNS_CSV_FIELDS)
        for (n, k, seed), records in per_instance:
            for r in records:
                w.writerow([n, k, seed, r.run_index, int(r.success), r.fe_used,
                            repr(r.best_fitness)])


def read_runs_csv(path) -> dict[tuple[int, int, int], list[RunRecord]]:
    out: dict[tuple[int, int, int], list[RunRecord]] = {}
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for rec in csv.DictReader(lines):
        key = (int(rec["n"]), int(rec["k"]), int(rec["seed"]))
        out.setdefault(key, []).append(RunRecord(
            run_index=int(rec["run_index"]), success=bool(int(rec["success"])),
            fe_used=int(rec["fe_used"]), best_fitness=float(rec["best_fitness"])))
    return out
