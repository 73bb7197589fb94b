"""Best-improvement hill climbing and the exhaustive basin partition.

Every genotype descends to a unique local optimum under the deterministic
best-improvement climber (ties at the best neighbor go to the lowest flip
index), which partitions the search space into basins of attraction.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .nk import NkInstance, fitness, full_fitness, to_bits


class NeutralityError(RuntimeError):
    """Two distinct local optima share exactly the same fitness."""


@dataclass(frozen=True)
class BasinPartition:
    """Exhaustive basin structure of one instance.

    lo_genotype/lo_fitness are sorted by descending fitness, so index 0 is
    the global optimum. assignment maps every genotype index to the index of
    its optimum in that ordering.
    """

    n: int
    lo_genotype: np.ndarray   # (nv,) int64
    lo_fitness: np.ndarray    # (nv,) float64, strictly decreasing
    assignment: np.ndarray    # (2**n,) int32
    basin_sizes: np.ndarray   # (nv,) int64

    @property
    def num_optima(self) -> int:
        return len(self.lo_genotype)


def hill_climb(inst: NkInstance, s: int, fv=None) -> tuple[int, int]:
    """Climb to the local optimum above s; returns (optimum, evaluations).

    Each iteration scans the full neighborhood (n evaluations) and moves to
    the strictly best neighbor, lowest flip index first on ties; the start
    costs one extra evaluation.
    """
    n = inst.n
    if fv is None:
        value = lambda g: fitness(inst, g)
    else:
        fvl = fv.tolist() if isinstance(fv, np.ndarray) else fv
        value = fvl.__getitem__
    f = value(s)
    evals = 1
    while True:
        best_f = -1.0
        best_s = s
        for b in range(n):
            nb = s ^ (1 << b)
            nf = value(nb)
            if nf > best_f:
                best_f = nf
                best_s = nb
        evals += n
        if best_f > f:
            s, f = best_s, best_f
        else:
            return s, evals


def _best_neighbor_map(fv: np.ndarray, n: int) -> np.ndarray:
    """One hill-climbing step for every genotype at once (self where optimal)."""
    g = np.arange(1 << n, dtype=np.int64)
    best_f = np.full(1 << n, -1.0)
    best_nb = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        nb = g ^ (1 << b)
        nf = fv[nb]
        upd = nf > best_f
        best_f[upd] = nf[upd]
        best_nb[upd] = nb[upd]
    return np.where(best_f > fv, best_nb, g)


def basin_partition(inst: NkInstance, fv: np.ndarray | None = None) -> BasinPartition:
    """Assign all 2**n genotypes to their hill-climbing endpoint.

    Uses pointer jumping on the one-step map, which memoizes shared descent
    suffixes without changing any endpoint (the step map is a pure function).
    """
    if fv is None:
        fv = full_fitness(inst)
    h = _best_neighbor_map(fv, inst.n)
    while True:
        h2 = h[h]
        if np.array_equal(h2, h):
            break
        h = h2
    los = np.unique(h)  # ascending genotype order
    lof = fv[los]
    order = np.argsort(-lof, kind="stable")
    sorted_f = lof[order]
    dup = np.nonzero(np.diff(sorted_f) == 0)[0]
    if dup.size:
        a = int(los[order[dup[0]]])
        b = int(los[order[dup[0] + 1]])
        raise NeutralityError(
            f"local optima {a} ({to_bits(a, inst.n)}) and {b} ({to_bits(b, inst.n)}) "
            f"share fitness {sorted_f[dup[0]]!r}")
    rank = np.empty(len(los), dtype=np.int32)
    rank[order] = np.arange(len(los), dtype=np.int32)
    assignment = rank[np.searchsorted(los, h)]
    sizes = np.bincount(assignment, minlength=len(los)).astype(np.int64)
    return BasinPartition(
        n=inst.n,
        lo_genotype=los[order].astype(np.int64),
        lo_fitness=sorted_f,
        assignment=assignment,
        basin_sizes=sizes,
    )


def global_optimum(p: BasinPartition) -> tuple[int, float]:
    """The fittest local optimum (genotype, fitness); index 0 by construction."""
    if p.num_optima == 0:
        raise ValueError("empty partition")
    return int(p.lo_genotype[0]), float(p.lo_fitness[0])


def write_partition(p: BasinPartition, assignment_path, optima_path) -> None:
    """Export the genotype->optimum table and the optimum summary table."""
    with open(assignment_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["genotype_index", "lo_index"])
        for g, lo in enumerate(p.assignment):
            w.writerow([g, int(lo)])
    with open(optima_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lo_index", "genotype_index", "fitness", "basin_size"])
        for i in range(p.num_optima):
            w.writerow([i, int(p.lo_genotype[i]), repr(float(p.lo_fitness[i])),
                        int(p.basin_sizes[i])])
