"""Shared test helpers: invariant checks, synthetic LONs, independent oracles."""
from __future__ import annotations

import numpy as np

from nklon import Lon
from nklon.basins import hill_climb


def check_lon_invariants(lon: Lon) -> None:
    """Structural facts every extracted LON must satisfy."""
    ball = lon.ball_size
    totals = lon.out_count_totals()
    assert (totals == ball).all(), "count-weight row sums must equal the ball size"
    psum = lon.self_p.copy()
    np.add.at(psum, lon.arc_src, lon.arc_p)
    assert np.allclose(psum, 1.0, atol=1e-12), "normalized rows must sum to 1"
    assert (lon.arc_w > 0).all(), "no zero-weight arcs stored"
    assert (lon.arc_src != lon.arc_dst).all(), "self-loops live in their own arrays"
    assert (np.diff(lon.fitness) < 0).all(), "node fitness strictly decreasing"
    assert lon.go_index == 0


def make_lon(fitness_vals, arcs, selfs=None, n=8, k=2, seed=0, d=2,
             basin=None) -> Lon:
    """Hand-built LON for metric unit tests (no structural validation).

    arcs: list of (i, j, count_weight, normalized_weight); selfs: list of
    (count_weight, normalized_weight) per node, zeros when omitted.
    """
    nv = len(fitness_vals)
    if selfs is None:
        selfs = [(0, 0.0)] * nv
    if basin is None:
        basin = [1] * nv
    arcs = sorted(arcs)
    return Lon(
        n=n, k=k, seed=seed, d=d,
        node_genotype=np.arange(nv, dtype=np.int64),
        fitness=np.asarray(fitness_vals, dtype=float),
        basin_size=np.asarray(basin, dtype=np.int64),
        arc_src=np.array([a[0] for a in arcs], dtype=np.int32),
        arc_dst=np.array([a[1] for a in arcs], dtype=np.int32),
        arc_w=np.array([a[2] for a in arcs], dtype=np.int64),
        arc_p=np.array([a[3] for a in arcs], dtype=float),
        self_w=np.array([s[0] for s in selfs], dtype=np.int64),
        self_p=np.array([s[1] for s in selfs], dtype=float),
    )


def oracle_basin_endpoints(inst) -> np.ndarray:
    """Memoization-free reference: one independent climb per genotype.

    Uses scalar fitness() calls, sharing nothing with the vectorized
    partition path except the instance itself.
    """
    size = 1 << inst.n
    out = np.empty(size, dtype=np.int64)
    for g in range(size):
        lo, _ = hill_climb(inst, g)
        out[g] = lo
    return out


def oracle_arc_counts(inst, part, d: int) -> dict[tuple[int, int], int]:
    """Escape-arc weights re-derived from scratch by plain ball enumeration."""
    import itertools
    counts: dict[tuple[int, int], int] = {}
    n = inst.n
    masks = [0]
    for r in range(1, d + 1):
        for combo in itertools.combinations(range(n), r):
            m = 0
            for b in combo:
                m |= 1 << b
            masks.append(m)
    for i in range(part.num_optima):
        lo = int(part.lo_genotype[i])
        for m in masks:
            j = int(part.assignment[lo ^ m])
            counts[(i, j)] = counts.get((i, j), 0) + 1
    return counts


def oracle_all_pairs_costs(lon: Lon, channel: str) -> np.ndarray:
    """Brute-force shortest paths by repeated edge relaxation (<= 30 nodes)."""
    nv = lon.node_count
    dist = np.full((nv, nv), np.inf)
    np.fill_diagonal(dist, 0.0)
    weights = lon.arc_p if channel == "normalized" else lon.arc_w
    edges = [(int(s), int(t), 1.0 / float(w))
             for s, t, w in zip(lon.arc_src, lon.arc_dst, weights)]
    for _ in range(nv):
        changed = False
        for s, t, c in edges:
            relaxed = dist[:, s] + c
            better = relaxed < dist[:, t]
            if better.any():
                dist[better, t] = relaxed[better]
                changed = True
        if not changed:
            break
    return dist
