"""Complex-network features of a local optima network.

Path costs use d_ij = 1/weight. The weight channel is ambiguous between raw
escape counts and ball-normalized transition likelihoods, so both variants
are computed; the normalized channel is canonical (its magnitudes are the
ones consistent with the expected-perturbations reading: 1/p_ij is the mean
number of random distance-d perturbations needed to enter basin j from
optimum i). All metrics except the self-loop weight exclude self-loops;
clustering and assortativity act on the undirected, unweighted projection.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .lon import Lon
from .stats import spearman

# metric fields that may be undefined on degenerate graphs
OPTIONAL_METRICS = ("lo", "lv", "fnn", "cc", "y2", "knn", "lo_count", "lv_count")

CSV_FIELDS = ("n", "k", "seed", "nv", "lo", "lv", "fnn", "wii", "cc", "zout",
              "y2", "knn", "lo_count", "lv_count", "lo_unreachable", "undefined")


@dataclass(frozen=True)
class LonMetricsRow:
    """Per-instance network features; None marks an undefined metric."""

    n: int
    k: int
    seed: int
    nv: int
    lo: float | None          # mean shortest-path cost to the global optimum
    lv: float | None          # characteristic path length
    fnn: float | None         # fitness-fitness rank correlation (out-neighbors)
    wii: float                # mean raw self-loop weight
    cc: float | None          # global transitivity of the undirected projection
    zout: float               # mean off-diagonal out-degree
    y2: float | None          # mean out-weight disparity
    knn: float | None         # degree assortativity of the undirected projection
    lo_count: float | None    # lo under the count-weight cost channel
    lv_count: float | None    # lv under the count-weight cost channel
    lo_unreachable: int       # nodes with no path to the global optimum

    def undefined_fields(self) -> list[str]:
        return [f for f in OPTIONAL_METRICS if getattr(self, f) is None]


def _cost_graph(lon: Lon, channel: str) -> csr_matrix:
    if channel == "normalized":
        cost = 1.0 / lon.arc_p
    elif channel == "count":
        cost = 1.0 / lon.arc_w
    else:
        raise ValueError(f"unknown cost channel {channel!r}")
    nv = lon.node_count
    return csr_matrix((cost, (lon.arc_src, lon.arc_dst)), shape=(nv, nv))


def shortest_paths_to_go(lon: Lon, channel: str = "normalized") -> tuple[float | None, int]:
    """Mean shortest-path cost from every other node to the global optimum.

    Returns (mean over nodes that can reach it, count of nodes that cannot);
    the mean is None when nothing reaches the optimum, 0.0 on a single node.
    """
    nv = lon.node_count
    if nv == 1:
        return 0.0, 0
    graph = _cost_graph(lon, channel)
    dist = dijkstra(graph.T.tocsr(), directed=True, indices=lon.go_index)
    others = np.delete(dist, lon.go_index)
    finite = np.isfinite(others)
    if not finite.any():
        return None, int(len(others))
    return float(others[finite].mean()), int((~finite).sum())


def char_path_length(lon: Lon, channel: str = "normalized",
                     batch: int = 256) -> float | None:
    """Mean shortest-path cost over all ordered reachable pairs (i != j)."""
    nv = lon.node_count
    if nv < 2:
        return None
    graph = _cost_graph(lon, channel)
    total = 0.0
    count = 0
    for start in range(0, nv, batch):
        idx = np.arange(start, min(start + batch, nv))
        dist = dijkstra(graph, directed=True, indices=idx)
        dist[np.arange(len(idx)), idx] = np.inf  # drop the i == i cells
        finite = np.isfinite(dist)
        total += float(dist[finite].sum())
        count += int(finite.sum())
    if count == 0:
        return None
    return total / count


def fitness_fitness_corr(lon: Lon) -> float | None:
    """Spearman correlation of node fitness vs weighted out-neighbor fitness."""
    nv = lon.node_count
    strength = np.bincount(lon.arc_src, weights=lon.arc_w, minlength=nv)
    weighted_f = np.bincount(lon.arc_src, weights=lon.arc_w * lon.fitness[lon.arc_dst],
                             minlength=nv)
    q = strength > 0
    if int(q.sum()) < 3:
        return None
    try:
        rho, _ = spearman(lon.fitness[q], weighted_f[q] / strength[q])
    except ValueError:
        return None
    return rho


def avg_self_weight(lon: Lon) -> float:
    return float(lon.self_w.mean())


def avg_out_degree(lon: Lon) -> float:
    return float(lon.out_degrees().mean())


def avg_disparity(lon: Lon) -> float | None:
    """Mean over nodes of the sum of squared normalized out-weights."""
    nv = lon.node_count
    strength = np.bincount(lon.arc_src, weights=lon.arc_w, minlength=nv)
    sumsq = np.bincount(lon.arc_src, weights=lon.arc_w.astype(float) ** 2, minlength=nv)
    q = strength > 0
    if not q.any():
        return None
    return float((sumsq[q] / strength[q] ** 2).mean())


def node_disparity(lon: Lon) -> np.ndarray:
    """Per-node disparity (NaN where the node has no off-diagonal out-arc)."""
    nv = lon.node_count
    strength = np.bincount(lon.arc_src, weights=lon.arc_w, minlength=nv)
    sumsq = np.bincount(lon.arc_src, weights=lon.arc_w.astype(float) ** 2, minlength=nv)
    out = np.full(nv, np.nan)
    q = strength > 0
    out[q] = sumsq[q] / strength[q] ** 2
    return out


def _undirected_edges(lon: Lon) -> tuple[np.ndarray, np.ndarray]:
    """Unique undirected edges (u < v) of the projection, self-loops dropped."""
    if len(lon.arc_src) == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    a = np.minimum(lon.arc_src, lon.arc_dst).astype(np.int64)
    b = np.maximum(lon.arc_src, lon.arc_dst).astype(np.int64)
    codes = np.unique(a * lon.node_count + b)
    return codes // lon.node_count, codes % lon.node_count


def clustering_coeff(lon: Lon) -> float | None:
    """Global transitivity 3*triangles/triples of the undirected projection."""
    nv = lon.node_count
    if nv < 3:
        return None
    u, v = _undirected_edges(lon)
    if len(u) == 0:
        return None
    deg = np.bincount(np.concatenate([u, v]), minlength=nv)
    triples = int((deg * (deg - 1) // 2).sum())
    if triples == 0:
        return None
    # packed-bitset adjacency; per-edge popcount of N(u) & N(v) sums to 3*triangles
    words = (nv + 63) // 64
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    flat = rows * words + (cols >> 6)
    bits = np.uint64(1) << (cols & 63).astype(np.uint64)
    order = np.argsort(flat, kind="mergesort")
    flat_s = flat[order]
    bits_s = bits[order]
    starts = np.flatnonzero(np.r_[True, flat_s[1:] != flat_s[:-1]])
    packed = np.zeros(nv * words, dtype=np.uint64)
    packed[flat_s[starts]] = np.bitwise_or.reduceat(bits_s, starts)
    adj = packed.reshape(nv, words)
    closed = 0
    step = max(1, 4_000_000 // words)
    for s in range(0, len(u), step):
        inter = adj[u[s:s + step]] & adj[v[s:s + step]]
        closed += int(np.bitwise_count(inter).sum())
    return closed / triples


def degree_assortativity(lon: Lon) -> float | None:
    """Pearson correlation of endpoint degrees over the undirected edge list."""
    u, v = _undirected_edges(lon)
    if len(u) < 2:
        return None
    deg = np.bincount(np.concatenate([u, v]), minlength=lon.node_count)
    x = deg[np.concatenate([u, v])].astype(float)
    y = deg[np.concatenate([v, u])].astype(float)
    if np.all(x == x[0]):
        return None
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc)) * math.sqrt(float(yc @ yc))
    return float(xc @ yc) / denom


def metrics_row(lon: Lon, paths: bool = True) -> LonMetricsRow:
    """All Table-style features of one LON; degenerate metrics become None.

    `paths=False` skips the shortest-path metrics (lo, lv, and their
    count-channel variants), whose all-pairs part is the only expensive step
    on large networks.
    """
    if paths:
        lo_norm, unreachable = shortest_paths_to_go(lon, "normalized")
        lo_count, _ = shortest_paths_to_go(lon, "count")
        lv_norm = char_path_length(lon, "normalized")
        lv_count = char_path_length(lon, "count")
    else:
        lo_norm = lo_count = lv_norm = lv_count = None
        unreachable = 0
    return LonMetricsRow(
        n=lon.n, k=lon.k, seed=lon.seed,
        nv=lon.node_count,
        lo=lo_norm,
        lv=lv_norm,
        fnn=fitness_fitness_corr(lon),
        wii=avg_self_weight(lon),
        cc=clustering_coeff(lon),
        zout=avg_out_degree(lon),
        y2=avg_disparity(lon),
        knn=degree_assortativity(lon),
        lo_count=lo_count,
        lv_count=lv_count,
        lo_unreachable=unreachable,
    )


def row_to_dict(row: LonMetricsRow) -> dict:
    out = {}
    for f in fields(row):
        v = getattr(row, f.name)
        out[f.name] = v
    out["undefined"] = ";".join(row.undefined_fields())
    return out


def write_metrics_csv(rows: list[LonMetricsRow], path, provenance: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for row in rows:
            d = row_to_dict(row)
            w.writerow(["" if d[f] is None else
                        (repr(d[f]) if isinstance(d[f], float) else d[f])
                        for f in CSV_FIELDS])


def read_metrics_csv(path) -> list[LonMetricsRow]:
    rows = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    for rec in reader:
        kwargs = {}
        for f in fields(LonMetricsRow):
            raw = rec[f.name]
            if raw == "":
                kwargs[f.name] = None
            elif f.name in ("n", "k", "seed", "nv", "lo_unreachable"):
                kwargs[f.name] = int(raw)
            else:
                kwargs[f.name] = float(raw)
        rows.append(LonMetricsRow(**kwargs))
    return rows
