"""Local optima network extraction and serialization.

Vertices are the local optima; a directed arc i->j counts the genotypes
within Hamming distance d of optimum i whose hill-climbing descent lands in
the basin of optimum j. The optimum itself is part of its own ball, so every
node carries a self-loop. Counts are also normalized by the ball size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basins import BasinPartition
from .nk import NkInstance, ball_offsets


class LonFormatError(ValueError):
    """Malformed LON file."""


LON_MAGIC = "nk-lon v1"


@dataclass(frozen=True)
class Lon:
    """Escape-edge local optima network of one instance.

    Off-diagonal arcs live in (arc_src, arc_dst, arc_w, arc_p), sorted by
    (src, dst); self-loops are dense per-node arrays. For every node,
    self_w + sum of outgoing arc_w equals the ball size.
    """

    n: int
    k: int
    seed: int
    d: int
    node_genotype: np.ndarray  # (nv,) int64
    fitness: np.ndarray        # (nv,) float64
    basin_size: np.ndarray     # (nv,) int64
    arc_src: np.ndarray        # (na,) int32
    arc_dst: np.ndarray        # (na,) int32
    arc_w: np.ndarray          # (na,) int64 escape counts
    arc_p: np.ndarray          # (na,) float64, arc_w / ball_size
    self_w: np.ndarray         # (nv,) int64
    self_p: np.ndarray         # (nv,) float64
    go_index: int = 0

    @property
    def node_count(self) -> int:
        return len(self.node_genotype)

    @property
    def ball_size(self) -> int:
        return int(ball_offsets(self.n, self.d).size)

    def out_count_totals(self) -> np.ndarray:
        """Per-node count-weight row sum including the self-loop."""
        tot = self.self_w.astype(np.int64).copy()
        np.add.at(tot, self.arc_src, self.arc_w)
        return tot

    def out_degrees(self) -> np.ndarray:
        """Number of off-diagonal out-arcs per node."""
        return np.bincount(self.arc_src, minlength=self.node_count).astype(np.int64)


def extract_lon(inst: NkInstance, p: BasinPartition, d: int = 2) -> Lon:
    """Count, for every optimum, where its distance-<=d perturbations descend."""
    if not 1 <= d <= inst.n:
        raise ValueError(f"d={d} outside [1, n]")
    nv = p.num_optima
    offsets = ball_offsets(inst.n, d)
    ball = p.lo_genotype[:, None] ^ offsets[None, :]
    targets = p.assignment[ball]
    src = np.repeat(np.arange(nv, dtype=np.int64), offsets.size)
    codes = src * nv + targets.ravel().astype(np.int64)
    uniq, counts = np.unique(codes, return_counts=True)
    i = (uniq // nv).astype(np.int32)
    j = (uniq % nv).astype(np.int32)
    w = counts.astype(np.int64)
    pnorm = w / offsets.size
    diag = i == j
    self_w = np.zeros(nv, dtype=np.int64)
    self_w[i[diag]] = w[diag]
    self_p = self_w / offsets.size
    off = ~diag
    return Lon(
        n=inst.n, k=inst.k, seed=inst.seed, d=d,
        node_genotype=p.lo_genotype.copy(),
        fitness=p.lo_fitness.copy(),
        basin_size=p.basin_sizes.copy(),
        arc_src=i[off], arc_dst=j[off], arc_w=w[off], arc_p=pnorm[off],
        self_w=self_w, self_p=self_p,
    )


def write_lon(lon: Lon, path) -> None:
    """Text dump with node and arc sections; self-loops appear as i = j rows."""
    src = np.concatenate([lon.arc_src, np.arange(lon.node_count, dtype=np.int32)])
    dst = np.concatenate([lon.arc_dst, np.arange(lon.node_count, dtype=np.int32)])
    w = np.concatenate([lon.arc_w, lon.self_w])
    pn = np.concatenate([lon.arc_p, lon.self_p])
    order = np.lexsort((dst, src))
    with open(path, "w") as fh:
        fh.write(f"{LON_MAGIC}\n")
        fh.write(f"n {lon.n}\n")
        fh.write(f"k {lon.k}\n")
        fh.write(f"seed {lon.seed}\n")
        fh.write(f"d {lon.d}\n")
        fh.write(f"nv {lon.node_count}\n")
        for idx in range(lon.node_count):
            fh.write(f"node {idx} {int(lon.node_genotype[idx])} "
                     f"{repr(float(lon.fitness[idx]))} {int(lon.basin_size[idx])}\n")
        for t in order:
            if w[t] == 0:
                continue  # a node whose ball never returns to it has no self-loop row
            fh.write(f"arc {int(src[t])} {int(dst[t])} {int(w[t])} {repr(float(pn[t]))}\n")


def read_lon(path) -> Lon:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != LON_MAGIC:
        raise LonFormatError(f"{path}: line 1: expected header {LON_MAGIC!r}")

    def _field(lineno: int, key: str) -> int:
        parts = lines[lineno].split()
        if len(parts) != 2 or parts[0] != key:
            raise LonFormatError(f"{path}: line {lineno + 1}: expected '{key} <int>'")
        return int(parts[1])

    n = _field(1, "n")
    k = _field(2, "k")
    seed = _field(3, "seed")
    d = _field(4, "d")
    nv = _field(5, "nv")
    if nv < 1:
        raise LonFormatError(f"{path}: line 6: nv must be >= 1")
    genotype = np.empty(nv, dtype=np.int64)
    fitness = np.empty(nv)
    basin = np.empty(nv, dtype=np.int64)
    for idx in range(nv):
        lineno = 6 + idx
        if lineno >= len(lines):
            raise LonFormatError(f"{path}: line {lineno + 1}: missing node row {idx}")
        parts = lines[lineno].split()
        if len(parts) != 5 or parts[0] != "node" or int(parts[1]) != idx:
            raise LonFormatError(f"{path}: line {lineno + 1}: bad node row")
        genotype[idx] = int(parts[2])
        fitness[idx] = float(parts[3])
        basin[idx] = int(parts[4])
    src, dst, w, pn = [], [], [], []
    self_w = np.zeros(nv, dtype=np.int64)
    self_p = np.zeros(nv)
    for lineno in range(6 + nv, len(lines)):
        line = lines[lineno]
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 5 or parts[0] != "arc":
            raise LonFormatError(f"{path}: line {lineno + 1}: bad arc row: {line!r}")
        i, j, wij, pij = int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4])
        if not (0 <= i < nv and 0 <= j < nv):
            raise LonFormatError(f"{path}: line {lineno + 1}: arc endpoint out of range")
        if wij <= 0:
            raise LonFormatError(f"{path}: line {lineno + 1}: non-positive arc weight")
        if i == j:
            self_w[i] = wij
            self_p[i] = pij
        else:
            src.append(i)
            dst.append(j)
            w.append(wij)
            pn.append(pij)
    arc_src = np.array(src, dtype=np.int32)
    arc_dst = np.array(dst, dtype=np.int32)
    order = np.lexsort((arc_dst, arc_src))
    return Lon(
        n=n, k=k, seed=seed, d=d,
        node_genotype=genotype, fitness=fitness, basin_size=basin,
        arc_src=arc_src[order], arc_dst=arc_dst[order],
        arc_w=np.array(w, dtype=np.int64)[order],
        arc_p=np.array(pn)[order],
        self_w=self_w, self_p=self_p,
    )


def to_dot(lon: Lon) -> str:
    """DOT rendering for external viewers: fitness on nodes, p_ij on arcs."""
    out = [f'digraph lon_n{lon.n}_k{lon.k}_s{lon.seed} {{']
    for idx in range(lon.node_count):
        out.append(f'  v{idx} [label="{lon.fitness[idx]:.6f}"];')
        if lon.self_w[idx] > 0:
            out.append(f'  v{idx} -> v{idx} [label="{lon.self_p[idx]:.4f}"];')
    for t in range(len(lon.arc_src)):
        out.append(f'  v{int(lon.arc_src[t])} -> v{int(lon.arc_dst[t])} '
                   f'[label="{lon.arc_p[t]:.4f}"];')
    out.append("}")
    return "\n".join(out) + "\n"
