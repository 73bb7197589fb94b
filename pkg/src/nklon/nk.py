"""NK landscape instances: seeded generation, fitness evaluation, bit-flip moves.

A genotype over n loci is a plain integer in [0, 2**n); bit i of the integer
is the allele of locus i. The string view (`to_bits`/`from_bits`) puts locus 0
at character 0. Contribution tables are indexed by the (k+1)-bit pattern where
the locus's own allele is bit 0 and the j-th epistatic partner is bit j+1.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_N = 30

INSTANCE_MAGIC = "nk-instance v1"


class ParameterError(ValueError):
    """NK parameters outside the supported range."""


class InstanceFormatError(ValueError):
    """Malformed instance file."""


def to_bits(g: int, n: int) -> str:
    return "".join("1" if (g >> i) & 1 else "0" for i in range(n))


def from_bits(bits: str) -> int:
    g = 0
    for i, c in enumerate(bits):
        if c == "1":
            g |= 1 << i
        elif c != "0":
            raise ValueError(f"not a bit string: {bits!r}")
    return g


@dataclass(frozen=True)
class NkInstance:
    """An NK landscape, fully determined by (n, k, seed) when generated.

    links[i] holds the k epistatic partners of locus i (sorted, never i);
    tables[i] holds the 2**(k+1) contribution values of locus i.
    """

    n: int
    k: int
    seed: int
    links: np.ndarray   # (n, k) int32
    tables: np.ndarray  # (n, 2**(k+1)) float64

    def __post_init__(self):
        if not 1 <= self.n <= MAX_N:
            raise ParameterError(f"n={self.n} outside [1, {MAX_N}]")
        if not 0 <= self.k <= self.n - 1:
            raise ParameterError(f"k={self.k} outside [0, n-1] for n={self.n}")
        if self.links.shape != (self.n, self.k):
            raise ParameterError(f"links shape {self.links.shape} != {(self.n, self.k)}")
        if self.tables.shape != (self.n, 1 << (self.k + 1)):
            raise ParameterError(
                f"tables shape {self.tables.shape} != {(self.n, 1 << (self.k + 1))}")
        for i in range(self.n):
            row = self.links[i]
            if len(set(int(x) for x in row)) != self.k or i in row:
                raise ParameterError(f"links[{i}] must be {self.k} distinct loci != {i}")
            if np.any(row < 0) or np.any(row >= self.n):
                raise ParameterError(f"links[{i}] out of range")
        if np.any(self.tables < 0.0) or np.any(self.tables > 1.0):
            raise ParameterError("table values must lie in [0, 1]")
        self.links.setflags(write=False)
        self.tables.setflags(write=False)

    @property
    def size(self) -> int:
        return 1 << self.n


def generate_instance(n: int, k: int, seed: int) -> NkInstance:
    """Draw a random instance from a PCG64 stream seeded with `seed`.

    Consumption order is fixed so instances are reproducible: for each locus
    i = 0..n-1 the k partners are drawn by partial Fisher-Yates over the
    other loci (one `integers` call per partner), then all n contribution
    tables are drawn in locus order (one `random(2**(k+1))` call each).
    """
    if not 1 <= n <= MAX_N:
        raise ParameterError(f"n={n} outside [1, {MAX_N}]")
    if not 0 <= k <= n - 1:
        raise ParameterError(f"k={k} outside [0, n-1] for n={n}")
    rng = np.random.default_rng(seed)
    links = np.empty((n, k), dtype=np.int32)
    for i in range(n):
        pool = [j for j in range(n) if j != i]
        for j in range(k):
            t = j + int(rng.integers(n - 1 - j))
            pool[j], pool[t] = pool[t], pool[j]
        links[i] = sorted(pool[:k])
    tables = np.empty((n, 1 << (k + 1)))
    for i in range(n):
        tables[i] = rng.random(1 << (k + 1))
    return NkInstance(n=n, k=k, seed=seed, links=links, tables=tables)


def fitness(inst: NkInstance, g: int) -> float:
    """Mean of the n locus contributions at genotype g."""
    total = 0.0
    links = inst.links
    tables = inst.tables
    for i in range(inst.n):
        idx = (g >> i) & 1
        for j in range(inst.k):
            idx |= ((g >> int(links[i, j])) & 1) << (j + 1)
        total += float(tables[i, idx])
    return total / inst.n


def full_fitness(inst: NkInstance) -> np.ndarray:
    """Fitness of every genotype, indexed by the integer encoding.

    Accumulates locus contributions in the same order as `fitness`, so the
    two agree bit-for-bit.
    """
    g = np.arange(inst.size, dtype=np.int64)
    acc = np.zeros(inst.size)
    for i in range(inst.n):
        idx = (g >> i) & 1
        for j in range(inst.k):
            idx |= ((g >> int(inst.links[i, j])) & 1) << (j + 1)
        acc += inst.tables[i, idx]
    acc /= inst.n
    return acc


def neighbors(g: int, n: int) -> list[int]:
    """The n genotypes at Hamming distance 1, in flip-index order."""
    return [g ^ (1 << b) for b in range(n)]


@lru_cache(maxsize=None)
def ball_offsets(n: int, d: int) -> np.ndarray:
    """XOR masks reaching every genotype within Hamming distance d.

    Ordered by distance, then lexicographically by flip indices; the zero
    mask (the genotype itself) comes first.
    """
    if not 0 <= d <= n:
        raise ParameterError(f"d={d} outside [0, n] for n={n}")
    masks = []
    for r in range(d + 1):
        for combo in itertools.combinations(range(n), r):
            m = 0
            for b in combo:
                m |= 1 << b
            masks.append(m)
    out = np.array(masks, dtype=np.int64)
    out.setflags(write=False)
    return out


def hamming_ball(g: int, n: int, d: int) -> list[int]:
    """All genotypes at Hamming distance <= d from g, including g itself."""
    return [g ^ int(m) for m in ball_offsets(n, d)]


def write_instance(inst: NkInstance, path) -> None:
    """Self-describing text dump; round-trips exactly via `read_instance`."""
    with open(path, "w") as fh:
        fh.write(f"{INSTANCE_MAGIC}\n")
        fh.write(f"n {inst.n}\n")
        fh.write(f"k {inst.k}\n")
        fh.write(f"seed {inst.seed}\n")
        for i in range(inst.n):
            row = " ".join(str(int(x)) for x in inst.links[i])
            fh.write(f"links {i}{' ' if row else ''}{row}\n")
        for i in range(inst.n):
            vals = " ".join(repr(float(x)) for x in inst.tables[i])
            fh.write(f"table {i} {vals}\n")


def read_instance(path) -> NkInstance:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != INSTANCE_MAGIC:
        raise InstanceFormatError(f"{path}: line 1: expected header {INSTANCE_MAGIC!r}")

    def _field(lineno: int, key: str) -> int:
        parts = lines[lineno].split()
        if len(parts) != 2 or parts[0] != key:
            raise InstanceFormatError(f"{path}: line {lineno + 1}: expected '{key} <int>'")
        return int(parts[1])

    n = _field(1, "n")
    k = _field(2, "k")
    seed = _field(3, "seed")
    expected = 4 + 2 * n
    if len(lines) < expected:
        raise InstanceFormatError(f"{path}: truncated file ({len(lines)} lines, need {expected})")
    links = np.empty((n, k), dtype=np.int32)
    for i in range(n):
        lineno = 4 + i
        parts = lines[lineno].split()
        if len(parts) != 2 + k or parts[0] != "links" or int(parts[1]) != i:
            raise InstanceFormatError(f"{path}: line {lineno + 1}: bad links row for locus {i}")
        links[i] = [int(x) for x in parts[2:]]
    tables = np.empty((n, 1 << (k + 1)))
    for i in range(n):
        lineno = 4 + n + i
        parts = lines[lineno].split()
        if len(parts) != 2 + (1 << (k + 1)) or parts[0] != "table" or int(parts[1]) != i:
            raise InstanceFormatError(f"{path}: line {lineno + 1}: bad table row for locus {i}")
        tables[i] = [float(x) for x in parts[2:]]
    return NkInstance(n=n, k=k, seed=seed, links=links, tables=tables)
