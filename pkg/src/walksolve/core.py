"""Sparse systems, their interaction graphs, and seeded instance generators.

Node ids are 0-based everywhere inside the library; text formats that use
1-based ids convert at the I/O boundary only.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidSystemError, MissingDiagonalError

GENERATOR_KINDS = (
    "example1-tree",
    "random-tree",
    "loopy-small",
    "random-sparse",
    "path",
    "star",
)
DIAG_RULES = ("neighbor-count", "unit", "explicit")

# Fixed 7-node demo tree: node 0 joins 1 and 2, node 1 joins 3 and 4,
# node 2 joins 5 and 6.  Diameter 4.
SEVEN_NODE_TREE_EDGES = ((0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6))

DEFAULT_COEFF_RANGE = (-1.0, -0.85)


@dataclass(frozen=True)
class SparseSystem:
    """A square sparse system A x = b with every diagonal entry present.

    ``entries`` holds (row, col, value) triples, 0-based, canonically
    sorted by (row, col).  Duplicate (row, col) pairs are rejected, not
    summed.  Every diagonal entry must be present and nonzero so that
    per-node normalizations are always defined.
    """

    n: int
    entries: tuple[tuple[int, int, float], ...]
    b: tuple[float, ...]

    def __init__(self, n: int, entries: Iterable[tuple[int, int, float]],
                 b: Sequence[float]):
        if n < 1:
            raise InvalidSystemError(f"system size must be >= 1, got {n}")
        norm = []
        seen = set()
        for row, col, val in entries:
            row = int(row)
            col = int(col)
            val = float(val)
            if not (0 <= row < n and 0 <= col < n):
                raise InvalidSystemError(
                    f"entry ({row}, {col}) outside a {n}x{n} system")
            if not math.isfinite(val):
                raise InvalidSystemError(
                    f"entry ({row}, {col}) has non-finite value {val!r}")
            if (row, col) in seen:
                raise InvalidSystemError(
                    f"duplicate entry at ({row}, {col}); duplicates are an "
                    "error, not summed")
            seen.add((row, col))
            norm.append((row, col, val))
        norm.sort(key=lambda t: (t[0], t[1]))
        bt = tuple(float(v) for v in b)
        if len(bt) != n:
            raise InvalidSystemError(
                f"right-hand side has length {len(bt)}, expected {n}")
        if any(not math.isfinite(v) for v in bt):
            raise InvalidSystemError("right-hand side has non-finite values")
        for i in range(n):
            if (i, i) not in seen:
                raise MissingDiagonalError(f"diagonal entry ({i}, {i}) missing")
        for row, col, val in norm:
            if row == col and val == 0.0:
                raise MissingDiagonalError(
                    f"diagonal entry ({row}, {row}) is zero")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "entries", tuple(norm))
        object.__setattr__(self, "b", bt)

    @cached_property
    def by_row(self) -> tuple[dict, ...]:
        """Per-row maps col -> value (diagonal included)."""
        rows = tuple({} for _ in range(self.n))
        for i, j, v in self.entries:
            rows[i][j] = v
        return rows

    @cached_property
    def by_col(self) -> tuple[dict, ...]:
        """Per-column maps row -> value (diagonal included)."""
        cols = tuple({} for _ in range(self.n))
        for i, j, v in self.entries:
            cols[j][i] = v
        return cols

    @cached_property
    def diag(self) -> tuple[float, ...]:
        return tuple(self.by_row[i][i] for i in range(self.n))

    @cached_property
    def max_abs_entry(self) -> float:
        return max(abs(v) for _, _, v in self.entries)

    def entry(self, i: int, j: int) -> float:
        """Value at (i, j); zero when the position is not stored."""
        return self.by_row[i].get(j, 0.0)

    def as_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j, v in self.entries:
            a[i, j] = v
        return a

    def b_vector(self) -> np.ndarray:
        return np.array(self.b, dtype=float)


@dataclass(frozen=True)
class UndirectedGraph:
    """Simple undirected graph as sorted per-node neighbor tuples."""

    n: int
    neighbors: tuple[tuple[int, ...], ...]

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n < 1:
            raise InvalidSystemError(f"graph size must be >= 1, got {n}")
        sets: list[set] = [set() for _ in range(n)]
        for u, v in edges:
            u = int(u)
            v = int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidSystemError(f"edge ({u}, {v}) outside 0..{n - 1}")
            if u == v:
                raise InvalidSystemError(f"self-loop at node {u} not allowed")
            sets[u].add(v)
            sets[v].add(u)
        object.__setattr__(self, "n", n)
        object.__setattr__(
            self, "neighbors", tuple(tuple(sorted(s)) for s in sets))

    def degree(self, u: int) -> int:
        return len(self.neighbors[u])

    def edges(self) -> tuple[tuple[int, int], ...]:
        """Undirected edge list with u < v, sorted."""
        out = []
        for u in range(self.n):
            for v in self.neighbors[u]:
                if u < v:
                    out.append((u, v))
        return tuple(out)

    def edge_count(self) -> int:
        return sum(len(s) for s in self.neighbors) // 2

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbors[u]


def induced_graph(sys: SparseSystem) -> UndirectedGraph:
    """Interaction graph: i and j are adjacent iff a_ij != 0 or a_ji != 0."""
    edges = set()
    for i, j, v in sys.entries:
        if i != j and v != 0.0:
            edges.add((min(i, j), max(i, j)))
    return UndirectedGraph(sys.n, sorted(edges))


def _bfs_dist(g: UndirectedGraph, src: int) -> list[int]:
    dist = [-1] * g.n
    dist[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        for v in g.neighbors[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist

def bfs_distances(g: UndirectedGraph, src: int) -> list[int]:
    """Hop distances from src; -1 marks unreachable nodes."""
    return _bfs_dist(g, src)


def diameter(g: UndirectedGraph) -> int:
    """Longest shortest path, exact via BFS from every node.

    On a disconnected graph this is the maximum over components; a
    singleton graph has diameter 0.
    """
    best = 0
    for src in range(g.n):
        ecc = max(d for d in _bfs_dist(g, src) if d >= 0)
        best = max(best, ecc)
    return best


def connected_components(g: UndirectedGraph) -> tuple[tuple[int, ...], ...]:
    """Components as sorted node tuples, ordered by smallest member."""
    seen = [False] * g.n
    comps = []
    for start in range(g.n):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        q = deque([start])
        while q:
            u = q.popleft()
            for v in g.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    q.append(v)
        comps.append(tuple(sorted(comp)))
    return tuple(comps)


def is_acyclic(g: UndirectedGraph) -> bool:
    """True iff the graph has no undirected cycle (i.e. it is a forest)."""
    return g.edge_count() == g.n - len(connected_components(g))


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a reproducible random instance.

    ``coeff_range`` is sampled half-open [lo, hi); a draw of exactly 0.0
    is redrawn so no stored off-diagonal can vanish, and lo == 0.0 is
    rejected outright because the included endpoint would zero an edge
    weight.  ``density`` only affects kind "random-sparse";
    ``diag_value`` only affects diag_rule "explicit".
    """

    kind: str
    n: int
    seed: int
    coeff_range: tuple[float, float] = DEFAULT_COEFF_RANGE
    diag_rule: str = "neighbor-count"
    density: float = 0.1
    diag_value: float = 1.0

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise InvalidSystemError(
                f"unknown generator kind {self.kind!r}; "
                f"expected one of {GENERATOR_KINDS}")
        if self.n < 1:
            raise InvalidSystemError(f"n must be >= 1, got {self.n}")
        if not (0 <= self.seed < 2 ** 64):
            raise InvalidSystemError("seed must fit in an unsigned 64-bit int")
        lo, hi = self.coeff_range
        if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
            raise InvalidSystemError(
                f"coeff_range must be a finite (lo, hi) with lo < hi, "
                f"got {self.coeff_range}")
        if lo == 0.0:
            raise InvalidSystemError(
                "coeff_range low endpoint 0.0 would zero an edge weight")
        if not 0.0 <= self.density <= 1.0:
            raise InvalidSystemError("density must lie in [0, 1]")
        if self.diag_rule not in DIAG_RULES:
            raise InvalidSystemError(
                f"unknown diag rule {self.diag_rule!r}; "
                f"expected one of {DIAG_RULES}")
        if self.diag_rule == "explicit" and (
                self.diag_value == 0.0 or not math.isfinite(self.diag_value)):
            raise InvalidSystemError("explicit diagonal must be finite nonzero")


def _topology_rng(seed: int) -> np.random.Generator:
    # Stream split: lane (0,) of the seed is reserved for topology draws,
    # lane (1, i, j) for the coefficients of undirected edge i < j.
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0,))))


def _edge_rng(seed: int, i: int, j: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1, i, j))))


def _draw_nonzero(rng: np.random.Generator, lo: float, hi: float) -> float:
    while True:
        v = float(rng.uniform(lo, hi))
        if v != 0.0:
            return v


def _pruefer_tree(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform random labeled tree from a random Pruefer sequence."""
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    seq = [int(x) for x in rng.integers(0, n, size=n - 2)]
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    # smallest-leaf decoding; a heap would be O(n log n) but n stays small
    import heapq

    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((min(u, v), max(u, v)))
    return edges


def _loopy_small_edges(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Random connected graph with at least one cycle: tree plus extras."""
    if n < 3:
        raise InvalidSystemError(
            f"loopy-small needs n >= 3 to contain a cycle, got {n}")
    edges = set(_pruefer_tree(n, rng))
    extra = max(1, n // 5)
    added = 0
    # bounded retry loop; a complete graph cannot absorb more edges
    attempts = 0
    while added < extra and attempts < 50 * extra + 100:
        attempts += 1
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        e = (min(u, v), max(u, v))
        if e in edges:
            continue
        edges.add(e)
        added += 1
    return sorted(edges)


def _random_sparse_edges(n: int, rng: np.random.Generator,
                         density: float) -> list[tuple[int, int]]:
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                edges.append((i, j))
    return edges


def _diag_value(rule: str, degree: int, explicit: float) -> float:
    if rule == "neighbor-count":
        # isolated nodes get 1.0 so the diagonal stays nonzero
        return float(max(1, degree))
    if rule == "unit":
        return 1.0
    return float(explicit)


def system_from_edges(n: int, edges: Sequence[tuple[int, int]], seed: int,
                      coeff_range: tuple[float, float] = DEFAULT_COEFF_RANGE,
                      diag_rule: str = "neighbor-count",
                      diag_value: float = 1.0,
                      b: Optional[Sequence[float]] = None) -> SparseSystem:
    """Fill a fixed edge pattern with seeded coefficients.

    Both directions of every edge get independent draws from
    ``coeff_range`` (the i->j value first for i < j, then j->i), each from
    the edge's own RNG lane, so the result does not depend on edge
    enumeration order.  Default right-hand side is b_i = i + 1.
    """
    g = UndirectedGraph(n, edges)
    entries: list[tuple[int, int, float]] = []
    lo, hi = coeff_range
    for i in range(n):
        entries.append((i, i, _diag_value(diag_rule, g.degree(i), diag_value)))
    for u, v in g.edges():
        rng = _edge_rng(seed, u, v)
        entries.append((u, v, _draw_nonzero(rng, lo, hi)))
        entries.append((v, u, _draw_nonzero(rng, lo, hi)))
    if b is None:
        b = [float(i + 1) for i in range(n)]
    return SparseSystem(n, entries, b)


def generate_instance(spec: GeneratorSpec) -> SparseSystem:
    """Deterministically build the instance a GeneratorSpec describes.

    Same spec, same system, bit for bit: topology comes from the seed's
    topology lane and every edge weight from that edge's own lane.
    """
    rng = _topology_rng(spec.seed)
    if spec.kind == "example1-tree":
        if spec.n != 7:
            raise InvalidSystemError(
                f"example1-tree is a fixed 7-node shape, got n={spec.n}")
        edges = list(SEVEN_NODE_TREE_EDGES)
    elif spec.kind == "random-tree":
        edges = _pruefer_tree(spec.n, rng)
    elif spec.kind == "loopy-small":
        edges = _loopy_small_edges(spec.n, rng)
    elif spec.kind == "random-sparse":
        edges = _random_sparse_edges(spec.n, rng, spec.density)
    elif spec.kind == "path":
        edges = [(i, i + 1) for i in range(spec.n - 1)]
    else:  # star
        edges = [(0, i) for i in range(1, spec.n)]
    return system_from_edges(spec.n, edges, spec.seed,
                             coeff_range=spec.coeff_range,
                             diag_rule=spec.diag_rule,
                             diag_value=spec.diag_value)
