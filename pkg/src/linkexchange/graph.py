"""Undirected social graphs: construction, generators, edge-list I/O and metrics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.sparse.csgraph import connected_components

from . import _rng
from ._validation import ParameterError, check_positive_int

log = logging.getLogger(__name__)

UNREACHABLE = -1


class Graph:
    """Immutable simple undirected graph stored as CSR adjacency.

    Neighbor lists are sorted; node IDs are ``0..node_count-1``.
    """

    def __init__(self, node_count, edges):
        node_count = int(node_count)
        if node_count < 0:
            raise ParameterError("node_count must be nonnegative")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= node_count):
            raise ParameterError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ParameterError("self-loops are not allowed")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        keys = np.unique(lo * node_count + hi)
        lo, hi = keys // max(node_count, 1), keys % max(node_count, 1)
        self.node_count = node_count
        self.edges = np.column_stack([lo, hi]).astype(np.int64)
        self.edge_count = len(self.edges)

        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        self.indices = dst[order].astype(np.int64)
        self.degrees = np.bincount(src, minlength=node_count).astype(np.int64)
        self.indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.cumsum(self.degrees, out=self.indptr[1:])
        self.indices.flags.writeable = False
        self.edges.flags.writeable = False

    def __repr__(self):
        return f"Graph(N={self.node_count}, M={self.edge_count})"

    def neighbors(self, u):
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def has_edge(self, u, v):
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.size and nb[i] == v)

    def adjacency_matrix(self, dtype=np.float64):
        data = np.ones(self.indices.size, dtype=dtype)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.node_count,) * 2)

    @classmethod
    def from_adjacency(cls, adjacency):
        edges = [(u, v) for u, nbrs in enumerate(adjacency) for v in nbrs if u < v]
        return cls(len(adjacency), edges)


# ---- generators --------------------------------------------------------------------------


def generate_er(n, m_target, seed=0):
    """G(n, M): exactly ``m_target`` distinct edges drawn uniformly without replacement."""
    n = check_positive_int(n, "n")
    m_target = check_positive_int(m_target, "m_target", minimum=0)
    total = n * (n - 1) // 2
    if m_target > total:
        raise ParameterError(f"m_target={m_target} exceeds n(n-1)/2={total}")
    rng = _rng.stream(seed, _rng.GRAPH, 1, n, m_target)
    flat = rng.choice(total, size=m_target, replace=False) if m_target else np.empty(0, np.int64)
    # Row-major index into the strict upper triangle -> (a, b), a < b.
    flat = flat.astype(np.int64)
    rows = np.arange(n, dtype=np.int64)
    row_start = rows * (2 * n - rows - 1) // 2
    a = np.searchsorted(row_start, flat, side="right") - 1
    b = flat - row_start[a] + a + 1
    g = Graph(n, np.column_stack([a, b]))
    _warn_if_disconnected(g)
    return g


def generate_ba(n, attach_m, seed=0):
    """Preferential attachment from a clique on ``attach_m`` nodes.

    Each of the remaining ``n - attach_m`` arrivals links to ``attach_m``
    distinct existing nodes chosen with probability proportional to degree
    (the first arrival links to the whole seed clique).
    """
    attach_m = check_positive_int(attach_m, "attach_m")
    n = check_positive_int(n, "n")
    if n <= attach_m:
        raise ParameterError(f"need n > attach_m, got n={n}, attach_m={attach_m}")
    rng = _rng.stream(seed, _rng.GRAPH, 2, n, attach_m)
    m0 = attach_m
    edges = [(i, j) for i in range(m0) for j in range(i + 1, m0)]
    # Each node appears once per incident edge end.
    repeated = np.empty(2 * (len(edges) + (n - m0) * attach_m), dtype=np.int64)
    fill = 0
    for i, j in edges:
        repeated[fill : fill + 2] = (i, j)
        fill += 2
    for new in range(m0, n):
        if new == m0:
            targets = list(range(m0))
        else:
            targets = set()
            while len(targets) < attach_m:
                draws = repeated[rng.integers(0, fill, size=2 * attach_m)]
                for t in draws:
                    if len(targets) == attach_m:
                        break
                    targets.add(int(t))
            targets = sorted(targets)
        for t in targets:
            edges.append((t, new))
            repeated[fill : fill + 2] = (t, new)
            fill += 2
    g = Graph(n, edges)
    _warn_if_disconnected(g)
    return g


def _warn_if_disconnected(g):
    if g.node_count > 1:
        n_comp, _ = connected_components(g.adjacency_matrix(np.int8), directed=False)
        if n_comp > 1:
            log.warning("generated graph has %d connected components", n_comp)


# ---- edge-list I/O -----------------------------------------------------------------------


def read_edge_list(path, node_count=None):
    """Load ``u v`` lines; duplicates are merged, self-loops rejected."""
    pairs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ParameterError(f"{path}:{lineno}: expected 'u v'")
        u, v = int(parts[0]), int(parts[1])
        if u == v:
            raise ParameterError(f"{path}:{lineno}: self-loop on node {u}")
        pairs.append((u, v))
    arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    if node_count is None:
        node_count = int(arr.max()) + 1 if arr.size else 0
    return Graph(node_count, arr)


def write_edge_list(g, path):
    with open(path, "w") as fh:
        for a, b in g.edges:
            fh.write(f"{a} {b}\n")


# ---- distances ---------------------------------------------------------------------------


@njit(cache=True)
def _bfs(indptr, indices, source, dist, queue):
    dist[:] = -1
    dist[source] = 0
    head = 0
    tail = 1
    queue[0] = source
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u] + 1
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if dist[v] < 0:
                dist[v] = du
                queue[tail] = v
                tail += 1
    return tail


@njit(cache=True)
def _distance_histogram(indptr, indices, sources):
    n = indptr.shape[0] - 1
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    hist = np.zeros(n + 1, np.int64)
    for s in sources:
        reached = _bfs(indptr, indices, s, dist, queue)
        for i in range(reached):
            hist[dist[queue[i]]] += 1
    return hist


def bfs_distances(g, source):
    """Hop distances from ``source``; unreachable nodes get ``inf``."""
    if not 0 <= source < g.node_count:
        raise ParameterError(f"source {source} out of range")
    dist = np.empty(g.node_count, np.int64)
    _bfs(g.indptr, g.indices, source, dist, np.empty(g.node_count, np.int64))
    out = dist.astype(float)
    out[dist < 0] = np.inf
    return out


def all_pairs_distances(g):
    """Dense ``N x N`` hop-distance matrix, ``-1`` for unreachable pairs (small graphs)."""
    n = g.node_count
    out = np.empty((n, n), np.int64)
    queue = np.empty(n, np.int64)
    for s in range(n):
        _bfs(g.indptr, g.indices, s, out[s], queue)
    return out


def largest_component(g):
    """(sub-graph, original node IDs) of the largest connected component."""
    if g.node_count <= 1:
        return g, np.arange(g.node_count)
    _, labels = connected_components(g.adjacency_matrix(np.int8), directed=False)
    biggest = np.argmax(np.bincount(labels))
    nodes = np.flatnonzero(labels == biggest)
    if nodes.size == g.node_count:
        return g, nodes
    remap = np.full(g.node_count, -1, np.int64)
    remap[nodes] = np.arange(nodes.size)
    e = g.edges
    keep = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
    return Graph(nodes.size, remap[e[keep]]), nodes


def diameter(g):
    sub, _ = largest_component(g)
    hist = _distance_histogram(sub.indptr, sub.indices, np.arange(sub.node_count))
    return int(np.flatnonzero(hist)[-1])


# ---- structural metrics ------------------------------------------------------------------


@dataclass
class GraphMetrics:
    diameter: int
    avg_path_distance: float
    distance_histogram: np.ndarray = field(repr=False)
    clustering_coefficient: float
    powerlaw_exponent: float
    triangles: int = 0
    connected_triples: int = 0


def triangle_count(g):
    a = g.adjacency_matrix(np.int64)
    return int((a @ a).multiply(a).sum()) // 6


def powerlaw_exponent(degrees):
    """Continuous maximum-likelihood power-law exponent.

    Uses the smallest positive degree as the lower cutoff; nan when every
    positive degree equals the cutoff.
    """
    d = np.asarray(degrees, dtype=float)
    d = d[d > 0]
    if d.size == 0:
        return float("nan")
    s = np.log(d / d.min()).sum()
    return float(1.0 + d.size / s) if s > 0 else float("nan")


def compute_metrics(g, pair_sample=None, seed=0, quiet=False):
    """Diameter, APD, distance histogram, clustering and power-law exponent.

    Distances are measured on the largest connected component.  With
    ``pair_sample`` set (and smaller than the component) BFS runs only from
    that many seeded random sources, so diameter is then a lower estimate.
    """
    if g.node_count == 0:
        raise ParameterError("graph has no nodes")
    sub, _ = largest_component(g)
    if sub.node_count < g.node_count and not quiet:
        log.warning("distances measured on largest component (%d of %d nodes)", sub.node_count, g.node_count)
    sources = np.arange(sub.node_count)
    if pair_sample is not None and pair_sample < sub.node_count:
        rng = _rng.stream(seed, _rng.METRIC_SAMPLE, sub.node_count)
        sources = np.sort(rng.choice(sub.node_count, size=int(pair_sample), replace=False))
    hist = _distance_histogram(sub.indptr, sub.indices, sources)
    hist[0] = 0
    nz = np.flatnonzero(hist)
    diam = int(nz[-1]) if nz.size else 0
    hist = hist[: diam + 1].astype(float)
    total = hist.sum()
    if total > 0:
        hist /= total
        apd = float(np.dot(np.arange(diam + 1), hist))
    else:
        apd = 0.0

    tri = triangle_count(g)
    triples = int((g.degrees * (g.degrees - 1) // 2).sum())
    cc = 3.0 * tri / triples if triples else 0.0
    return GraphMetrics(
        diameter=diam,
        avg_path_distance=apd,
        distance_histogram=hist,
        clustering_coefficient=cc,
        powerlaw_exponent=powerlaw_exponent(g.degrees),
        triangles=tri,
        connected_triples=triples,
    )
