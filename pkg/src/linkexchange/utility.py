"""Utility of noisy local views measured against a noise-free reference run."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _bits
from .graph import Graph, compute_metrics
from .links import LinkSet

UTILITY_COLUMNS = ("node", "round", "scheme", "rel_pl", "rel_cc", "rel_apd", "dist_l1")
EXACT_LINK_LIMIT = 100_000
SAMPLED_SOURCES = 1000
UNDEFINED = float("nan")


@dataclass
class UtilityReport:
    node: int
    round: int
    rel_err_pl: float
    rel_err_cc: float
    rel_err_apd: float
    distance_histogram_distance: float
    scheme: str = "baseline"

    def row(self):
        return [self.node, self.round, self.scheme, self.rel_err_pl, self.rel_err_cc,
                self.rel_err_apd, self.distance_histogram_distance]


def local_graph(ids, registry):
    """Graph whose edges are the view's links, over the nodes they mention (relabelled densely)."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        return None
    pairs = np.column_stack([registry.a[ids], registry.b[ids]])
    nodes, inverse = np.unique(pairs, return_inverse=True)
    return Graph(nodes.size, inverse.reshape(-1, 2))


def view_metrics(ids, registry, seed=0):
    """:class:`GraphMetrics` of the local subgraph, or ``None`` when it has no edges."""
    g = local_graph(ids, registry)
    if g is None:
        return None
    sample = SAMPLED_SOURCES if g.edge_count > EXACT_LINK_LIMIT else None
    return compute_metrics(g, pair_sample=sample, seed=seed, quiet=True)


def relative_error(x, reference):
    if not (math.isfinite(x) and math.isfinite(reference)):
        return UNDEFINED
    if reference == 0:
        return 0.0 if x == 0 else UNDEFINED
    return abs(x - reference) / abs(reference)


def histogram_distance(h1, h2):
    """L1 distance between two normalized distance histograms (zero-padded)."""
    n = max(len(h1), len(h2))
    a = np.zeros(n)
    b = np.zeros(n)
    a[: len(h1)] = h1
    b[: len(h2)] = h2
    return float(np.abs(a - b).sum())


def compare(metrics, reference):
    """``(rel_pl, rel_cc, rel_apd, dist_l1)``; undefined when either side is degenerate."""
    if metrics is None or reference is None:
        return (UNDEFINED,) * 4
    return (
        relative_error(metrics.powerlaw_exponent, reference.powerlaw_exponent),
        relative_error(metrics.clustering_coefficient, reference.clustering_coefficient),
        relative_error(metrics.avg_path_distance, reference.avg_path_distance),
        histogram_distance(metrics.distance_histogram, reference.distance_histogram),
    )


def sample_by_degree(g, count=100):
    """Evenly spaced ranks of the nodes sorted by decreasing degree (ties by ID)."""
    order = np.lexsort((np.arange(g.node_count), -g.degrees))
    if g.node_count <= count:
        return np.sort(order)
    ranks = np.unique(np.round(np.linspace(0, g.node_count - 1, count)).astype(np.int64))
    return np.sort(order[ranks])


def _ids(view):
    """Link IDs from a :class:`LinkSet`, a packed ``uint64`` row, or an ID array."""
    if isinstance(view, LinkSet):
        return view.ids()
    view = np.asarray(view)
    if view.dtype == np.uint64:
        return _bits.row_ids(view)
    return view.astype(np.int64)


def evaluate_utility(views, registry, reference_views, reference_registry, round_, scheme="baseline", seed=0):
    """One :class:`UtilityReport` per node in ``views`` (a mapping node -> view or packed row).

    Identical views share one metric computation, which matters once views
    have saturated to the whole noisy graph.
    """
    cache = {}

    def metrics_of(ids, reg, tag):
        key = (tag, ids.tobytes())
        if key not in cache:
            cache[key] = view_metrics(ids, reg, seed)
        return cache[key]

    reports = []
    for node in sorted(views):
        m = metrics_of(_ids(views[node]), registry, 0)
        ref = metrics_of(_ids(reference_views[node]), reference_registry, 1)
        pl, cc, apd, dist = compare(m, ref)
        reports.append(UtilityReport(int(node), int(round_), pl, cc, apd, dist, scheme))
    return reports


def mean_errors(reports):
    """Column means over reports, skipping undefined entries."""
    cols = np.array([[r.rel_err_pl, r.rel_err_cc, r.rel_err_apd, r.distance_histogram_distance] for r in reports])
    if cols.size == 0:
        return (UNDEFINED,) * 4
    out = []
    for c in cols.T:
        c = c[np.isfinite(c)]
        out.append(float(c.mean()) if c.size else UNDEFINED)
    return tuple(out)


def _fmt(x):
    return "nan" if not math.isfinite(x) else f"{x:.6f}"


def write_utility_csv(reports, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(UTILITY_COLUMNS)
        for r in sorted(reports, key=lambda r: (r.round, r.node)):
            w.writerow([r.node, r.round, r.scheme, _fmt(r.rel_err_pl), _fmt(r.rel_err_cc),
                        _fmt(r.rel_err_apd), _fmt(r.distance_histogram_distance)])
