"""Closed-form volume bounds, arrival-round predictions and convergence sums."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import ParameterError, check_fraction, check_graph, check_nonnegative
from .graph import bfs_distances

DENSE_LIMIT = 500


@dataclass
class AnalysisVector:
    """Per-node values (expected or bounding link counts) at one round."""

    round: int
    values: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.values.size

    def __getitem__(self, i):
        return self.values[i]


def _propagate(g, alpha, x, t):
    a = g.adjacency_matrix()
    for _ in range(t):
        x = x + alpha * (a @ x)
    return x


def upper_bound_lu(g, alpha, beta, t):
    """``(I + alpha A)^t (1 + beta) D`` by repeated sparse products."""
    check_graph(g)
    alpha = check_fraction(alpha, "alpha")
    beta = check_nonnegative(beta, "beta")
    if t < 0:
        raise ParameterError("t must be non-negative")
    x = (1.0 + beta) * g.degrees.astype(float)
    return AnalysisVector(int(t), _propagate(g, alpha, x, int(t)))


def rounding_slack(g, alpha, t):
    """Extra room for integer rounding on top of :func:`upper_bound_lu`.

    Fake quotas may round up by less than one link per node, and each
    ``round(alpha n)`` sample may round up by half a link per message.
    """
    check_graph(g)
    alpha = check_fraction(alpha, "alpha")
    a = g.adjacency_matrix()
    s = np.ones(g.node_count)
    per_round = 0.5 * g.degrees.astype(float) if alpha < 1.0 else np.zeros(g.node_count)
    for _ in range(int(t)):
        s = s + alpha * (a @ s) + per_round
    return AnalysisVector(int(t), s)


# ---- arrival rounds at alpha = 1 ----------------------------------------------------------


def true_link_arrival(dist, v, w):
    """Round at which each node first holds true link ``(v, w)``: ``min(d(u,v), d(u,w))``; -1 if never."""
    dv, dw = dist[:, v], dist[:, w]
    out = np.where(dv < 0, dw, np.where(dw < 0, dv, np.minimum(dv, dw)))
    return out


def fake_link_arrival(dist, origin):
    """Round at which each node first holds a fake link created by ``origin``: ``d(u, origin)``."""
    return dist[:, origin].copy()


def predicted_coverage_rounds(g):
    """``(true_round, full_round)``: first rounds at which every node holds every
    true link, and every link including fakes, of its component at alpha = 1.

    Streams one BFS per node, so memory stays linear in the graph size.
    """
    check_graph(g)
    v, w = g.edges[:, 0], g.edges[:, 1]
    true_round = full_round = 0
    for u in range(g.node_count):
        d = bfs_distances(g, u)
        if v.size:
            arrival = np.minimum(d[v], d[w])
            arrival = arrival[np.isfinite(arrival)]
            if arrival.size:
                true_round = max(true_round, int(arrival.max()))
        reach = d[np.isfinite(d) & (g.degrees > 0)]
        if reach.size:
            full_round = max(full_round, int(reach.max()))
    return true_round, max(true_round, full_round)


# ---- convergence sums for alpha < 1 -------------------------------------------------------


@dataclass
class ConvergenceCheck:
    """Whether the path-sum condition holds, per (true link, node) and per (fake origin, node)."""

    rounds: int
    true_links: np.ndarray  # (M, N) bool
    fake_origins: np.ndarray  # (N, N) bool: row = origin
    true_sums: np.ndarray
    origin_sums: np.ndarray

    @property
    def all_true(self):
        return bool(self.true_links.all())

    @property
    def all_fake(self):
        return bool(self.fake_origins.all())


def path_sums(g, alpha, rounds):
    """``S = sum_{t=1..T} (alpha A)^t`` as a dense matrix."""
    a = g.adjacency_matrix().toarray()
    step = alpha * a
    power = np.eye(g.node_count)
    total = np.zeros_like(power)
    for _ in range(int(rounds)):
        power = power @ step
        total += power
    return total


def check_convergence(g, alpha, rounds):
    """Evaluate the true-link and fake-link sum conditions on a small graph.

    Nodes already holding a link at round 0 (endpoints of a true link, the
    origin of a fake) satisfy the condition trivially.
    """
    check_graph(g)
    alpha = check_fraction(alpha, "alpha")
    if g.node_count > DENSE_LIMIT:
        raise ParameterError(f"convergence sums use dense powers; limited to {DENSE_LIMIT} nodes")
    s = path_sums(g, alpha, rounds)
    v, w = g.edges[:, 0], g.edges[:, 1]
    true_sums = s[v, :] + s[w, :]
    true_ok = true_sums >= 1.0
    rows = np.arange(len(g.edges))
    true_ok[rows, v] = True
    true_ok[rows, w] = True
    origin_ok = s >= 1.0
    np.fill_diagonal(origin_ok, True)
    return ConvergenceCheck(int(rounds), true_ok, origin_ok, true_sums, s)
