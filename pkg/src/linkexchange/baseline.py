"""Clear-form (alpha, beta)-exchange simulated with packed bit sets.

Every round is two-phase: all messages are prepared from the previous
round's snapshot, then merged.  Sampling randomness comes from a stream keyed
by ``(seed, sender, receiver, round)``, so results do not depend on the
order in which edges are visited.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from . import _bits, _rng
from ._validation import (
    ParameterError,
    check_fraction,
    check_graph,
    check_nonnegative,
    check_positive_int,
)
from .accounting import RoundMetrics, count_true_fake, message_bytes, normalized_volume, true_fake_ratio
from .graph import diameter
from .links import FakePairs, LinkRegistry, LinkSet, fake_quota, initial_views, register_initial_links

log = logging.getLogger(__name__)

FREQ_MEMORY_LIMIT = 2 * 2**30


@dataclass
class ProtocolConfig:
    alpha: float = 1.0
    beta: float = 0.5
    gamma: float = 1.0
    rounds: Optional[int] = None  # None: Diam(G)
    seed: int = 0
    track_freq: bool = False
    incremental: bool = False

    def validate(self):
        self.alpha = check_fraction(self.alpha, "alpha")
        self.beta = check_nonnegative(self.beta, "beta")
        self.gamma = check_fraction(self.gamma, "gamma")
        if self.rounds is not None:
            self.rounds = check_positive_int(self.rounds, "rounds")
        if self.incremental and self.alpha != 1.0:
            raise ParameterError("incremental exchange is only valid for alpha = 1")
        return self

    def resolve_rounds(self, g):
        return self.rounds if self.rounds is not None else max(1, diameter(g))


@dataclass
class NodeState:
    """One node's standing in an alpha = 1 incremental exchange."""

    view: LinkSet
    known_true: frozenset
    own_fakes: frozenset
    new_since_last: LinkSet

    @classmethod
    def initial(cls, node, registry, view):
        ids = view.ids()
        true = frozenset(int(i) for i in ids if registry.is_true[i])
        own = frozenset(int(i) for i in ids if registry.origin[i] == node)
        return cls(view.copy(), true, own, view.copy())


def incremental_exchange_step(state, neighbor_new_sets, alpha=1.0):
    """Merge what neighbors newly learned; the next message is only the fresh part."""
    if alpha != 1.0:
        raise ParameterError("incremental exchange requires alpha = 1")
    received = LinkSet(state.view.n_bits)
    for s in neighbor_new_sets:
        np.bitwise_or(received.bits, s.bits, out=received.bits)
    fresh = LinkSet(state.view.n_bits, received.bits & ~state.view.bits)
    view = LinkSet(state.view.n_bits, state.view.bits | received.bits, state.view.freq)
    if view.freq is not None:
        for s in neighbor_new_sets:
            view.freq[s.ids()] += 1
    return NodeState(view, state.known_true, state.own_fakes, fresh)


@dataclass
class ExchangeResult:
    registry: LinkRegistry
    view_matrix: np.ndarray
    metrics: list
    rounds: int
    freq: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)  # round -> {node: packed row}
    full_history: list = field(default_factory=list)  # round -> view matrix, when requested
    node_volumes: list = field(default_factory=list)  # round -> |L_u(t)| for every node

    @property
    def views(self):
        n_links = len(self.registry)
        return [
            LinkSet(n_links, self.view_matrix[u].copy(), self.freq.get(u))
            for u in range(self.view_matrix.shape[0])
        ]

    def view(self, u):
        return LinkSet(len(self.registry), self.view_matrix[u].copy(), self.freq.get(u))


class _Simulation:
    """Mutable state of one Baseline run."""

    def __init__(self, g, cfg, registry, views, tracked=(), observe=(), keep_full=False):
        self.g = g
        self.cfg = cfg
        self.tracked = sorted(set(int(u) for u in tracked))
        self.observe = sorted(set(int(u) for u in observe))
        self.keep_full = keep_full
        self.metrics = []
        self.history = {}
        self.full_history = []
        self.node_volumes = []
        self.selector = _bits.Selector()
        self._set_registry(registry, views)
        self.previous = None  # L(t-2), incremental mode only
        need = len(registry) * len(self.tracked) * 4
        if need > FREQ_MEMORY_LIMIT:
            raise ParameterError(
                f"tracking arrivals for {len(self.tracked)} nodes needs {need / 2**30:.1f} GiB; track fewer nodes"
            )
        self.freq = {u: np.zeros(len(registry), np.int32) for u in self.tracked}

    def _set_registry(self, registry, views):
        self.registry = registry
        self.n_links = len(registry)
        if isinstance(views, np.ndarray):
            self.views = views
        else:
            self.views = np.vstack([v.bits for v in views]) if views else _bits.empty_rows(0, self.n_links)
        self.true_row = _bits.pack(registry.is_true)
        self.group_of = np.ascontiguousarray(registry.a)
        self.group_size = np.zeros(self.g.node_count, np.int64)
        self.group_scratch = np.zeros(self.g.node_count, np.int64)

    # ---- bookkeeping ---------------------------------------------------------------------

    def record(self, t, bytes_sent=0, elapsed=0.0):
        true_total, fake_total = count_true_fake(self.views, self.true_row)
        self.metrics.append(
            RoundMetrics(
                round=t,
                true_links_total=true_total,
                fake_links_total=fake_total,
                normalized_volume=normalized_volume(
                    true_total + fake_total, self.g.node_count, self.g.edge_count, self.cfg.beta
                ),
                ratio=true_fake_ratio(true_total, fake_total),
                bytes_baseline=int(bytes_sent),
                wall_time_ms=int(round(elapsed * 1000)),
            )
        )
        self.node_volumes.append(np.bitwise_count(self.views).sum(axis=1, dtype=np.int64))
        if self.observe:
            self.history[t] = {u: self.views[u].copy() for u in self.observe}
        if self.keep_full:
            self.full_history.append(self.views.copy())

    # ---- one synchronous round -----------------------------------------------------------

    def exchange(self, t):
        start = time.perf_counter()
        prev = self.views
        new = prev.copy()
        if self.cfg.incremental:
            sent_rows = prev if self.previous is None else prev & ~self.previous
            bytes_sent = self._broadcast(sent_rows, new)
            self.previous = prev
        elif self.cfg.alpha == 1.0:
            bytes_sent = self._broadcast(prev, new)
        else:
            bytes_sent = self._sampled(prev, new, t)
        self.views = new
        return bytes_sent, time.perf_counter() - start

    def _broadcast(self, sent_rows, new):
        """Every node forwards ``sent_rows[u]`` whole to each neighbor."""
        g = self.g
        _bits.or_neighbors(sent_rows, g.indptr, g.indices, new)
        bytes_sent = 0
        for u in range(g.node_count):
            if g.degrees[u] == 0:
                continue
            ids = _bits.row_ids(sent_rows[u])
            if ids.size:
                per_msg = message_bytes(ids.size, _bits.distinct_sorted(self.group_of[ids]))
                bytes_sent += per_msg * int(g.degrees[u])
        for r in self.tracked:
            for v in g.neighbors(r):
                self.freq[r] += _bits.unpack(sent_rows[v], self.n_links)
        return bytes_sent

    def _sampled(self, prev, new, t):
        g, cfg = self.g, self.cfg
        tracked = set(self.tracked)
        bytes_sent = 0
        for u in range(g.node_count):
            if g.degrees[u] == 0:
                continue
            ids = _bits.row_ids(prev[u])
            n = ids.size
            k = _rng.round_half_up(cfg.alpha * n)
            if k == 0:
                continue
            groups_u = _bits.distinct_sorted(self.group_of[ids])
            sizes_filled = False
            for v in g.neighbors(u):
                rng = _rng.exchange_stream(cfg.seed, u, int(v), t)
                picks, dropped = self.selector.select(n, k, rng)
                chosen = ids[picks]
                if dropped:
                    msg = prev[u].copy()
                    _bits.clear_bits(msg, chosen)
                    if not sizes_filled:
                        _bits.fill_group_sizes(ids, self.group_of, self.group_size)
                        sizes_filled = True
                    groups = groups_u - _bits.groups_emptied(
                        chosen, self.group_of, self.group_size, self.group_scratch
                    )
                else:
                    msg = np.zeros_like(prev[u])
                    _bits.set_bits(msg, chosen)
                    groups = np.unique(self.group_of[chosen]).size
                np.bitwise_or(new[v], msg, out=new[v])
                bytes_sent += message_bytes(k, groups)
                if int(v) in tracked:
                    self.freq[int(v)] += _bits.unpack(msg, self.n_links)
            if sizes_filled:
                _bits.clear_group_sizes(ids, self.group_of, self.group_size)
        return bytes_sent

    # ---- utility-oriented second initialization stage ------------------------------------

    def second_stage_fakes(self, fakes, quota):
        """Add the per-node remainder ``quota`` of fakes toward nodes seen in ``L_u(1)``; re-index."""
        g, cfg = self.g, self.cfg
        old = self.registry
        for u in range(g.node_count):
            if quota[u] == 0:
                continue
            ids = _bits.row_ids(self.views[u])
            seen = np.unique(np.concatenate([old.a[ids], old.b[ids]]))
            rng = _rng.stream(cfg.seed, _rng.SECOND_STAGE, u)
            for w in fakes.draw_from(u, int(quota[u]), seen, rng):
                fakes.add(u, int(w))
        registry = LinkRegistry(g.node_count, g.edges, np.array(fakes.rows, np.int64).reshape(-1, 2))
        remap = registry.ids_of(np.column_stack([old.a, old.b]))
        new_views = _bits.empty_rows(g.node_count, len(registry))
        stage_one = set(map(tuple, np.column_stack([old.a, old.b]).tolist()))
        own = [[] for _ in range(g.node_count)]
        for i in np.flatnonzero(~registry.is_true):
            if (int(registry.a[i]), int(registry.b[i])) not in stage_one:
                own[registry.origin[i]].append(i)
        for u in range(g.node_count):
            ids = np.concatenate([remap[_bits.row_ids(self.views[u])], np.array(own[u], np.int64)])
            new_views[u] = _bits.ids_to_row(ids, len(registry))
        for r in self.tracked:
            f = np.zeros(len(registry), np.int32)
            f[remap] = self.freq[r]
            self.freq[r] = f
        for t, rows in self.history.items():
            for u, row in rows.items():
                rows[u] = _bits.ids_to_row(remap[_bits.row_ids(row)], len(registry))
        self.full_history = [
            np.vstack([_bits.ids_to_row(remap[_bits.row_ids(r)], len(registry)) for r in m])
            for m in self.full_history
        ]
        self._set_registry(registry, new_views)


def _initialize(g, cfg, tracked, observe, keep_full):
    """Registry and views at the start of the exchange loop; returns the next round to run."""
    if cfg.gamma < 1.0 and cfg.beta > 0:
        sim = _two_round(g, cfg, tracked, observe, keep_full)
        return sim, 2
    registry, views = register_initial_links(g, cfg.beta, 1.0, cfg.seed)
    sim = _Simulation(g, cfg, registry, views, tracked, observe, keep_full)
    sim.record(0)
    return sim, 1


def _two_round(g, cfg, tracked, observe, keep_full):
    fakes = FakePairs(g)
    total = fake_quota(g.degrees, cfg.beta, _rng.stream(cfg.seed, _rng.QUOTA, 0))
    if cfg.gamma >= 1.0:
        quota = total
    else:
        quota = np.minimum(fake_quota(g.degrees, cfg.gamma * cfg.beta, _rng.stream(cfg.seed, _rng.QUOTA, 1)), total)
    for u in range(g.node_count):
        rng = _rng.stream(cfg.seed, _rng.FAKE_INIT, u)
        for w in fakes.draw_uniform(u, int(quota[u]), rng):
            fakes.add(u, w)
    registry = LinkRegistry(g.node_count, g.edges, np.array(fakes.rows, np.int64).reshape(-1, 2))
    sim = _Simulation(g, cfg, registry, initial_views(g, registry), tracked, observe, keep_full)
    sim.record(0)
    bytes_sent, elapsed = sim.exchange(1)
    sim.second_stage_fakes(fakes, total - quota)
    sim.record(1, bytes_sent, elapsed)
    return sim


def run_baseline(g, cfg, *, tracked=(), observe=(), keep_history=False):
    """Simulate the clear-form exchange for ``cfg.rounds`` rounds (default Diam(G)).

    ``tracked`` nodes accumulate per-link arrival counts (needed by the
    frequency attack, and implied for every node by ``cfg.track_freq`` when
    no explicit list is given).  ``observe`` nodes have their view
    snapshotted after every round.
    """
    check_graph(g)
    cfg = ProtocolConfig(**vars(cfg)).validate()
    if cfg.track_freq and not tracked:
        tracked = range(g.node_count)
    rounds = cfg.resolve_rounds(g)
    sim, first = _initialize(g, cfg, tracked, observe, keep_history)
    for t in range(first, rounds + 1):
        bytes_sent, elapsed = sim.exchange(t)
        sim.record(t, bytes_sent, elapsed)
    return ExchangeResult(
        registry=sim.registry,
        view_matrix=sim.views,
        metrics=sim.metrics,
        rounds=rounds,
        freq=sim.freq,
        history=sim.history,
        full_history=sim.full_history,
        node_volumes=sim.node_volumes,
    )


def two_round_init(g, cfg):
    """Registry and every node's view at ``t = 1`` under two-round initialization."""
    check_graph(g)
    cfg = ProtocolConfig(**vars(cfg)).validate()
    sim = _two_round(g, cfg, (), (), False)
    return sim.registry, [LinkSet(sim.n_links, row.copy()) for row in sim.views]


class BaselineExchange(BaseEstimator):
    """Estimator-style front end to :func:`run_baseline`.

    ``fit(graph)`` runs the protocol; the fitted attributes are
    ``registry_``, ``views_`` (packed view matrix), ``metrics_`` and
    ``freq_``.
    """

    def __init__(self, alpha=1.0, beta=0.5, gamma=1.0, rounds=None, seed=0, track_freq=False, incremental=False):
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.rounds = rounds
        self.seed = seed
        self.track_freq = track_freq
        self.incremental = incremental

    def _config(self):
        return ProtocolConfig(**self.get_params())

    def fit(self, graph, y=None, tracked=(), observe=()):
        result = run_baseline(graph, self._config(), tracked=tracked, observe=observe)
        self.result_ = result
        self.registry_ = result.registry
        self.views_ = result.view_matrix
        self.metrics_ = result.metrics
        self.freq_ = result.freq
        self.rounds_ = result.rounds
        return self

    def transform(self, graph=None):
        """Final per-node views as :class:`LinkSet` objects."""
        if not hasattr(self, "result_"):
            raise ParameterError("BaselineExchange is not fitted yet")
        return self.result_.views
