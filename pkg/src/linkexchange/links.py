"""Link identities, the global link registry and per-node link sets."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _bits, _rng
from ._validation import ParameterError, check_fraction, check_nonnegative

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Link:
    """Node pair stored canonically as ``a < b``; ``origin`` is set for fake links only."""

    a: int
    b: int
    origin: Optional[int] = None

    def __post_init__(self):
        if self.a == self.b:
            raise ParameterError(f"a link needs two distinct endpoints, got ({self.a}, {self.b})")
        if self.a > self.b:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)
        if self.origin is not None and self.origin not in (self.a, self.b):
            raise ParameterError("fake-link origin must be one of its endpoints")

    @property
    def is_true(self):
        return self.origin is None

    @property
    def target(self):
        if self.origin is None:
            return None
        return self.b if self.origin == self.a else self.a

    def __str__(self):
        if self.origin is None:
            return f"({self.a},{self.b})"
        return f"({self.origin}->{self.target})"


class LinkRegistry:
    """Dense integer IDs for every link of an experiment.

    IDs follow the lexicographic order of canonical pairs, so sorting link
    IDs and sorting pairs agree.
    """

    def __init__(self, node_count, true_pairs, fake_pairs):
        """``true_pairs``: (M, 2) edges; ``fake_pairs``: (F, 2) rows of ``(origin, target)``."""
        self.node_count = int(node_count)
        true_pairs = np.asarray(true_pairs, dtype=np.int64).reshape(-1, 2)
        fake_pairs = np.asarray(fake_pairs, dtype=np.int64).reshape(-1, 2)
        lo = np.concatenate([true_pairs.min(axis=1), fake_pairs.min(axis=1)])
        hi = np.concatenate([true_pairs.max(axis=1), fake_pairs.max(axis=1)])
        origin = np.concatenate([np.full(len(true_pairs), -1, np.int64), fake_pairs[:, 0]])
        keys = lo * self.node_count + hi
        order = np.argsort(keys, kind="stable")
        self.keys = keys[order]
        if np.any(np.diff(self.keys) == 0):
            raise ParameterError("duplicate link pair in registry")
        self.a = lo[order]
        self.b = hi[order]
        self.origin = origin[order]
        self.is_true = self.origin < 0
        self.true_count = int(len(true_pairs))
        self.fake_count = int(len(fake_pairs))
        for arr in (self.keys, self.a, self.b, self.origin, self.is_true):
            arr.flags.writeable = False

    def __len__(self):
        return self.keys.size

    def __repr__(self):
        return f"LinkRegistry(true={self.true_count}, fake={self.fake_count})"

    def link(self, i):
        o = int(self.origin[i])
        return Link(int(self.a[i]), int(self.b[i]), None if o < 0 else o)

    def id_of(self, u, v):
        ids = self.ids_of(np.array([[u, v]]))
        if ids[0] < 0:
            raise KeyError((u, v))
        return int(ids[0])

    def ids_of(self, pairs):
        """IDs of (possibly unordered) pairs; ``-1`` where unregistered."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        keys = pairs.min(axis=1) * self.node_count + pairs.max(axis=1)
        pos = np.searchsorted(self.keys, keys)
        pos_c = np.minimum(pos, max(len(self) - 1, 0))
        found = (pos < len(self)) & (self.keys[pos_c] == keys) if len(self) else np.zeros(len(keys), bool)
        return np.where(found, pos_c, -1)

    def incident(self, u):
        """Boolean mask of links with ``u`` as an endpoint."""
        return (self.a == u) | (self.b == u)

    def dump(self, path):
        with open(path, "w") as fh:
            for i in range(len(self)):
                kind = "true" if self.is_true[i] else "fake"
                fh.write(f"{i} {self.a[i]} {self.b[i]} {kind} {self.origin[i]}\n")


class LinkSet:
    """A node's view: membership bits over registry IDs plus optional arrival counts."""

    __slots__ = ("bits", "n_bits", "freq")

    def __init__(self, n_bits, bits=None, freq=None):
        self.n_bits = int(n_bits)
        self.bits = np.zeros(_bits.n_words(n_bits), np.uint64) if bits is None else bits
        self.freq = freq

    @classmethod
    def from_ids(cls, ids, n_bits, track_freq=False):
        s = cls(n_bits, _bits.ids_to_row(ids, n_bits))
        if track_freq:
            s.freq = np.zeros(n_bits, np.int64)
        return s

    def ids(self):
        return _bits.row_ids(self.bits)

    def mask(self):
        return _bits.unpack(self.bits, self.n_bits)

    def copy(self):
        return LinkSet(self.n_bits, self.bits.copy(), None if self.freq is None else self.freq.copy())

    def __len__(self):
        return int(_bits.popcount(self.bits))

    def __contains__(self, link_id):
        return bool((self.bits[link_id >> 6] >> np.uint64(link_id & 63)) & _bits.ONE)

    def __eq__(self, other):
        return isinstance(other, LinkSet) and self.n_bits == other.n_bits and np.array_equal(self.bits, other.bits)

    def __repr__(self):
        return f"LinkSet({len(self)} of {self.n_bits})"


def union_into(dst, src):
    """``dst |= src``; counts one arrival per link of ``src`` when ``dst`` tracks frequencies."""
    if dst.n_bits != src.n_bits:
        raise ParameterError("link sets belong to different registries")
    np.bitwise_or(dst.bits, src.bits, out=dst.bits)
    if dst.freq is not None:
        dst.freq[src.ids()] += 1
    return dst


def sample_alpha(s, alpha, rng, selector=None):
    """``round(alpha * |s|)`` links of ``s`` chosen uniformly without replacement."""
    alpha = check_fraction(alpha, "alpha")
    ids = s.ids()
    k = _rng.round_half_up(alpha * ids.size)
    if k >= ids.size:
        return LinkSet(s.n_bits, s.bits.copy())
    selector = selector or _bits.Selector(ids.size)
    keep = selector.subset(ids.size, k, rng)
    return LinkSet(s.n_bits, _bits.ids_to_row(ids[keep], s.n_bits))


# ---- fake link generation ----------------------------------------------------------------


class FakePairs:
    """Bookkeeping that keeps fake pairs distinct from true links and from each other."""

    def __init__(self, g):
        self.g = g
        self.partners = {}
        self.rows = []

    def add(self, origin, target):
        self.partners.setdefault(origin, set()).add(target)
        self.partners.setdefault(target, set()).add(origin)
        self.rows.append((origin, target))

    def excluded(self, u):
        ex = set(self.g.neighbors(u).tolist())
        ex.add(u)
        ex |= self.partners.get(u, set())
        return ex

    def draw_uniform(self, u, need, rng, also_excluded=()):
        """``need`` distinct uniform targets outside ``{u} + N(u)`` and existing partners."""
        if need <= 0:
            return []
        n = self.g.node_count
        excluded = self.excluded(u) | set(also_excluded)
        available = n - len(excluded)
        if need > available:
            raise ParameterError(
                f"node {u} needs {need} fake links but only {available} eligible targets exist"
            )
        if available < 4 * need or n < 256:
            cand = np.setdiff1d(np.arange(n), np.fromiter(excluded, np.int64, len(excluded)))
            return rng.choice(cand, size=need, replace=False).tolist()
        chosen = []
        seen = set(excluded)
        while len(chosen) < need:
            for w in rng.integers(0, n, size=2 * (need - len(chosen)) + 4).tolist():
                if w not in seen:
                    seen.add(w)
                    chosen.append(w)
                    if len(chosen) == need:
                        break
        return chosen

    def draw_from(self, u, need, candidates, rng):
        """Targets drawn from ``candidates`` first, uniform fallback for any shortfall."""
        if need <= 0:
            return []
        excluded = self.excluded(u)
        pool = np.array(sorted(set(int(c) for c in candidates) - excluded), dtype=np.int64)
        take = min(need, pool.size)
        chosen = rng.choice(pool, size=take, replace=False).tolist() if take else []
        if take < need:
            log.info("node %d: %d distance-2 candidates short, falling back to uniform targets", u, need - take)
            chosen += self.draw_uniform(u, need - take, rng, also_excluded=chosen)
        return chosen


def fake_quota(degrees, beta, rng=None):
    """Per-node fake counts: floor or ceil of ``beta * d_u``, totalling ``round(beta * sum(d))``.

    Largest-remainder apportionment; ties among equal remainders are broken
    with ``rng`` (lowest node IDs first when ``rng`` is None).
    """
    x = np.round(beta * np.asarray(degrees, dtype=float), 9)
    base = np.floor(x).astype(np.int64)
    frac = x - base
    extra = _rng.round_half_up(float(x.sum())) - int(base.sum())
    if extra > 0:
        tie = rng.random(x.size) if rng is not None else np.arange(x.size) / max(x.size, 1)
        order = np.lexsort((tie, -frac))
        base[order[:extra]] += 1
    return base


def register_initial_links(g, beta, gamma=1.0, seed=0, track_freq=False):
    """Registry and ``L_u(0)`` for every node.

    Node ``u`` keeps its ``d_u`` true links plus ``round(gamma * beta * d_u)``
    fake links to uniformly chosen non-neighbors.
    """
    beta = check_nonnegative(beta, "beta")
    gamma = check_fraction(gamma, "gamma")
    fakes = FakePairs(g)
    quota = fake_quota(g.degrees, gamma * beta, _rng.stream(seed, _rng.QUOTA, 0))
    for u in range(g.node_count):
        rng = _rng.stream(seed, _rng.FAKE_INIT, u)
        for w in fakes.draw_uniform(u, int(quota[u]), rng):
            fakes.add(u, w)
    registry = LinkRegistry(g.node_count, g.edges, np.array(fakes.rows, dtype=np.int64).reshape(-1, 2))
    return registry, initial_views(g, registry, track_freq)


def initial_views(g, registry, track_freq=False):
    """Each node's true incident links plus the fakes it originated."""
    n_links = len(registry)
    owner_ids = [[] for _ in range(g.node_count)]
    for i in np.flatnonzero(registry.is_true):
        owner_ids[registry.a[i]].append(i)
        owner_ids[registry.b[i]].append(i)
    for i in np.flatnonzero(~registry.is_true):
        owner_ids[registry.origin[i]].append(i)
    return [LinkSet.from_ids(np.array(ids, np.int64), n_links, track_freq) for ids in owner_ids]
