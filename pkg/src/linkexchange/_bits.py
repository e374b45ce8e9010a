"""Packed bit-array helpers and the compiled kernels behind the simulators.

Bit ``i`` of a packed row lives in word ``i >> 6`` at position ``i & 63``
(little-endian), so ``np.unpackbits(row.view(np.uint8), bitorder="little")``
recovers the boolean membership vector on little-endian hosts.
"""

import numpy as np
from numba import njit

ONE = np.uint64(1)


def n_words(n_bits):
    return max(1, (int(n_bits) + 63) // 64)


def empty_rows(n_rows, n_bits):
    return np.zeros((n_rows, n_words(n_bits)), dtype=np.uint64)


def unpack(row, n_bits):
    return np.unpackbits(row.view(np.uint8), bitorder="little", count=n_bits).astype(bool)


def pack(mask):
    """Pack a boolean vector into uint64 words."""
    mask = np.asarray(mask, dtype=bool)
    padded = np.zeros(n_words(mask.size) * 64, dtype=bool)
    padded[: mask.size] = mask
    return np.packbits(padded, bitorder="little").view(np.uint64).copy()


def row_ids(row):
    """Sorted indices of set bits."""
    return np.flatnonzero(np.unpackbits(row.view(np.uint8), bitorder="little"))


def ids_to_row(ids, n_bits):
    mask = np.zeros(n_words(n_bits) * 64, dtype=bool)
    mask[np.asarray(ids, dtype=np.int64)] = True
    return np.packbits(mask, bitorder="little").view(np.uint64).copy()


def popcount(rows):
    """Set-bit count per row (or for a single row)."""
    return np.bitwise_count(rows).sum(axis=-1, dtype=np.int64)


@njit(cache=True)
def partial_shuffle(n, uniforms, perm):
    """First ``len(uniforms)`` picks of a Fisher-Yates shuffle of ``range(n)``.

    ``perm`` must hold the identity permutation on entry (length >= n); it is
    restored before returning so the scratch buffer can be reused.
    """
    c = uniforms.shape[0]
    picks = np.empty(c, np.int64)
    swaps = np.empty(c, np.int64)
    for i in range(c):
        j = i + np.int64(uniforms[i] * (n - i))
        if j >= n:
            j = n - 1
        swaps[i] = j
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
        picks[i] = perm[i]
    for i in range(c - 1, -1, -1):
        j = swaps[i]
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return picks


@njit(cache=True)
def clear_bits(row, ids):
    for i in ids:
        row[i >> 6] &= ~(ONE << np.uint64(i & 63))


@njit(cache=True)
def set_bits(row, ids):
    for i in ids:
        row[i >> 6] |= ONE << np.uint64(i & 63)


@njit(cache=True)
def or_neighbors(src, indptr, indices, dst):
    """``dst[v] |= OR of src[w] for w in N(v)`` for every node ``v``."""
    n, w = src.shape
    for v in range(n):
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            for k in range(w):
                dst[v, k] |= src[u, k]


@njit(cache=True)
def groups_emptied(dropped, group_of, group_size, scratch):
    """How many groups lose every member when ``dropped`` ids are removed."""
    emptied = 0
    for i in dropped:
        g = group_of[i]
        scratch[g] += 1
        if scratch[g] == group_size[g]:
            emptied += 1
    for i in dropped:
        scratch[group_of[i]] = 0
    return emptied


@njit(cache=True)
def fill_group_sizes(ids, group_of, group_size):
    for i in ids:
        group_size[group_of[i]] += 1


@njit(cache=True)
def clear_group_sizes(ids, group_of, group_size):
    for i in ids:
        group_size[group_of[i]] = 0


def distinct_sorted(values):
    """Distinct count of a nondecreasing integer sequence."""
    if len(values) == 0:
        return 0
    return int(np.count_nonzero(np.diff(values))) + 1


class Selector:
    """Uniform fixed-size subset selection over ``range(n)``.

    The complement is drawn when it is the smaller side, so the cost is
    ``min(k, n - k)`` draws.  ``select`` returns ``(positions, dropped)``:
    when ``dropped`` is true the positions are the ones left out.
    """

    def __init__(self, capacity=0):
        self._perm = np.arange(max(capacity, 16), dtype=np.int64)

    def _reserve(self, n):
        if n > self._perm.size:
            self._perm = np.arange(max(n, 2 * self._perm.size), dtype=np.int64)

    def select(self, n, k, rng):
        k = min(max(k, 0), n)
        dropped = k > n - k
        take = n - k if dropped else k
        if take == 0:
            return np.empty(0, dtype=np.int64), dropped
        self._reserve(n)
        return partial_shuffle(n, rng.random(take), self._perm), dropped

    def subset(self, n, k, rng):
        """Sorted kept positions."""
        picks, dropped = self.select(n, k, rng)
        if not dropped:
            return np.sort(picks)
        keep = np.ones(n, dtype=bool)
        keep[picks] = False
        return np.flatnonzero(keep)
