"""Bloom filters over canonical link pairs, with bit erasure and compression."""

from __future__ import annotations

import hashlib
import math
import struct

import numpy as np

from . import _arith, _bits
from ._arith import DecodeError
from ._validation import ParameterError, check_fraction, check_positive_int, check_probability

HEADER = struct.Struct("<QBQQ")  # m, k, hash_seed, payload length
_PAIR = struct.Struct("<qq")
_MASK64 = (1 << 64) - 1


def plan_parameters(p, edge_count):
    """``(k, c, m)`` for target false-positive rate ``p`` over ``edge_count`` links."""
    p = check_probability(p, "p")
    k = max(1, math.ceil(-math.log2(p) - 1e-12))
    c = k / math.log(2)
    m = max(1, math.ceil(c * edge_count))
    return k, c, m


def _digest(a, b, hash_seed):
    h = hashlib.blake2b(_PAIR.pack(a, b), digest_size=16, key=struct.pack("<Q", hash_seed & _MASK64))
    d = h.digest()
    return int.from_bytes(d[:8], "little"), int.from_bytes(d[8:], "little")


def pair_positions(a, b, m, k, hash_seed=0):
    """Double hashing ``(h1 + i*h2) mod m`` from one 128-bit digest of the canonical pair."""
    if a > b:
        a, b = b, a
    h1, h2 = _digest(a, b, hash_seed)
    return np.array([(h1 + i * h2) % m for i in range(k)], dtype=np.int64)


def positions_for(pairs, m, k, hash_seed=0):
    """``(len(pairs), k)`` bit positions for many pairs at once."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    out = np.empty((len(pairs), k), dtype=np.int64)
    for row, (a, b) in enumerate(pairs.tolist()):
        out[row] = pair_positions(a, b, m, k, hash_seed)
    return out


class BloomFilter:
    """``m``-bit Bloom filter with ``k`` double-hashed probes."""

    __slots__ = ("m", "k", "hash_seed", "bits")

    def __init__(self, m, k, hash_seed=0, bits=None):
        self.m = check_positive_int(m, "m")
        self.k = check_positive_int(k, "k")
        if self.k > 255:
            raise ParameterError("k must fit in one byte")
        self.hash_seed = int(hash_seed) & _MASK64
        self.bits = np.zeros(_bits.n_words(self.m), np.uint64) if bits is None else bits

    @classmethod
    def for_rate(cls, p, edge_count, hash_seed=0):
        k, _, m = plan_parameters(p, edge_count)
        return cls(m, k, hash_seed)

    def __repr__(self):
        return f"BloomFilter(m={self.m}, k={self.k}, ones={self.count_ones()})"

    def __eq__(self, other):
        return (
            isinstance(other, BloomFilter)
            and self.params == other.params
            and np.array_equal(self.bits, other.bits)
        )

    @property
    def params(self):
        return (self.m, self.k, self.hash_seed)

    def copy(self):
        return BloomFilter(self.m, self.k, self.hash_seed, self.bits.copy())

    def positions(self, a, b):
        return pair_positions(a, b, self.m, self.k, self.hash_seed)

    def insert(self, a, b):
        _bits.set_bits(self.bits, self.positions(a, b))

    def insert_positions(self, positions):
        _bits.set_bits(self.bits, np.asarray(positions, dtype=np.int64).ravel())

    def query(self, a, b):
        return bool(self.contains_positions(self.positions(a, b)[None, :])[0])

    def __contains__(self, pair):
        return self.query(*pair)

    def contains_positions(self, positions):
        """Membership for each row of a ``(n, k)`` position array."""
        positions = np.asarray(positions, dtype=np.int64)
        words = self.bits[positions >> 6]
        hit = (words >> (positions & 63).astype(np.uint64)) & _bits.ONE
        return hit.astype(bool).all(axis=1)

    def count_ones(self):
        return int(_bits.popcount(self.bits))

    def to_bits(self):
        return _bits.unpack(self.bits, self.m)

    def fill_ratio(self):
        return self.count_ones() / self.m


def merge(a, b):
    """Bitwise OR of two filters with identical parameters."""
    if a.params != b.params:
        raise ParameterError(f"cannot merge filters with parameters {a.params} and {b.params}")
    return BloomFilter(a.m, a.k, a.hash_seed, a.bits | b.bits)


def erased_count(ones, alpha, k):
    """Bits to reset so a member survives with probability about ``alpha``."""
    return min(ones, int(math.floor(ones * (1.0 - alpha ** (1.0 / k)))))


def erase_bits(bf, alpha, rng, selector=None):
    """Copy of ``bf`` with ``floor(m1 * (1 - alpha**(1/k)))`` uniformly chosen 1-bits reset."""
    alpha = check_fraction(alpha, "alpha")
    out = bf.copy()
    ones = _bits.row_ids(bf.bits)
    m1 = ones.size
    s = erased_count(m1, alpha, bf.k)
    if s == 0:
        return out
    selector = selector or _bits.Selector(m1)
    picks, dropped = selector.select(m1, m1 - s, rng)
    if dropped:
        _bits.clear_bits(out.bits, ones[picks])
    else:
        out.bits[:] = 0
        _bits.set_bits(out.bits, ones[picks])
    return out


def compress(bf):
    """Wire bytes: little-endian header (m, k, hash_seed, payload length) + coded bits."""
    payload = _arith.encode_bits(bf.to_bits())
    return HEADER.pack(bf.m, bf.k, bf.hash_seed, len(payload)) + payload


def compressed_payload_size(bf):
    return len(_arith.encode_bits(bf.to_bits()))


def decompress(data):
    data = bytes(data)
    if len(data) < HEADER.size:
        raise DecodeError("stream shorter than header")
    m, k, hash_seed, length = HEADER.unpack_from(data)
    if m == 0 or k == 0:
        raise DecodeError("header carries an empty filter geometry")
    payload = data[HEADER.size :]
    if len(payload) != length:
        raise DecodeError(f"payload length {len(payload)} does not match header ({length})")
    bits = _arith.decode_bits(payload, m)
    return BloomFilter(m, k, hash_seed, _bits.pack(bits))


def expected_fp_rate(n, m, k):
    """``(1 - e^{-kn/m})^k``."""
    return (1.0 - math.exp(-k * n / m)) ** k


def exact_fp_rate(n, m, k):
    """``(1 - (1 - 1/m)^{kn})^k``."""
    return (1.0 - (1.0 - 1.0 / m) ** (k * n)) ** k
