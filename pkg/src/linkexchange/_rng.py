"""Keyed random streams.

Every random decision in a run draws from a generator keyed by the master
seed plus a purpose tag and the identifiers of the actors involved, so the
outcome never depends on iteration order.
"""

import math

import numpy as np

FAKE_INIT = 1
EXCHANGE = 2
ERASURE = 3
TIE_BREAK = 4
SECOND_STAGE = 5
GRAPH = 6
METRIC_SAMPLE = 7
BLOOM_HASH = 8
QUOTA = 9


def stream(seed, tag, *keys):
    """Independent generator for ``(seed, tag, *keys)``; keys are nonnegative ints."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, tag, *map(int, keys)])


def exchange_stream(seed, sender, receiver, round_):
    return stream(seed, EXCHANGE, sender, receiver, round_)


def round_half_up(x):
    return int(math.floor(x + 0.5))
