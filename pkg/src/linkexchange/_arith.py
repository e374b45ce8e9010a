"""Adaptive binary arithmetic coder with a single context.

Probabilities come from running counts of zeros and ones, both starting at
one.  32-bit integer range coding with carry-less underflow handling.
"""

import numpy as np
from numba import njit

BITS = 32
FULL = (1 << BITS) - 1
HALF = 1 << (BITS - 1)
QUARTER = 1 << (BITS - 2)
MAX_TOTAL = 1 << 29  # keeps range // total >= 2 after renormalization


class DecodeError(ValueError):
    """Raised when a compressed stream is structurally inconsistent."""


@njit(cache=True)
def _emit(out, pos, bit):
    if bit:
        out[pos >> 3] |= np.uint8(1 << (7 - (pos & 7)))
    return pos + 1


@njit(cache=True)
def _encode(bits):
    n = bits.shape[0]
    out = np.zeros(n // 8 + 64, np.uint8)
    pos = 0
    low = np.int64(0)
    high = np.int64(FULL)
    pending = 0
    c0 = np.int64(1)
    c1 = np.int64(1)
    for i in range(n):
        total = c0 + c1
        span = high - low + 1
        split = low + span * c0 // total - 1
        if bits[i]:
            low = split + 1
            c1 += 1
        else:
            high = split
            c0 += 1
        if total + 1 > MAX_TOTAL:
            c0 = (c0 + 1) >> 1
            c1 = (c1 + 1) >> 1
        while True:
            if high < HALF:
                pos = _emit(out, pos, 0)
                for _ in range(pending):
                    pos = _emit(out, pos, 1)
                pending = 0
            elif low >= HALF:
                pos = _emit(out, pos, 1)
                for _ in range(pending):
                    pos = _emit(out, pos, 0)
                pending = 0
                low -= HALF
                high -= HALF
            elif low >= QUARTER and high < 3 * QUARTER:
                pending += 1
                low -= QUARTER
                high -= QUARTER
            else:
                break
            low = 2 * low
            high = 2 * high + 1
    pending += 1
    if low < QUARTER:
        pos = _emit(out, pos, 0)
        for _ in range(pending):
            pos = _emit(out, pos, 1)
    else:
        pos = _emit(out, pos, 1)
        for _ in range(pending):
            pos = _emit(out, pos, 0)
    return out[: (pos + 7) >> 3].copy()


@njit(cache=True)
def _read(data, pos):
    if (pos >> 3) < data.shape[0]:
        return (data[pos >> 3] >> (7 - (pos & 7))) & 1
    return 0


@njit(cache=True)
def _decode(data, n):
    out = np.zeros(n, np.uint8)
    pos = 0
    value = np.int64(0)
    for _ in range(BITS):
        value = 2 * value + _read(data, pos)
        pos += 1
    low = np.int64(0)
    high = np.int64(FULL)
    c0 = np.int64(1)
    c1 = np.int64(1)
    for i in range(n):
        total = c0 + c1
        span = high - low + 1
        split = low + span * c0 // total - 1
        if value > split:
            out[i] = 1
            low = split + 1
            c1 += 1
        else:
            high = split
            c0 += 1
        if total + 1 > MAX_TOTAL:
            c0 = (c0 + 1) >> 1
            c1 = (c1 + 1) >> 1
        while True:
            if high < HALF:
                pass
            elif low >= HALF:
                low -= HALF
                high -= HALF
                value -= HALF
            elif low >= QUARTER and high < 3 * QUARTER:
                low -= QUARTER
                high -= QUARTER
                value -= QUARTER
            else:
                break
            low = 2 * low
            high = 2 * high + 1
            value = 2 * value + _read(data, pos)
            pos += 1
        if value < low or value > high:
            return out, -1
    return out, pos


def encode_bits(bits):
    """Compress a 0/1 vector to bytes."""
    return _encode(np.ascontiguousarray(bits, dtype=np.uint8)).tobytes()


def decode_bits(payload, n):
    """Inverse of :func:`encode_bits` for a stream of ``n`` symbols."""
    data = np.frombuffer(payload, dtype=np.uint8)
    out, consumed = _decode(data, int(n))
    if consumed < 0:
        raise DecodeError("arithmetic decoder left its coding interval")
    # The decoder preloads one register and then reads one bit per bit the
    # encoder emitted, so a complete stream is never overrun.
    if consumed > BITS + 8 * data.size:
        raise DecodeError("compressed payload is truncated")
    return out
