"""Compiled kernels: Philox4x32-10 counters and Gamma(shape, 1) variates.

Every variate is a pure function of ``(key, cell, stream, purpose, depth,
shape)``; the attempt number of the rejection loop occupies the third counter
word.  Nothing is carried between cells, so any subset of cells can be drawn in
any order (or in parallel) with identical results.
"""
import math

import numba as nb
import numpy as np

PURPOSE_BASE = 0
PURPOSE_SPLIT_LEFT = 1
PURPOSE_SPLIT_RIGHT = 2
PURPOSE_SCALAR = 3

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_LO = np.uint64(0xFFFFFFFF)
_SH = np.uint64(32)
_INV32 = 2.0 ** -32


def split_key(seed):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.uint32(seed & 0xFFFFFFFF), np.uint32(seed >> 32)


@nb.njit(inline="always", cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = _M0 * np.uint64(c0)
        p1 = _M1 * np.uint64(c2)
        n0 = np.uint32(p1 >> _SH) ^ c1 ^ k0
        n2 = np.uint32(p0 >> _SH) ^ c3 ^ k1
        c1 = np.uint32(p1 & _LO)
        c3 = np.uint32(p0 & _LO)
        c0 = n0
        c2 = n2
        k0 = np.uint32(k0 + _W0)
        k1 = np.uint32(k1 + _W1)
    return c0, c1, c2, c3


@nb.njit(inline="always", cache=True)
def _unit(r):
    # open interval (0, 1)
    return (np.float64(r) + 0.5) * _INV32


@nb.njit(cache=True)
def gamma_variate(shape, cell, stream, tag, k0, k1):
    """Marsaglia-Tsang squeeze/rejection on ``shape`` (on ``shape + 1`` with a
    ``U**(1/shape)`` boost when ``shape < 1``)."""
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    c0 = np.uint32(cell & 0xFFFFFFFF)
    c1 = np.uint32(stream & 0xFFFFFFFF)
    attempt = np.uint32(0)
    while True:
        r0, r1, r2, r3 = philox4x32(c0, c1, attempt, tag, k0, k1)
        attempt += np.uint32(1)
        x = math.sqrt(-2.0 * math.log(_unit(r0))) * math.cos(2.0 * math.pi * _unit(r1))
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _unit(r2)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2 or math.log(u) < 0.5 * x2 + d * (1.0 - v + math.log(v)):
            g = d * v
            if boost:
                g = math.exp(math.log(g) + math.log(_unit(r3)) / shape)
            return g


@nb.njit(inline="always", cache=True)
def make_tag(purpose, depth):
    return np.uint32((purpose << 24) | (depth & 0xFFFFFF))


@nb.njit(nogil=True, cache=True)
def gamma_cells(shapes, cells, depths, stream, purpose, k0, k1):
    n = shapes.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = gamma_variate(shapes[i], cells[i], stream, make_tag(purpose, depths[i]), k0, k1)
    return out


@nb.njit(nogil=True, cache=True)
def gamma_matrix(shapes, first_cell, streams, k0, k1):
    """Base-depth draws for consecutive cells ``first_cell + j`` on each stream."""
    n = shapes.shape[0]
    m = streams.shape[0]
    out = np.empty((m, n))
    tag = make_tag(PURPOSE_BASE, 0)
    for r in range(m):
        for j in range(n):
            out[r, j] = gamma_variate(shapes[j], first_cell + j, streams[r], tag, k0, k1)
    return out


@nb.njit(nogil=True, cache=True)
def weighted_partial_sums(shapes, weights, record_after, streams, k0, k1):
    """Running sums ``sum_k weights[i, k] * delta_k`` read off after
    ``record_after[j]`` cells, without materialising the increments.

    Returns an array of shape ``(len(streams), n_weights, len(record_after))``.
    """
    n = shapes.shape[0]
    nw = weights.shape[0]
    nr = record_after.shape[0]
    m = streams.shape[0]
    out = np.zeros((m, nw, nr))
    acc = np.zeros(nw)
    tag = make_tag(PURPOSE_BASE, 0)
    for r in range(m):
        acc[:] = 0.0
        j = 0
        while j < nr and record_after[j] == 0:
            j += 1
        for k in range(n):
            delta = gamma_variate(shapes[k], k, streams[r], tag, k0, k1)
            for i in range(nw):
                acc[i] += weights[i, k] * delta
            while j < nr and record_after[j] == k + 1:
                for i in range(nw):
                    out[r, i, j] = acc[i]
                j += 1
    return out
