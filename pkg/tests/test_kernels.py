from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from gammaod import _kernels as K
from gammaod.gamma_core import CounterRNG


def _philox(ctr, key):
    u = lambda x: np.uint32(x)  # noqa: E731
    out = K.philox4x32(*(u(c) for c in ctr), u(key[0]), u(key[1]))
    return tuple(int(x) for x in out)


# Known-answer vectors published with the Random123 library (philox4x32, 10 rounds).
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


@pytest.mark.parametrize("ctr,key,expected", KAT)
def test_philox_known_answers(ctr, key, expected):
    assert _philox(ctr, key) == expected


def test_split_key_round_trip():
    k0, k1 = K.split_key(0x0123456789ABCDEF)
    assert (int(k1) << 32) | int(k0) == 0x0123456789ABCDEF


@pytest.mark.parametrize("shape", [0.05, 0.2, 1.0, 3.7, 50.0])
def test_gamma_variates_match_scipy_law(shape):
    x = CounterRNG(seed=11, stream=3).gamma(shape, 20_000)
    res = stats.kstest(x, stats.gamma(shape).cdf)
    assert res.pvalue > 1e-3


def test_tiny_shape_mean():
    # most Gamma(1e-3) draws underflow towards 0, but the mean must survive
    x = CounterRNG(seed=5).gamma(1e-3, 200_000)
    assert np.all(x >= 0)
    assert abs(x.mean() - 1e-3) < 5 * np.sqrt(1e-3 / x.size)


@given(st.integers(0, 2**32 - 1), st.integers(0, 2**20), st.floats(0.01, 20))
def test_variate_is_pure_function_of_counter(cell, stream, shape):
    k0, k1 = K.split_key(99)
    tag = K.make_tag(K.PURPOSE_BASE, 0)
    a = K.gamma_variate(shape, cell, stream, tag, k0, k1)
    b = K.gamma_variate(shape, cell, stream, tag, k0, k1)
    assert a == b and a >= 0


def test_partial_sums_match_materialised_matrix():
    k0, k1 = K.split_key(7)
    shapes = np.full(50, 0.1)
    w = np.linspace(1, 2, 50)[None, :]
    streams = np.arange(4, dtype=np.int64)
    M = K.gamma_matrix(shapes, 0, streams, k0, k1)
    rec = np.array([0, 10, 50])
    S = K.weighted_partial_sums(shapes, w, rec, streams, k0, k1)
    np.testing.assert_allclose(S[:, 0, 1], M[:, :10] @ w[0, :10], rtol=1e-12)
    np.testing.assert_allclose(S[:, 0, 2], M @ w[0], rtol=1e-12)
    assert np.all(S[:, 0, 0] == 0)
