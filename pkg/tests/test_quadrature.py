from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gammaod import quadrature as Q
from gammaod.errors import QuadratureError


def test_integrate_polynomial():
    v, err = Q.integrate(lambda x: x ** 3, 0.0, 2.0)
    assert v == pytest.approx(4.0, rel=1e-13)
    assert err < 1e-10


def test_integrate_splits_at_points():
    f = lambda x: 1.0 if x < 0.3 else 2.0  # noqa: E731
    v, _ = Q.integrate(f, 0.0, 1.0, points=(0.3,))
    assert v == pytest.approx(0.3 + 1.4, rel=1e-12)


def test_integrate_raises_when_hopeless():
    with pytest.raises(QuadratureError):
        Q.integrate(lambda x: math.sin(1.0 / x) / x ** 2, 1e-6, 1.0, epsrel=1e-12)


@pytest.mark.parametrize("beta", [0.3, 0.6, 0.9])
def test_graded_endpoint_singularity(beta):
    v = Q.integrate_graded(lambda x: x ** -beta, 0.0, 1.0)
    assert v == pytest.approx(1.0 / (1.0 - beta), rel=1e-8)


def test_graded_detects_nonintegrable():
    assert Q.integrate_graded(lambda x: 1.0 / x, 0.0, 1.0) == math.inf


@given(st.floats(0.05, 3.0), st.floats(5.0, 600.0))
def test_log_integrate_exponential_growth(c, b):
    # ln int_0^b e^{c x} dx, far beyond the overflow threshold of e^{c b} for large b
    got = Q.log_integrate(lambda x: c * np.asarray(x), 0.0, b, monotone="increasing", rate=c)
    exact = float(mp.log(mp.expm1(mp.mpf(c) * b) / c))
    assert got == pytest.approx(exact, rel=1e-10, abs=1e-10)


def test_log_integrate_with_power_p():
    # ln int_1^50 (x^2)^3 dx
    got = Q.log_integrate(lambda x: 2 * np.log(x), 1.0, 50.0, p=3.0, monotone="increasing")
    assert got == pytest.approx(math.log((50 ** 7 - 1) / 7), rel=1e-11)


def test_gauss_legendre_cells_exact_for_polynomials():
    nodes = np.array([0.0, 0.5, 2.0, 3.0])
    got = Q.gauss_legendre_cells(lambda x: x ** 5, nodes, order=8)
    np.testing.assert_allclose(got, np.diff(nodes ** 6) / 6, rtol=1e-13)
