"""Adaptive quadrature helpers built on QUADPACK (``scipy.integrate.quad``).

Two additions over a plain ``quad`` call:

* log-space integration of ``exp(p * log f)`` on long intervals, so that
  integrands like ``exp(t / ln t)`` at ``t = 1e6`` do not overflow;
* graded (dyadic) subdivision toward an integrable endpoint singularity.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate as _si

from .errors import QuadratureError

DEFAULT_TOL = 1e-10
_MAX_PANELS = 4000


def _quad(func, a, b, epsrel, epsabs=0.0, limit=200):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _si.IntegrationWarning)
        val, err = _si.quad(func, a, b, epsrel=epsrel, epsabs=epsabs, limit=limit)
    return val, err


def integrate(func, a, b, points=(), epsrel=DEFAULT_TOL, epsabs=0.0):
    """``int_a^b func`` split at ``points``; returns ``(value, abserr)``.

    Raises QuadratureError when the reported error exceeds 100x the request.
    """
    if b <= a:
        return 0.0, 0.0
    cuts = [a] + sorted(p for p in points if a < p < b) + [b]
    total = 0.0
    abserr = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        v, e = _quad(func, lo, hi, epsrel, epsabs)
        total += v
        abserr += e
    if not math.isfinite(total) or abserr > max(100 * epsrel * abs(total), 100 * epsabs, 1e-300):
        raise QuadratureError(f"quad on [{a:g}, {b:g}] did not converge", abserr)
    return total, abserr


def integrate_graded(func, a, b, epsrel=DEFAULT_TOL, max_levels=200):
    """``int_a^b func`` for ``func`` with an integrable singularity at ``a``.

    Dyadic pieces ``[a + L 2^-(k+1), a + L 2^-k]`` are added until they become
    negligible.  Returns ``inf`` when the pieces stop shrinking (nonintegrable).
    """
    if b <= a:
        return 0.0
    length = b - a
    total = 0.0
    pieces = []
    for k in range(max_levels):
        hi = a + length * 2.0 ** -k
        lo = a + length * 2.0 ** -(k + 1)
        if lo <= a:
            break
        v, _ = _quad(func, lo, hi, epsrel)
        pieces.append(v)
        total += v
        if not math.isfinite(total):
            return math.inf
        if k >= 12:
            recent = pieces[-4:]
            if all(abs(p) <= 1e-3 * epsrel * abs(total) for p in recent):
                return total
            # power-law singularity: pieces settle into a geometric sequence
            if pieces[-2] > 0 and pieces[-3] > 0:
                r1, r2 = pieces[-1] / pieces[-2], pieces[-2] / pieces[-3]
            else:
                r1 = r2 = 1.0
            if 0 < r1 < 0.99 and abs(r1 - r2) <= 1e-9 * r1:
                return total + pieces[-1] * r1 / (1 - r1)
            if k >= 40:
                ratio = sum(pieces[-10:]) / max(sum(pieces[-20:-10]), 1e-300)
                if ratio >= 0.99:
                    return math.inf
    return total


def _logf_scalar(logf):
    def g(x):
        return float(logf(np.asarray(x, dtype=float)))
    return g


def _slope(logf, x, h):
    return (float(logf(np.asarray(x))) - float(logf(np.asarray(x - h)))) / h


def log_integrate(logf, a, b, p=1.0, monotone="none", points=(), epsrel=DEFAULT_TOL, rate=None):
    """``log int_a^b exp(p * logf(x)) dx`` with panels adapted to growth.

    ``monotone`` selects the anchoring: increasing integrands are integrated
    leftward from ``b`` (where the mass concentrates) and the scan stops once the
    remaining mass is negligible; decreasing ones rightward from ``a``.
    """
    if b <= a:
        return -math.inf
    lf = _logf_scalar(logf)
    if monotone in ("increasing", "constant"):
        m = p * lf(b)
        if not math.isfinite(m):
            raise QuadratureError(f"log f({b:g}) is not finite", math.nan)
        if rate is None:
            h = min(1e-3 * (b - a), 1e-3 * max(b, 1.0))
            rate = p * max(_slope(logf, b, h), 0.0)
        w = b - a if rate * (b - a) <= 1.0 else max(1.0 / rate, (b - a) * 1e-12)

        def g(x):
            return math.exp(p * lf(x) - m)

        total, right = 0.0, b
        for _ in range(_MAX_PANELS):
            left = max(a, right - w)
            v, _e = integrate(g, left, right, points=points, epsrel=epsrel)
            total += v
            if left <= a:
                break
            if g(left) * (left - a) < 1e-3 * epsrel * total:
                break
            right, w = left, 2.0 * w
        return m + math.log(total)

    if monotone == "decreasing":
        m = p * lf(a)
        if not math.isfinite(m):
            raise QuadratureError(f"log f({a:g}) is not finite", math.nan)

        def g(x):
            return math.exp(p * lf(x) - m)

        total, left, w = 0.0, a, min(1.0, b - a)
        for _ in range(_MAX_PANELS):
            right = min(b, left + w)
            v, _e = integrate(g, left, right, points=points, epsrel=epsrel)
            total += v
            if right >= b:
                break
            if total > 0 and g(right) * (b - right) < 1e-3 * epsrel * total:
                break
            left, w = right, 2.0 * w
        return m + math.log(total) if total > 0 else -math.inf

    # no monotonicity: scale by a coarse maximum, geometric panels per segment
    scan = np.unique(np.concatenate([
        np.linspace(a, b, 513),
        a + (b - a) * np.geomspace(1e-9, 1.0, 257),
        [x for x in points if a < x < b],
    ]))
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = p * np.asarray(logf(scan), dtype=float)
    vals = vals[np.isfinite(vals)]
    m = float(vals.max()) if vals.size else 0.0

    def g(x):
        v = p * lf(x) - m
        return math.exp(v) if v > -745.0 else 0.0

    cuts = [a] + sorted(x for x in points if a < x < b) + [b]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        left, w = lo, min(1.0, hi - lo)
        while left < hi:
            right = min(hi, left + w)
            v, _e = integrate(g, left, right, epsrel=epsrel)
            total += v
            left, w = right, 2.0 * w
    return m + math.log(total) if total > 0 else -math.inf


def gauss_legendre_cells(func, nodes, order=16):
    """Per-cell integrals of a smooth vectorised ``func`` over ``[nodes[k], nodes[k+1]]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    nodes = np.asarray(nodes, dtype=float)
    lo, hi = nodes[:-1], nodes[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * x[None, :]
    return (func(pts) * w[None, :]).sum(axis=1) * half
