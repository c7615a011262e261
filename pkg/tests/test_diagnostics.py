from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from gammaod import diagnostics as D
from gammaod.errors import DomainError, UsageError
from gammaod.integrands import make_counterexample_B_not_V, parse

AUDIT_TS = np.geomspace(2.0, 1e5, 64)


@given(st.floats(0.0, 4.0), st.floats(2.0, 1e5))
def test_series_power_closed_forms(alpha, t):
    s = D.diagnostic_series(parse(f"power:{alpha!r}"), [t])
    a1 = alpha + 1
    assert s.v[0] == pytest.approx(a1 ** 2 / ((2 * alpha + 1) * t), rel=1e-9)
    assert s.b[0] == pytest.approx(a1 / t, rel=1e-9)
    assert s.ell[0] == pytest.approx(((t - 1) / t) ** a1, rel=1e-9)
    assert s.d[0] == pytest.approx(a1 * (t + 1) ** alpha / t ** a1, rel=1e-9)
    assert s.h[0] == pytest.approx(alpha / t, rel=1e-12, abs=1e-300)


def test_series_exponential_is_flat():
    s = D.diagnostic_series(parse("pure_exp"), [10.0, 100.0, 700.0, 5000.0])
    np.testing.assert_allclose(s.v[-2:], 0.5, rtol=1e-9)
    np.testing.assert_allclose(s.b[-2:], 1.0, rtol=1e-9)
    np.testing.assert_allclose(s.ell[-1], math.exp(-1), rtol=1e-9)


def test_series_csv_header_and_rows():
    s = D.diagnostic_series(parse("power:1"), [10.0, 20.0])
    lines = s.to_csv().splitlines()
    assert lines[0] == "t,lambda,lambda2,v,b,ell,d,h"
    assert len(lines) == 3


def test_series_rejects_bad_schedule():
    with pytest.raises(DomainError):
        D.diagnostic_series(parse("power:1"), [0.5, 2.0])
    with pytest.raises(DomainError):
        D.diagnostic_series(parse("power:1"), [5.0, 2.0])


@given(st.floats(0.01, 5.0), st.floats(1.0, 1e4))
def test_laplace_deficit_constant(s, t):
    exact = t * math.log1p(s / t) - s
    assert D.laplace_deficit(parse("const:1"), t, s) == pytest.approx(exact, rel=1e-8, abs=1e-12)


def test_laplace_deficit_power_against_mpmath():
    t, s = 7.0, 2.0
    lam = t * t / 2
    exact = mp.quad(lambda x: mp.log(1 + s * x / lam), [0, t]) - s
    assert D.laplace_deficit(parse("power:1"), t, s) == pytest.approx(float(exact), rel=1e-9)


def test_laplace_limit_exponential():
    # -int_0^inf ln(1 + s e^-u) du = Li_2(-s)
    for s in (0.5, 1.0, 3.0):
        assert D.laplace_limit_exponential(s) == pytest.approx(float(mp.polylog(2, -s)), rel=1e-12)
    assert D.laplace_limit_exponential(1.0) == pytest.approx(-math.pi ** 2 / 12, rel=1e-14)


def _central_from_cumulants(k):
    k2, k3, k4, k5, k6 = k
    return [k2, k3, k4 + 3 * k2 ** 2, k5 + 10 * k3 * k2, k6 + 15 * k4 * k2 + 10 * k3 ** 2 + 15 * k2 ** 3]


@pytest.mark.parametrize("t", [1.0, 10.0, 100.0])
def test_exact_moments_constant_against_gamma_law(t):
    # R_t = Gamma(t) / t
    m, v, sk, ku = stats.gamma(t, scale=1 / t).stats(moments="mvsk")
    sd = math.sqrt(v)
    got = D.exact_central_moments(parse("const:1"), t, 4)
    np.testing.assert_allclose(got, [v, sk * sd ** 3, (ku + 3) * sd ** 4], rtol=1e-12)


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_exact_moments_power(alpha):
    t = 10.0
    # kappa_n = (n-1)! int f^n / (int f)^n
    lam = lambda n: t ** (n * alpha + 1) / (n * alpha + 1)  # noqa: E731
    k = [math.factorial(n - 1) * lam(n) / lam(1) ** n for n in range(2, 7)]
    np.testing.assert_allclose(D.exact_central_moments(parse(f"power:{alpha}"), t, 6),
                               _central_from_cumulants(k), rtol=1e-10)


MONOTONE = ["power:0.5", "power:1", "power:2", "exp_log_power:0.5", "exp_log_power:2",
            "exp_power:0.5", "exp_over_logpower:2", "exp_over_iterlog:2", "poly_times_exp:1",
            "pure_exp", "const:1", "inv_log:1", "inv_log:0.5", "inv_tlog:0.5", "inv_tlog:1",
            "recip", "from_b:const:1", "from_b:inv_sqrt"]


@pytest.mark.parametrize("ident", MONOTONE)
def test_inequality_audit_clean(ident):
    for entry in D.inequality_audit(parse(ident), AUDIT_TS):
        assert entry.max_violation <= 1e-9, entry


@given(st.sampled_from(["power", "exp_power", "inv_log", "inv_tlog"]), st.floats(0.1, 1.0))
def test_inequality_audit_property(family, param):
    f = parse(f"{family}:{param!r}")
    for entry in D.inequality_audit(f, np.geomspace(2.0, 1e4, 24)):
        assert entry.max_violation <= 1e-9, entry


def test_audit_family_c_only_for_b_constructions():
    names = [e.inequality for e in D.inequality_audit(parse("from_b:inv_sqrt"), AUDIT_TS, "c")]
    assert names
    with pytest.raises(UsageError):
        D.inequality_audit(parse("power:1"), AUDIT_TS, "c")
    with pytest.raises(UsageError):
        D.inequality_audit(parse("periodic:abs_sin"), AUDIT_TS)


@given(st.floats(-3.0, 3.0), st.floats(-2.0, 2.0), st.floats(0.1, 10.0))
def test_fit_rate_recovers_synthetic(a, e, c):
    t = np.geomspace(1e2, 1e6, 20)
    y = c * t ** a * np.log(t) ** e
    fit = D.fit_rate(t, y, "power_times_logpower")
    assert fit.exponent == pytest.approx(a, abs=1e-8)
    assert fit.log_exponent == pytest.approx(e, abs=1e-7)
    fixed = D.fit_rate(t, y, "power_times_logpower", fixed_exponent=a)
    assert fixed.log_exponent == pytest.approx(e, abs=1e-7)


def test_fit_rate_rejects_short_ranges():
    with pytest.raises(DomainError):
        D.fit_rate(np.linspace(1, 2, 20), np.ones(20))


def test_K2_exponential_against_quadrature():
    # K_2(x) = int_0^x u P(|X - 1| > u) du, X ~ Exp(1)
    tail = lambda u: mp.e ** (-(1 + u)) + (1 - mp.e ** (u - 1) if u < 1 else 0)  # noqa: E731
    for x in (0.3, 1.0, 4.0):
        exact = mp.quad(lambda u: u * tail(u), [0, min(x, 1), x] if x > 1 else [0, x])
        assert D.K2_exponential(x) == pytest.approx(float(exact), rel=1e-10)
    assert D.K2_exponential(math.inf) == pytest.approx(0.5)


def _verdicts(ident):
    return {c.criterion: c.verdict for c in D.classify_slln(parse(ident))}


def test_classifier_truth_set():
    assert _verdicts("power:1")["i"] == "holds"
    v = _verdicts("exp_power:0.5")
    assert v["i"] == "fails" and v["ii"] == "holds"
    assert _verdicts("exp_over_logpower:2")["ii"] == "holds"
    v = _verdicts("exp_over_logpower:0.5")
    assert v["ii"] == "fails" and v["slln"] == "undecided"
    with pytest.raises(UsageError):
        D.classify_slln(parse("pure_exp"))
    assert D.classify_wlln(parse("pure_exp")).verdict == "fails"


def test_bounded_integrand_slln():
    v = _verdicts("inv_log:1")
    assert v["bounded"] == "holds" and v["slln"] == "holds"


def test_classifier_verdict_serialises():
    d = D.classify_wlln(parse("power:1")).to_dict()
    assert d["verdict"] == "holds" and isinstance(d["witness"]["final_v"], float)


def test_lnF_concavity():
    assert D.is_lnF_concave(parse("power:1"), np.geomspace(2, 1e4, 16)).verdict == "holds"
    assert D.is_lnF_concave(parse("fstar:power:1@arith:2:1"), np.geomspace(2, 1e4, 16)).verdict == "fails"


def test_counterexample_in_V_not_B():
    f = make_counterexample_B_not_V(256)
    m = D.class_membership(f, f.nodes[f.nodes > 1], subsequence=f.nodes[f.K - 1][1:])
    assert not m["B"]
    assert m["b_sub_min"] >= 0.5


def test_a5_table_plain_rows():
    cells = D.a5_table(rows=D.CLAIMED_ROWS[:1] + D.CLAIMED_ROWS[-1:])
    assert all(c["pass"] for c in cells)
    assert {c["integrand"] for c in cells} == {"power:2", "pure_exp"}
