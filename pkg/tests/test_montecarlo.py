from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gammaod import montecarlo as MC
from gammaod.diagnostics import exact_central_moments
from gammaod.errors import DomainError, UsageError
from gammaod.integrands import parse


def cfg(**kw):
    base = dict(integrand="const:1", t_schedule=(10.0, 100.0), replicates=400, master_seed=5)
    base.update(kw)
    return MC.ExperimentConfig(**base)


@pytest.mark.parametrize("bad", [dict(replicates=50), dict(epsilon=0.0), dict(mode="nope"),
                                 dict(t_schedule=()), dict(t_schedule=(-1.0,)),
                                 dict(integrand="nope"), dict(lag=0), dict(p_list=(0,)),
                                 dict(bridge_weights="mid")])
def test_config_validation(bad):
    with pytest.raises(DomainError):
        cfg(**bad)


def test_config_hash_and_round_trip():
    a = cfg(t_schedule="100,10")
    b = MC.ExperimentConfig.from_dict(a.to_dict())
    assert a.t_schedule == (10.0, 100.0)
    assert a.hash == b.hash and len(a.hash) == 64
    assert cfg(master_seed=6).hash != a.hash
    with pytest.raises(DomainError):
        MC.ExperimentConfig.from_dict({**a.to_dict(), "bogus": 1})


def test_wilson_interval():
    lo, hi = MC.wilson(0, 100)
    assert lo == 0.0 and 0.03 < hi < 0.04
    lo, hi = MC.wilson(50, 100)
    assert lo < 0.5 < hi


def test_ratio_mean_is_one():
    R, d = MC.simulate_ratios(parse("power:2"), cfg(replicates=2000))
    for j in range(R.shape[1]):
        v = exact_central_moments(parse("power:2"), d.nodes[d.record[j]], 2)[0]
        assert abs(R[:, j].mean() - 1) < 4 * math.sqrt(v / R.shape[0])


def test_jobs_do_not_change_results():
    c = cfg(replicates=300)
    a = MC.run_wlln(c, jobs=1)
    b = MC.run_wlln(c, jobs=4)
    assert a.to_json() == b.to_json() and a.to_csv() == b.to_csv()


@given(st.integers(0, 2**63))
def test_seed_determinism(seed):
    c = cfg(replicates=100, t_schedule=(3.0,), master_seed=seed)
    assert MC.run_wlln(c).to_json() == MC.run_wlln(c).to_json()


def test_report_formats():
    rep = MC.run_wlln(cfg())
    d = json.loads(rep.to_json())
    assert d["config_hash"] == cfg().hash
    assert set(d) >= {"estimates", "verdicts", "config"}
    header = rep.to_csv().splitlines()[0]
    assert header == "t,statistic,value,stderr,ci_low,ci_high"
    for e in rep.estimates:
        assert math.isfinite(e.stderr)
        if e.statistic.startswith("tail_prob"):
            assert 0 <= e.ci_low <= e.value <= e.ci_high <= 1


def test_wlln_constant_chebyshev():
    # P(|Gamma_100 / 100 - 1| > 0.3) is far below the Chebyshev bound 1/9
    rep = MC.run_wlln(cfg(t_schedule=(100.0,), epsilon=0.3, replicates=2000))
    assert rep.get("tail_prob", 100.0).value < 0.01
    m = rep.get("mean_sq_dev", 100.0)
    assert abs(m.value - 0.01) <= 3 * m.stderr


def test_wlln_exponential_does_not_vanish():
    rep = MC.run_wlln(cfg(integrand="pure_exp", t_schedule=(5.0, 10.0, 15.0), replicates=1000))
    _, p = rep.series("tail_prob")
    assert np.all(p > 0.5)
    assert rep.verdicts["wlln"] == "fails"


@pytest.mark.parametrize("ident,t", [("const:1", 10.0), ("power:1", 20.0)])
def test_lp_matches_exact_moments(ident, t):
    rep = MC.run_lp(cfg(integrand=ident, mode="lp", t_schedule=(t,), p_list=(2, 3, 4, 6),
                        replicates=4000))
    assert rep.verdicts["oracle_within_3se"] is True
    # f(x) = x: v_t = 4 / (3 t)
    if ident == "power:1":
        e = rep.get("central_moment_2", t)
        assert abs(e.value - 4 / (3 * t)) <= 3 * e.stderr


def test_lp_moments_shrink_together():
    rep = MC.run_lp(cfg(integrand="power:1", mode="lp", t_schedule=(5.0, 50.0, 500.0), p_list=(2, 4)))
    assert rep.verdicts["lp_2"] == "decreasing" and rep.verdicts["lp_4"] == "decreasing"


def test_slln_tail_sup_decreases():
    rep = MC.run_slln(cfg(mode="slln", t_schedule=MC.geometric_schedule(10, 4, 5), replicates=300))
    _, q = rep.series("tail_sup_q95")
    assert np.all(np.diff(q) <= 0)
    assert rep.verdicts["slln"] == "consistent"


def test_dist_limit_requires_exponential():
    with pytest.raises(UsageError):
        MC.run_dist_limit_exponential(cfg(mode="dist_limit"))


def test_dist_limit_small():
    rep = MC.run_dist_limit_exponential(cfg(integrand="pure_exp", mode="dist_limit",
                                            t_schedule=(10.0, 15.0), s_list=(0, 1), replicates=4000))
    assert rep.get("laplace_0", 15.0).value == 1.0
    z = rep.get("laplace_zscore_1", 15.0).value
    assert abs(z) <= 3
    assert rep.verdicts["ks_stable"] is True
    assert MC.laplace_target(1.0) == pytest.approx(math.exp(-math.pi ** 2 / 12), rel=1e-14)


@pytest.mark.parametrize("ident", ["power:1", "power:2", "inv_log:1", "recip", "const:1"])
def test_bridge_sandwich(ident):
    rep = MC.run_bridge(cfg(integrand=ident, mode="bridge", t_schedule=(20.5,), replicates=200))
    assert rep.get("sandwich_pass_rate").value == 1.0
    assert rep.get("max_slack").value <= rep.get("max_bracket_width").value + 1e-9
    assert rep.verdicts["sandwich"] == "holds"


def test_bridge_simple_form_increasing():
    rep = MC.run_bridge(cfg(integrand="power:1", mode="bridge", t_schedule=(50.5,), replicates=300))
    assert rep.get("simple_sandwich_pass_rate").value == 1.0


def test_bridge_requires_monotone():
    with pytest.raises(UsageError):
        MC.run_bridge(cfg(integrand="periodic:abs_sin", mode="bridge"))


def test_bridge_lag_two_agrees():
    ts = (10.5, 100.5, 1000.5)
    one = MC.run_bridge(cfg(integrand="power:1", mode="bridge", t_schedule=ts, replicates=300))
    two = MC.run_bridge(cfg(integrand="power:1", mode="bridge", t_schedule=ts, replicates=300, lag=2,
                            cells_per_unit=4))
    assert one.verdicts["wlln_discrete"] == two.verdicts["wlln_discrete"]
    assert two.verdicts["pipelines_agree"]


def test_mode_mismatch():
    with pytest.raises(UsageError):
        MC.run_lp(cfg())


def test_mc_grid_contains_schedule_and_grading():
    f = parse("periodic:spike:0.6666666666666666")
    nodes = MC.mc_grid(f, 3.0, extra=(1.7,), levels=5)
    assert 1.7 in nodes and nodes[0] == 0.0 and nodes[-1] == 3.0
    assert np.diff(nodes).min() == pytest.approx(MC.mc_step(f, 3.0) * 2.0 ** -5, rel=1e-9)
