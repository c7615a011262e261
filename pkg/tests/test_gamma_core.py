from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from gammaod import gamma_core as G
from gammaod.errors import DomainError, UsageError
from gammaod.integrands import parse


def test_default_step():
    assert G.default_step(1e6) == 0.01
    assert G.default_step(10.0) == pytest.approx(1e-3)


def test_uniform_grid_with_partial_cell():
    g = G.Grid.uniform(1.05, 0.1)
    assert g.horizon == pytest.approx(1.05)
    assert g.n_cells == 11
    assert g.depths[-1] == 1 and g.cell_ids[-1] == 20
    assert not g.nodes.flags.writeable


@pytest.mark.parametrize("nodes", [[0.0], [1.0, 2.0], [0.0, 1.0, 1.0], [0.0, np.inf]])
def test_bad_grids(nodes):
    with pytest.raises(DomainError):
        G.Grid(np.array(nodes))


def test_increment_law():
    # unit cells: Gamma(1) increments; one path of 20000 cells
    path = G.sample_increments(G.Grid.uniform(20_000.0, 1.0), seed=3)
    assert stats.kstest(path.deltas, "expon").pvalue > 1e-3
    assert path.total == pytest.approx(path.deltas.sum())


def test_same_seed_same_path_and_streams_differ():
    g = G.Grid.uniform(5.0, 0.01)
    a = G.sample_increments(g, 1, stream=0)
    b = G.sample_increments(g, 1, stream=0)
    c = G.sample_increments(g, 1, stream=1)
    assert np.array_equal(a.deltas, b.deltas)
    assert not np.array_equal(a.deltas, c.deltas)


@given(st.floats(0.3, 20.0), st.floats(0.05, 20.0), st.sampled_from([0.01, 0.1, 0.7]),
       st.integers(0, 2**40))
def test_extension_keeps_existing_cells(t1, dt, h, seed):
    g1 = G.Grid.uniform(t1, h)
    p1 = G.sample_increments(g1, seed)
    p2 = G.extend_path(p1, t1 + dt)
    n = p1.grid.n_cells
    # every completed cell of the short path survives verbatim
    full = p1.grid.depths[:n] == 0
    assert np.array_equal(p2.deltas[:n][full], p1.deltas[full])
    assert p2.mass(0.0, t1) == pytest.approx(p1.total, rel=1e-12, abs=1e-300)
    # whole lattice cells coincide with a direct draw to the longer horizon
    direct = G.sample_increments(G.Grid.uniform(t1 + dt, h), seed)
    a = {int(i): x for i, d, x in zip(p2.grid.cell_ids, p2.grid.depths, p2.deltas) if d == 0}
    b = {int(i): x for i, d, x in zip(direct.grid.cell_ids, direct.grid.depths, direct.deltas) if d == 0}
    common = a.keys() & b.keys()
    assert len(common) >= min(len(a), len(b)) - 2
    assert all(a[i] == b[i] for i in common)
    # a lattice cell split by t1 has children summing to the direct parent draw
    kids = {}
    for i, d, x in zip(p2.grid.cell_ids, p2.grid.depths, p2.deltas):
        if d == 1:
            kids[int(i) // 2] = kids.get(int(i) // 2, 0.0) + x
    for parent, mass in kids.items():
        if parent in b and (2 * parent in p2.grid.cell_ids) and (2 * parent + 1 in p2.grid.cell_ids):
            assert mass == pytest.approx(b[parent], rel=1e-12)

@given(st.integers(1, 3), st.integers(0, 2**30))
def test_refine_preserves_masses(levels, seed):
    p = G.sample_increments(G.Grid.uniform(3.0, 0.25), seed)
    r = G.refine(p, levels)
    assert r.grid.n_cells == p.grid.n_cells * 2 ** levels
    coarse = r.deltas.reshape(p.grid.n_cells, 2 ** levels).sum(axis=1)
    np.testing.assert_allclose(coarse, p.deltas, rtol=1e-12)
    assert np.all(r.deltas >= 0)


def test_refined_halves_have_beta_law():
    # each half of a Gamma(a) cell carries a Beta(a/2, a/2) fraction of its mass
    p = G.sample_increments(G.Grid.uniform(4000.0, 1.0), 8)
    r = G.refine(p, 1)
    frac = r.deltas[0::2] / p.deltas
    assert stats.kstest(frac, stats.beta(0.5, 0.5).cdf).pvalue > 1e-3


def test_split_increment_conserves():
    rng = G.CounterRNG(4)
    a, b = G.split_increment(2.5, 0.3, 0.7, rng)
    assert a + b == pytest.approx(2.5) and a >= 0 and b >= 0


@pytest.mark.parametrize("ident", ["power:1", "pure_exp", "recip", "inv_log:1"])
def test_bracket_contains_estimates(ident):
    f = parse(ident)
    p = G.sample_increments(G.Grid.uniform(8.0, 0.05), 5)
    br = G.integral_bracket(f, p)
    assert G.integral_estimate(f, p, "midpoint") in br
    assert G.integral_estimate(f, p, "average") in br
    assert br.width >= 0


def test_bracket_refuses_non_monotone():
    f = parse("periodic:abs_sin")
    p = G.sample_increments(G.Grid.uniform(2.0, 0.1), 1)
    with pytest.raises(UsageError):
        G.integral_bracket(f, p)
    assert G.integral_bracket(f, p, override=True).width >= 0


def test_mass_additivity():
    p = G.sample_increments(G.Grid.uniform(10.0, 0.5), 2)
    assert p.mass(0, 4) + p.mass(4, 10) == pytest.approx(p.total)


def test_integral_mean_and_variance():
    # E Gamma_t f = lambda_t f and Var = lambda_t f^2 for f(x) = x on [0, 2]
    f = parse("power:1")
    vals = [G.integral_estimate(f, G.sample_increments(G.Grid.uniform(2.0, 0.02), 17, s), "average")
            for s in range(3000)]
    assert np.mean(vals) == pytest.approx(2.0, abs=4 * math.sqrt(8 / 3 / 3000))
    assert np.var(vals) == pytest.approx(8 / 3, rel=0.1)


def test_lphi_membership():
    r = G.lphi_membership(parse("exp_decay:1"))
    assert r == "member"
    # int_0^inf ln(1 + e^-x) dx = pi^2 / 12
    assert r.integral == pytest.approx(math.pi ** 2 / 12, rel=1e-8)
    assert G.lphi_membership(parse("power:1")) == "non-member"
    assert G.lphi_membership(parse("recip")) == "non-member"
    assert G.lphi_membership(parse("periodic:abs_sin")) == "non-member"


def test_graded_grid_refines_near_singularities():
    g = G.Grid.graded(3.0, 0.1, singular_points=(0.0, 1.0, 2.0), levels=10)
    assert g.widths.min() == pytest.approx(0.1 * 2 ** -10)
