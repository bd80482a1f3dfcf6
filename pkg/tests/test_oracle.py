"""Exact and grid oracles, pinned against hand-solved instances.

The Braess numbers below come from solving the equal-cost support systems
with exact rational arithmetic: the pure-human baseline puts flow
(0, 35/103, 45/103, 0, 23/103) at common cost 1294/103, and at alpha = 0.3
the split supports give (0, 41/150, 64/150, 0, 45/150).
"""

import numpy as np
import pytest

from mixeq.costs import CostParams
from mixeq.errors import (
    GridBudgetExceeded,
    PathBudgetExceeded,
    RequiresLinearCosts,
)
from mixeq.netmodel import Link, Network, declared_path_set, incidence_matrix
from mixeq.oracle import exact_baseline, exact_mixed, grid_gap_oracle
from mixeq.solver import FlowPattern, vi_gap


def braess(k6=7.0, b6=11.0):
    k = [10.0, 5.0, 2.0, 5.0, 3.0, k6]
    b = [1.0, 8.0, 7.0, 1.0, 1.0, b6]
    ends = [("S", "A"), ("A", "T"), ("S", "B"), ("B", "T"), ("A", "B"), ("S", "T")]
    links = tuple(
        Link(id=str(i + 1), tail=t, head=h, cost=CostParams(k=k[i], b=b[i]))
        for i, (t, h) in enumerate(ends)
    )
    net = Network(nodes=frozenset("SABT"), links=links, origin="S", destination="T")
    paths = declared_path_set(
        net, (("1", "2"), ("3", "4"), ("1", "5", "4"), ("3", "5", "2"), ("6",))
    )
    return net, incidence_matrix(net, paths)


def parallel(k, b, n=None):
    n = n or [1.0] * len(k)
    links = tuple(
        Link(id=f"l{i}", tail="o", head="d", cost=CostParams(k=k[i], b=b[i], n=n[i]))
        for i in range(len(k))
    )
    net = Network(nodes=frozenset({"o", "d"}), links=links, origin="o",
                  destination="d")
    paths = declared_path_set(net, tuple((f"l{i}",) for i in range(len(k))))
    return net, incidence_matrix(net, paths)


# --- baseline ---

def test_braess_baseline_frozen():
    net, delta = braess()
    eq = exact_baseline(net, delta)
    np.testing.assert_allclose(
        eq.x_agg, [0.0, 35 / 103, 45 / 103, 0.0, 23 / 103], atol=1e-12)
    assert eq.lambda_h == pytest.approx(1294 / 103, abs=1e-12)
    assert eq.support.v_a == frozenset()
    assert eq.support.v_h == frozenset({1, 2, 4})
    x_h, x_a = eq.split_witness
    np.testing.assert_array_equal(x_a, np.zeros(5))
    np.testing.assert_allclose(x_h, eq.x_agg, atol=1e-15)


def test_deterioration_variant_baseline_frozen():
    net, delta = braess(k6=1.0, b6=18.3)
    eq = exact_baseline(net, delta)
    np.testing.assert_allclose(
        eq.x_agg, [1 / 31, 49 / 93, 41 / 93, 0.0, 0.0], atol=1e-12)
    assert eq.lambda_h == pytest.approx(1292 / 93, abs=1e-12)
    assert eq.support.v_h == frozenset({0, 1, 2})


def test_two_link_baseline():
    net, delta = parallel([1.0, 1.0], [0.0, 1.5])
    eq = exact_baseline(net, delta)
    np.testing.assert_allclose(eq.x_agg, [1.0, 0.0], atol=1e-14)
    assert eq.lambda_h == pytest.approx(1.0)


# --- mixed ---

def test_braess_mixed_alpha03_frozen():
    net, delta = braess()
    eq = exact_mixed(net, delta, 0.3)
    np.testing.assert_allclose(
        eq.x_agg, [0.0, 41 / 150, 64 / 150, 0.0, 45 / 150], atol=1e-9)
    assert eq.lambda_h == pytest.approx(1807 / 150, abs=1e-9)
    assert eq.lambda_a == pytest.approx(15.2, abs=1e-9)
    assert eq.support.v_h == frozenset({1, 2})
    assert eq.support.v_a == frozenset({4})


def test_mixed_alpha_zero_is_baseline():
    net, delta = braess()
    eq0 = exact_mixed(net, delta, 0.0)
    base = exact_baseline(net, delta)
    np.testing.assert_allclose(eq0.x_agg, base.x_agg, atol=1e-12)
    assert eq0.support.v_a == frozenset()


def test_mixed_alpha_one_has_no_human_support():
    net, delta = braess()
    eq = exact_mixed(net, delta, 1.0)
    assert eq.support.v_h == frozenset()
    x_h, x_a = eq.split_witness
    np.testing.assert_array_equal(x_h, np.zeros(5))
    assert x_a.sum() == pytest.approx(1.0, abs=1e-12)


def test_mixed_rejects_alpha_out_of_range():
    net, delta = braess()
    with pytest.raises(ValueError):
        exact_mixed(net, delta, 1.2)


def test_split_witness_is_feasible_equilibrium():
    net, delta = braess()
    for alpha in (0.1, 0.3, 0.5, 0.7, 0.9):
        eq = exact_mixed(net, delta, alpha)
        x_h, x_a = eq.split_witness
        fp = FlowPattern(x_h=x_h, x_a=x_a, alpha=alpha)  # validates masses
        assert vi_gap(net, delta, fp) <= 1e-9


def test_permutation_invariance():
    # relabeling the parallel paths permutes the solution with them
    k = [3.0, 1.0, 0.5]
    b = [0.5, 2.0, 4.0]
    net1, d1 = parallel(k, b)
    perm = [2, 0, 1]
    net2, d2 = parallel([k[i] for i in perm], [b[i] for i in perm])
    e1 = exact_mixed(net1, d1, 0.4)
    e2 = exact_mixed(net2, d2, 0.4)
    np.testing.assert_allclose(e2.x_agg, e1.x_agg[perm], atol=1e-9)
    assert e2.lambda_h == pytest.approx(e1.lambda_h, abs=1e-9)
    assert e2.lambda_a == pytest.approx(e1.lambda_a, abs=1e-9)


def test_requires_linear_costs():
    net, delta = parallel([1.0, 1.0], [0.0, 1.5], n=[2.0, 1.0])
    with pytest.raises(RequiresLinearCosts):
        exact_mixed(net, delta, 0.5)


def test_path_budget():
    net, delta = parallel([1.0] * 21, [0.0] * 21)
    with pytest.raises(PathBudgetExceeded):
        exact_mixed(net, delta, 0.5)


# --- grid oracle ---

def test_grid_oracle_two_link():
    net, delta = parallel([1.0, 1.0], [0.0, 1.5])
    res = grid_gap_oracle(net, delta, alpha=0.2, grid_steps=80)
    # best grid point straddles the true equilibrium (0.875, 0.125)
    assert res.gap <= 0.05
    assert abs(res.flow.x_agg[0] - 0.875) <= 0.05
    assert res.n_evaluated == 81 * 81


def test_grid_oracle_validates_steps():
    net, delta = parallel([1.0, 1.0], [0.0, 1.5])
    with pytest.raises(ValueError):
        grid_gap_oracle(net, delta, alpha=0.2, grid_steps=0)
    with pytest.raises(ValueError):
        grid_gap_oracle(net, delta, alpha=0.2, grid_steps=500)


def test_grid_oracle_budget():
    net, delta = parallel([1.0] * 6, [0.0] * 6)
    with pytest.raises(GridBudgetExceeded):
        grid_gap_oracle(net, delta, alpha=0.5, grid_steps=200)


def test_grid_oracle_nonlinear_allowed():
    # the grid oracle has no linearity restriction
    net, delta = parallel([1.0, 2.0], [0.5, 0.0], n=[2.0, 2.0])
    res = grid_gap_oracle(net, delta, alpha=0.3, grid_steps=60)
    assert res.gap < 0.1
