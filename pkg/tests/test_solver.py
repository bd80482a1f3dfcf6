import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixeq.costs import CostParams, social_cost
from mixeq.errors import DimensionMismatch, InfeasibleFlow
from mixeq.netmodel import Link, Network, declared_path_set, incidence_matrix
from mixeq.solver import (
    FlowPattern,
    SolverConfig,
    all_or_nothing,
    multi_start_uniqueness_check,
    solve_mixed,
    vi_gap,
)


def parallel_net(k, b, n=None):
    n = n or [1.0] * len(k)
    links = tuple(
        Link(id=f"l{i}", tail="o", head="d", cost=CostParams(k=k[i], b=b[i], n=n[i]))
        for i in range(len(k))
    )
    net = Network(nodes=frozenset({"o", "d"}), links=links, origin="o",
                  destination="d")
    paths = declared_path_set(net, tuple((f"l{i}",) for i in range(len(k))))
    return net, incidence_matrix(net, paths)


TWO_LINK = parallel_net([1.0, 1.0], [0.0, 1.5])


# --- FlowPattern ---

def test_flow_pattern_validates_masses():
    FlowPattern(x_h=np.array([0.8, 0.0]), x_a=np.array([0.075, 0.125]), alpha=0.2)
    with pytest.raises(InfeasibleFlow):
        FlowPattern(x_h=np.array([0.5, 0.0]), x_a=np.array([0.075, 0.125]), alpha=0.2)
    with pytest.raises(InfeasibleFlow):
        FlowPattern(x_h=np.array([0.9, -0.1]), x_a=np.array([0.1, 0.1]), alpha=0.2)
    with pytest.raises(DimensionMismatch):
        FlowPattern(x_h=np.array([0.8]), x_a=np.array([0.1, 0.1]), alpha=0.2)


def test_flow_pattern_link_flows():
    net, delta = TWO_LINK
    fp = FlowPattern(x_h=np.array([0.8, 0.0]), x_a=np.array([0.075, 0.125]),
                     alpha=0.2)
    f_h, f_a, f = fp.link_flows(delta)
    np.testing.assert_allclose(f_h, [0.8, 0.0])
    np.testing.assert_allclose(f_a, [0.075, 0.125])
    np.testing.assert_allclose(f, [0.875, 0.125])
    np.testing.assert_allclose(fp.x_agg, [0.875, 0.125])


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(alpha=-0.1)
    with pytest.raises(ValueError):
        SolverConfig(alpha=0.5, outer_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(alpha=0.5, init="bogus")
    with pytest.raises(ValueError):
        SolverConfig(alpha=0.5, init="given")  # needs both start vectors


# --- all-or-nothing ---

def test_all_or_nothing_lowest_index_tie():
    net, delta = parallel_net([1.0, 1.0, 1.0], [2.0, 2.0, 2.0])
    x = all_or_nothing(delta, np.array([2.0, 2.0, 2.0]), 1.0)
    np.testing.assert_array_equal(x, [1.0, 0.0, 0.0])


def test_all_or_nothing_picks_cheapest():
    net, delta = parallel_net([1.0, 1.0], [3.0, 1.0])
    x = all_or_nothing(delta, np.array([3.0, 1.0]), 1.0)
    np.testing.assert_array_equal(x, [0.0, 1.0])


def test_all_or_nothing_rejects_negative_demand():
    net, delta = TWO_LINK
    with pytest.raises(ValueError):
        all_or_nothing(delta, np.array([1.0, 2.0]), -1.0)


# --- solve_mixed on pinned instances ---

def test_two_link_mixed_equilibrium():
    net, delta = TWO_LINK
    res = solve_mixed(net, delta, SolverConfig(alpha=0.2))
    assert res.converged
    np.testing.assert_allclose(res.flow.x_agg, [0.875, 0.125], atol=1e-8)
    np.testing.assert_allclose(res.flow.x_a, [0.075, 0.125], atol=1e-8)
    assert res.lambda_h == pytest.approx(0.875, abs=1e-8)
    assert res.lambda_a == pytest.approx(1.75, abs=1e-8)
    assert res.social == pytest.approx(0.96875, abs=1e-10)
    assert res.gap <= 1e-8 * res.social


def test_pure_human_matches_wardrop():
    net, delta = TWO_LINK
    res = solve_mixed(net, delta, SolverConfig(alpha=0.0))
    np.testing.assert_allclose(res.flow.x_agg, [1.0, 0.0], atol=1e-9)
    assert res.lambda_h == pytest.approx(1.0, abs=1e-9)
    assert res.social == pytest.approx(1.0, abs=1e-9)


def test_pure_auto_matches_system_optimum():
    net, delta = TWO_LINK
    res = solve_mixed(net, delta, SolverConfig(alpha=1.0))
    np.testing.assert_allclose(res.flow.x_agg, [0.875, 0.125], atol=1e-8)
    # system optimum social cost: 0.875^2 + 0.125 * (0.125 + 1.5)
    assert res.social == pytest.approx(0.96875, abs=1e-8)


def test_init_modes_agree():
    net, delta = parallel_net([2.0, 1.0, 0.5], [0.0, 1.0, 2.0])
    cfg = SolverConfig(alpha=0.4, outer_tol=1e-10, inner_tol=1e-12)
    base = solve_mixed(net, delta, cfg)
    for init in ("uniform", "all_on_first_path"):
        other = solve_mixed(net, delta, SolverConfig(
            alpha=0.4, outer_tol=1e-10, inner_tol=1e-12, init=init))
        np.testing.assert_allclose(other.flow.x_agg, base.flow.x_agg, atol=1e-7)
        assert other.social == pytest.approx(base.social, abs=1e-9)


def test_given_init_roundtrip():
    net, delta = TWO_LINK
    cfg = SolverConfig(alpha=0.2, init="given",
                       x_h0=np.array([0.1, 0.7]), x_a0=np.array([0.2, 0.0]))
    res = solve_mixed(net, delta, cfg)
    assert res.converged
    np.testing.assert_allclose(res.flow.x_agg, [0.875, 0.125], atol=1e-8)


def test_nonlinear_instance_converges():
    net, delta = parallel_net([1.0, 2.0], [1.0, 0.5], n=[4.0, 2.0])
    res = solve_mixed(net, delta, SolverConfig(alpha=0.5))
    assert res.converged
    f = delta.delta @ res.flow.x_agg
    assert res.social == pytest.approx(social_cost(net, f), abs=1e-12)
    assert vi_gap(net, delta, res.flow) <= 1e-8 * res.social + 1e-12


# --- vi_gap ---

def test_vi_gap_zero_at_equilibrium():
    net, delta = TWO_LINK
    fp = FlowPattern(x_h=np.array([0.8, 0.0]), x_a=np.array([0.075, 0.125]),
                     alpha=0.2)
    assert vi_gap(net, delta, fp) <= 1e-12


def test_vi_gap_positive_off_equilibrium():
    net, delta = TWO_LINK
    fp = FlowPattern(x_h=np.array([0.0, 0.8]), x_a=np.array([0.2, 0.0]),
                     alpha=0.2)
    assert vi_gap(net, delta, fp) > 0.1


def test_vi_gap_rejects_wrong_path_count():
    net, delta = TWO_LINK
    net3, _ = parallel_net([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])
    fp = FlowPattern(x_h=np.array([0.7, 0.0, 0.0]), x_a=np.full(3, 0.1),
                     alpha=0.3)
    with pytest.raises(DimensionMismatch):
        vi_gap(net, delta, fp)


# --- property: converged results are feasible equilibria ---

@given(
    seed=st.integers(0, 2**32 - 1),
    n_paths=st.integers(2, 5),
    alpha=st.floats(0.0, 1.0),
    n_exp=st.sampled_from([1.0, 2.0]),
)
@settings(max_examples=30, deadline=None)
def test_solution_feasibility(seed, n_paths, alpha, n_exp):
    rng = np.random.default_rng(seed)
    net, delta = parallel_net(
        list(rng.uniform(0.1, 10.0, n_paths)),
        list(rng.uniform(0.0, 10.0, n_paths)),
        n=[n_exp] * n_paths,
    )
    res = solve_mixed(net, delta, SolverConfig(alpha=alpha))
    fp = res.flow
    assert fp.x_h.sum() == pytest.approx(1.0 - alpha, abs=1e-9)
    assert fp.x_a.sum() == pytest.approx(alpha, abs=1e-9)
    assert (fp.x_h >= -1e-12).all() and (fp.x_a >= -1e-12).all()
    if res.converged:
        assert res.gap <= SolverConfig(alpha=alpha).outer_tol * res.social + 1e-15
        # gap recomputed independently from the returned flow
        assert vi_gap(net, delta, fp) <= 1.1e-8 * res.social + 1e-12


# --- uniqueness probe ---

def test_multi_start_uniqueness_two_link():
    net, delta = TWO_LINK
    report = multi_start_uniqueness_check(
        net, delta, SolverConfig(alpha=0.2), n_starts=6, seed=5)
    assert report.n_runs == 6
    assert report.n_converged == 6
    assert report.max_f_deviation <= 1e-9
    assert report.max_s_deviation <= 1e-9
