"""Instance-level effect analyses.

Frozen values for the Braess deterioration variant (k6 = 1, b6 = 18.3), from
exact rational arithmetic on the baseline support {p1, p2, p3} with entering
path q = p5: gamma = -815/186, condition value = 4/155, and the direction
d = (-27/62, -145/186, 20/93) stays feasible up to about alpha = 41/910.
"""

import numpy as np
import pytest

from mixeq.analysis import (
    VERDICT_DETERIORATES,
    VERDICT_IMPROVES,
    VERDICT_NOT_MET,
    analyze,
    check_improvement,
    check_no_effect,
    compare_centralized,
    construct_baseline_from_mixed,
    deterioration_report,
)
from mixeq.costs import CostParams, social_cost
from mixeq.errors import (
    DimensionMismatch,
    NotPathMultigraph,
    RequiresSingleExponent,
)
from mixeq.netmodel import (
    Link,
    Network,
    declared_path_set,
    enumerate_paths,
    incidence_matrix,
)
from mixeq.oracle import exact_baseline
from mixeq.solver import FlowPattern, SolverConfig, solve_mixed, vi_gap


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


def two_bundle_series():
    net = Network(nodes=frozenset({"o", "m", "d"}), links=(
        Link(id="a", tail="o", head="m", cost=CostParams(k=1.0, b=0.0)),
        Link(id="b", tail="o", head="m", cost=CostParams(k=2.0, b=0.5)),
        Link(id="c", tail="m", head="d", cost=CostParams(k=1.5, b=0.2, n=2.0)),
        Link(id="e", tail="m", head="d", cost=CostParams(k=0.5, b=1.0)),
    ), origin="o", destination="d")
    paths = enumerate_paths(net)
    return net, incidence_matrix(net, paths)


# --- deterioration report ---

def test_deterioration_variant_frozen_values():
    net, delta = braess(k6=1.0, b6=18.3)
    rep = deterioration_report(net, delta, exact_baseline(net, delta))
    assert rep.verdict == VERDICT_DETERIORATES
    assert rep.v == (0, 1, 2)
    assert rep.q == 4
    assert rep.hypotheses.all_hold()
    assert rep.gamma == pytest.approx(-815 / 186, abs=1e-9)
    assert rep.condition_value == pytest.approx(4 / 155, abs=1e-9)
    # the hint comes from a bisection resolved to 1e-6
    assert rep.alpha_validity_hint == pytest.approx(41 / 910, abs=2e-6)


def test_two_link_improvement_direction():
    # baseline (1, 0); the entering autonomous path lowers social cost
    net, delta = parallel([1.0, 1.0], [0.0, 1.5])
    rep = deterioration_report(net, delta, exact_baseline(net, delta))
    assert rep.verdict == VERDICT_IMPROVES
    assert rep.hypotheses.all_hold()
    assert rep.q == 1
    assert rep.gamma == pytest.approx(-1.0, abs=1e-10)
    assert rep.condition_value == pytest.approx(-0.5, abs=1e-10)
    assert rep.alpha_validity_hint is not None


def test_default_braess_hypotheses_not_met():
    # at the default parameters the marginal-cost minimizer is on-support
    net, delta = braess()
    rep = deterioration_report(net, delta, exact_baseline(net, delta))
    assert rep.verdict == VERDICT_NOT_MET
    assert not rep.hypotheses.q_off_support
    assert rep.gamma is None
    assert rep.condition_value is None


# --- no-effect ---

def test_no_effect_holds_on_equal_intercepts():
    net, delta = parallel([2.0, 1.0, 0.5], [3.0, 3.0, 3.0])
    rep = check_no_effect(net, delta)
    assert rep.holds
    assert rep.b0 == pytest.approx(3.0)


def test_no_effect_fails_on_distinct_intercepts():
    net, delta = parallel([1.0, 1.0], [0.0, 1.5])
    rep = check_no_effect(net, delta)
    assert not rep.holds


def test_no_effect_requires_single_exponent():
    net, delta = parallel([1.0, 1.0], [1.0, 1.0], n=[1.0, 2.0])
    with pytest.raises(RequiresSingleExponent):
        check_no_effect(net, delta)


def test_no_effect_flow_invariance():
    # with equal intercepts the sweep of social costs is flat
    net, delta = parallel([2.0, 1.0, 0.5], [3.0, 3.0, 3.0], n=[2.0, 2.0, 2.0])
    values = []
    for alpha in np.linspace(0.0, 1.0, 7):
        res = solve_mixed(net, delta, SolverConfig(
            alpha=float(alpha), outer_tol=1e-10, inner_tol=1e-12))
        assert res.converged
        values.append(res.social)
    assert max(values) - min(values) <= 1e-8


# --- baseline construction and improvement ---

def test_construct_baseline_two_link():
    net, delta = parallel([1.0, 1.0], [0.0, 1.5])
    mixed = solve_mixed(net, delta, SolverConfig(alpha=0.2))
    baseline = construct_baseline_from_mixed(net, delta, mixed)
    np.testing.assert_allclose(baseline, [1.0, 0.0], atol=1e-10)
    assert check_improvement(baseline, mixed.flow.x_h)
    fp = FlowPattern(x_h=baseline, x_a=np.zeros(2), alpha=0.0)
    assert vi_gap(net, delta, fp) <= 1e-8
    assert mixed.social <= social_cost(net, delta.delta @ baseline) + 1e-10


def test_construct_baseline_series_instance():
    net, delta = two_bundle_series()
    mixed = solve_mixed(net, delta, SolverConfig(
        alpha=0.4, outer_tol=1e-10, inner_tol=1e-12))
    baseline = construct_baseline_from_mixed(net, delta, mixed)
    # the baseline is itself a pure-human equilibrium
    fp = FlowPattern(x_h=baseline, x_a=np.zeros(len(baseline)), alpha=0.0)
    assert vi_gap(net, delta, fp) <= 1e-8
    # and it dominates the mixed human flows path by path
    assert (mixed.flow.x_h <= baseline + 1e-10).all()
    assert mixed.social <= social_cost(net, delta.delta @ baseline) + 1e-8


def test_construct_baseline_rejects_braess():
    net, delta = braess()
    mixed = solve_mixed(net, delta, SolverConfig(alpha=0.3))
    with pytest.raises(NotPathMultigraph):
        construct_baseline_from_mixed(net, delta, mixed)


def test_check_improvement_detects_violation():
    net, delta = parallel([1.0, 1.0], [0.0, 1.5])
    mixed = solve_mixed(net, delta, SolverConfig(alpha=0.2))
    bad_baseline = np.array([0.5, 0.5])  # human flow on p1 is 0.8 > 0.5
    assert not check_improvement(bad_baseline, mixed.flow.x_h)


def test_check_improvement_dimension_mismatch():
    net, delta = parallel([1.0, 1.0], [0.0, 1.5])
    mixed = solve_mixed(net, delta, SolverConfig(alpha=0.2))
    with pytest.raises(DimensionMismatch):
        check_improvement(np.zeros(3), mixed.flow.x_h)


# --- centralized comparison ---

def test_compare_centralized_two_link():
    net, delta = parallel([1.0, 1.0], [0.0, 1.5])
    cmp = compare_centralized(net, delta, 0.5, SolverConfig(alpha=0.5))
    assert cmp.converged
    assert cmp.deviation <= 1e-6


def test_compare_centralized_braess():
    net, delta = braess()
    cmp = compare_centralized(net, delta, 0.5, SolverConfig(alpha=0.5))
    assert cmp.converged
    assert cmp.deviation <= 1e-6


# --- orchestrator ---

def test_analyze_braess_skips_improvement():
    net, delta = braess()
    verdict = analyze(net, delta, 0.3, SolverConfig(alpha=0.3))
    assert verdict.improvement is None
    assert "improvement" in verdict.skipped
    assert verdict.no_effect is not None and not verdict.no_effect.holds
    assert verdict.deterioration is not None
    assert verdict.centralized_match is not None


def test_analyze_nonlinear_series_skips_linear_checks():
    net, delta = two_bundle_series()
    verdict = analyze(net, delta, 0.4, SolverConfig(alpha=0.4))
    assert "no_effect" in verdict.skipped
    assert "deterioration" in verdict.skipped
    assert verdict.improvement is not None
    assert verdict.improvement.dominates


def test_analyze_deterioration_variant_full():
    net, delta = braess(k6=1.0, b6=18.3)
    verdict = analyze(net, delta, 0.02, SolverConfig(alpha=0.02))
    rep = verdict.deterioration
    assert rep is not None and rep.verdict == VERDICT_DETERIORATES
    assert verdict.centralized_match.deviation <= 1e-6
