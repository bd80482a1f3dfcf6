"""Instance-level effect analysis for mixed autonomy.

Given a concrete network, these checks decide what a small autonomous share
does to the social cost: never worse on path multigraphs (via an explicit
witness construction), strictly worse for small alpha when a first-order
condition holds, or exactly nothing when all paths share a free-flow time.
A centralized-vs-decentralized comparison rounds out the picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

import numpy as np

from mixeq.costs import cost_arrays, social_cost
from mixeq.errors import (
    DimensionMismatch,
    NotPathMultigraph,
    RequiresLinearCosts,
    RequiresSingleExponent,
    SingularMv,
)
from mixeq.netmodel import (
    IncidenceMatrix,
    Network,
    columns_independent,
    is_path_multigraph,
    series_bundles,
)
from mixeq.oracle import P_MAX, ExactEquilibrium, exact_baseline
from mixeq.solver import EquilibriumResult, FlowPattern, SolverConfig, solve_mixed, vi_gap

__all__ = [
    "HypothesisChecks",
    "DeteriorationReport",
    "NoEffectReport",
    "CentralizedComparison",
    "ImprovementCertificate",
    "AnalysisVerdict",
    "check_improvement",
    "construct_baseline_from_mixed",
    "deterioration_report",
    "check_no_effect",
    "compare_centralized",
    "analyze",
]

SUPPORT_THRESHOLD = 1e-9
MARGIN = 1e-9
NO_EFFECT_TOL = 1e-10
DOMINANCE_TOL = 1e-10

VERDICT_DETERIORATES = "deteriorates_for_small_alpha"
VERDICT_IMPROVES = "predicts_improvement_direction"
VERDICT_NOT_MET = "hypotheses_not_met"


@dataclass(frozen=True)
class HypothesisChecks:
    """Hypotheses of the small-alpha deterioration condition."""

    linear_costs: bool
    delta_v_independent: bool
    q_unique: bool
    q_off_support: bool
    strict_off_support_costs: bool

    def all_hold(self) -> bool:
        return (
            self.linear_costs
            and self.delta_v_independent
            and self.q_unique
            and self.q_off_support
            and self.strict_off_support_costs
        )


@dataclass(frozen=True)
class DeteriorationReport:
    """First-order effect of a small autonomous share on the social cost.

    condition_value is the one-sided derivative of alpha -> S*(alpha) at 0
    for the constructed equilibrium: positive means the social cost rises.
    alpha_validity_hint bounds the alpha range on which that construction
    stays a valid equilibrium; it is a hint, not a proven deterioration
    boundary.
    """

    v: Tuple[int, ...]
    q: Optional[int]
    gamma: Optional[float]
    condition_value: Optional[float]
    hypotheses: HypothesisChecks
    verdict: str
    alpha_validity_hint: Optional[float]


@dataclass(frozen=True)
class NoEffectReport:
    """Whether all paths share one free-flow travel time."""

    holds: bool
    b0: Optional[float]


@dataclass(frozen=True)
class CentralizedComparison:
    """Social cost under selfish-routed vs centrally-routed autonomous agents."""

    social_decentralized: float
    social_centralized: float
    deviation: float
    converged: bool


@dataclass(frozen=True, eq=False)
class ImprovementCertificate:
    """Witness that mixing in autonomous agents did not hurt.

    baseline_x is a baseline equilibrium dominating the mixed human flows
    elementwise; by the monotone-cost comparison argument this certifies
    S_mixed <= S_baseline.
    """

    dominates: bool
    baseline_x: np.ndarray
    mixed_x_h: np.ndarray
    baseline_gap: float
    social_mixed: float
    social_baseline: float


@dataclass(frozen=True, eq=False)
class AnalysisVerdict:
    """Bundle of all instance-level checks; None means skipped (see skipped)."""

    no_effect: Optional[NoEffectReport]
    deterioration: Optional[DeteriorationReport]
    centralized_match: Optional[CentralizedComparison]
    improvement: Optional[ImprovementCertificate]
    skipped: Dict[str, str]


def check_improvement(baseline_x: np.ndarray, mixed_x_h: np.ndarray) -> bool:
    """Whether mixed human flows are dominated elementwise by a baseline flow.

    True certifies (together with measured social costs) that the mixed
    equilibrium is no worse than the baseline. Sufficient only: it tests one
    pair of witnesses, and equilibria admit many path-flow decompositions.
    """
    baseline_x = np.asarray(baseline_x, dtype=np.float64)
    mixed_x_h = np.asarray(mixed_x_h, dtype=np.float64)
    if baseline_x.shape != mixed_x_h.shape:
        raise DimensionMismatch("flow vectors differ in length")
    return bool(np.all(mixed_x_h <= baseline_x + DOMINANCE_TOL))


# ---------------------------------------------------------------------------
# baseline construction on path multigraphs
# ---------------------------------------------------------------------------


def _solve_increasing(g, target, lo, hi=None):
    # root of g(lam) = target for increasing g with g(lo) <= target
    if hi is None:
        hi = lo + 1.0
        for _ in range(200):
            if g(hi) >= target:
                break
            hi = lo + 2.0 * (hi - lo)
    for _ in range(200):
        if hi - lo <= 1e-13 * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if g(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _bundle_baseline(kk, bb, nn, f_h, f_a, eq_tol=1e-10):
    """Relabel autonomous flow as human on one parallel bundle.

    Links play the role of paths. Starting from the aggregated mixed flows,
    autonomous flow is drained path by path: the cheapest autonomous path is
    either absorbed outright (its travel time already equals the human cost)
    or reduced while the human-used paths rise to a common cost, stopping at
    whichever comes first of: the path empties, its falling cost meets the
    rising one, or an untouched path's cost is reached. Human-used flows only
    grow, so the output dominates f_h and is a baseline Wardrop equilibrium.
    """
    size = len(kk)
    x = np.asarray(f_h + f_a, dtype=np.float64).copy()

    def t(p, flow):
        return kk[p] * flow ** nn[p] + bb[p] if flow > 0.0 else bb[p]

    def t_inv(p, lam):
        if lam <= bb[p]:
            return 0.0
        return ((lam - bb[p]) / kk[p]) ** (1.0 / nn[p])

    ph = {p for p in range(size) if f_h[p] > 1e-12}
    pa = {p for p in range(size) if f_a[p] > 1e-12}
    if not ph:
        ph = {min(range(size), key=lambda p: (t(p, x[p]), p))}
    lam_h = min(t(p, x[p]) for p in range(size))

    guard = 0
    while pa and guard < 4 * size + 8:
        guard += 1
        q = min(pa, key=lambda p: (t(p, x[p]), p))
        if t(q, x[q]) <= lam_h + eq_tol:
            ph.add(q)
            pa.discard(q)
            continue

        def h(lam):
            return sum(t_inv(p, lam) - x[p] for p in ph)

        outside = [t(r, x[r]) for r in range(size) if r not in ph and r != q]
        lam3 = min(outside) if outside else math.inf
        lam1 = _solve_increasing(h, x[q], lo=lam_h)
        if lam1 - t(q, max(x[q] - h(lam1), 0.0)) < 0.0:
            lam2 = math.inf  # q cannot meet the rising cost before emptying
        else:
            lam2 = _solve_increasing(
                lambda lam: lam - t(q, max(x[q] - h(lam), 0.0)), 0.0, lo=lam_h, hi=lam1
            )
        lam_new = min(lam1, lam2, lam3)

        drained = 0.0
        for p in ph:
            new_flow = t_inv(p, lam_new)
            drained += new_flow - x[p]
            x[p] = new_flow
        x[q] = max(x[q] - drained, 0.0)
        if lam1 <= min(lam2, lam3) + 1e-12:
            x[q] = 0.0
            pa.discard(q)
        lam_h = lam_new
        for r in range(size):
            if r not in ph and t(r, x[r]) <= lam_h + eq_tol:
                ph.add(r)
    return x


def construct_baseline_from_mixed(
    network: Network, delta: IncidenceMatrix, mixed: EquilibriumResult
) -> np.ndarray:
    """Baseline equilibrium path flows dominating the mixed human flows.

    Works bundle by bundle on a path multigraph: the autonomous link flow in
    each parallel bundle is relabeled as human while the used links stay cost-
    equalized. The resulting extra link flow (relative to the mixed human
    flows) is decomposed into whole paths greedily and added on top of
    mixed.flow.x_h, so dominance holds by construction.

    Raises:
        NotPathMultigraph: If the network is not a series of parallel bundles,
            or the given path set cannot represent the residual flow.
    """
    bundles = series_bundles(network)
    k, b, n = cost_arrays(network)
    f_h, f_a, _ = mixed.flow.link_flows(delta)

    baseline_f = np.array(f_h, dtype=np.float64, copy=True)
    for bundle in bundles:
        idx = list(bundle.link_indices)
        baseline_f[idx] = _bundle_baseline(k[idx], b[idx], n[idx], f_h[idx], f_a[idx])

    residual = np.maximum(baseline_f - f_h, 0.0)
    x = mixed.flow.x_h.copy()

    # each path must use exactly one link per bundle
    p_count = delta.num_paths
    lookup: Dict[Tuple[int, ...], int] = {}
    for p in range(p_count):
        rows = set(np.flatnonzero(delta.delta[:, p] > 0.5).tolist())
        key = []
        for bundle in bundles:
            members = [i for i in bundle.link_indices if i in rows]
            if len(members) != 1:
                raise NotPathMultigraph(
                    f"path {p} uses {len(members)} links of bundle "
                    f"{bundle.tail!r}->{bundle.head!r}"
                )
            key.append(members[0])
        lookup.setdefault(tuple(key), p)

    rem = residual.copy()
    for _ in range(delta.num_links + 1):
        choice = []
        for bundle in bundles:
            best = bundle.link_indices[0]
            for i in bundle.link_indices[1:]:
                if rem[i] > rem[best]:
                    best = i
            choice.append(best)
        amount = min(rem[i] for i in choice)
        if amount <= 1e-15:
            break
        p = lookup.get(tuple(choice))
        if p is None:
            raise NotPathMultigraph("path set cannot represent the residual flow")
        x[p] += amount
        for i in choice:
            rem[i] -= amount
            if rem[i] < 1e-15:
                rem[i] = 0.0
    return x


# ---------------------------------------------------------------------------
# small-alpha deterioration condition
# ---------------------------------------------------------------------------


def _gamma_and_direction(m_path, v, q):
    m_v = m_path[np.ix_(v, v)]
    try:
        y1 = np.linalg.solve(m_v, np.ones(len(v)))
        yq = np.linalg.solve(m_v, m_path[v, q])
    except np.linalg.LinAlgError as exc:
        raise SingularMv(str(exc)) from exc
    denom = float(y1.sum())
    if not np.isfinite(denom) or abs(denom) < 1e-300:
        raise SingularMv("1^T M_V^{-1} 1 vanishes")
    gamma = (float(yq.sum()) - 1.0) / denom
    direction = gamma * y1 - yq
    return gamma, direction


def _alpha_window(ch, ca, lam_tilde, x, v, q, gamma, direction, m_path):
    """Largest alpha (to 1e-6, capped at 1) keeping the constructed
    equilibrium valid: off-support human costs stay above lambda_h, human
    flows stay nonnegative, q stays the autonomous argmin."""
    p_count = len(ch)
    slope = m_path[:, v] @ direction + m_path[:, q]

    def feasible(a):
        for p in range(p_count):
            if p not in v and ch[p] - lam_tilde + a * (slope[p] - gamma) < -1e-12:
                return False
            if p != q and (ca[p] - ca[q]) + 2.0 * a * (slope[p] - slope[q]) < -1e-12:
                return False
        for i, p in enumerate(v):
            if x[p] + a * direction[i] < -1e-12:
                return False
        return True

    if feasible(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def deterioration_report(
    network: Network, delta: IncidenceMatrix, baseline: ExactEquilibrium
) -> DeteriorationReport:
    """First-order deterioration check at the given exact baseline.

    Identifies the used-path set V from the baseline, the best path q for
    altruistic agents, and evaluates the condition value C_q_H - lambda_h +
    gamma. A positive value under all hypotheses means the social cost rises
    for small autonomous shares.

    Raises:
        RequiresLinearCosts: If any link has n != 1.
    """
    k, b, n = cost_arrays(network)
    if not np.all(n == 1.0):
        raise RequiresLinearCosts("deterioration analysis requires n = 1 on every link")
    d = delta.delta
    m_path = (d.T * k) @ d
    c0 = d.T @ b
    p_count = delta.num_paths

    x = baseline.x_agg
    lam_tilde = baseline.lambda_h
    v = [p for p in range(p_count) if x[p] > SUPPORT_THRESHOLD]
    mx = m_path @ x
    ch = mx + c0
    ca = 2.0 * mx + c0

    order = np.argsort(ca, kind="stable")
    q = int(order[0])
    q_unique = p_count < 2 or float(ca[order[1]] - ca[order[0]]) >= MARGIN
    q_off_support = bool(x[q] <= SUPPORT_THRESHOLD)
    strict_off = all(ch[p] >= lam_tilde + MARGIN for p in range(p_count) if p not in v)
    independent = bool(v) and columns_independent(d[:, v])
    hyp = HypothesisChecks(
        linear_costs=True,
        delta_v_independent=independent,
        q_unique=q_unique,
        q_off_support=q_off_support,
        strict_off_support_costs=strict_off,
    )

    gamma: Optional[float] = None
    condition_value: Optional[float] = None
    hint: Optional[float] = None
    verdict = VERDICT_NOT_MET
    if hyp.all_hold():
        try:
            gamma, direction = _gamma_and_direction(m_path, v, q)
        except SingularMv:
            pass
        else:
            condition_value = float(ch[q] - lam_tilde + gamma)
            verdict = VERDICT_DETERIORATES if condition_value > 0.0 else VERDICT_IMPROVES
            hint = _alpha_window(ch, ca, lam_tilde, x, v, q, gamma, direction, m_path)
    return DeteriorationReport(
        v=tuple(v),
        q=q,
        gamma=gamma,
        condition_value=condition_value,
        hypotheses=hyp,
        verdict=verdict,
        alpha_validity_hint=hint,
    )


def check_no_effect(network: Network, delta: IncidenceMatrix) -> NoEffectReport:
    """Whether every path has the same free-flow travel time.

    When true, both classes rank paths identically at any flow, so the
    autonomous share cannot move the equilibrium: S*(alpha) is constant.

    Raises:
        RequiresSingleExponent: If links carry different exponents.
    """
    _, b, n = cost_arrays(network)
    if np.unique(n).size > 1:
        raise RequiresSingleExponent("no-effect condition assumes one shared exponent")
    pb = delta.delta.T @ b
    holds = bool(float(pb.max() - pb.min()) <= NO_EFFECT_TOL)
    return NoEffectReport(holds=holds, b0=float(pb[0]) if holds else None)


def compare_centralized(
    network: Network, delta: IncidenceMatrix, alpha: float, cfg: SolverConfig
) -> CentralizedComparison:
    """Social cost with selfish vs centrally routed autonomous agents.

    The decentralized side is the ordinary mixed equilibrium. The centralized
    side alternates the human Wardrop response with exact minimization of the
    social cost over the autonomous flows (the same subproblem the relaxation
    solves, certified by the inner duality gap), started uniform and run to
    the same relative VI-gap certificate; a fixed point of that alternation
    is exactly a mutual best response, and stopping on anything weaker (for
    example a stabilized aggregate flow) can freeze a slow drift mid-way.
    The two are predicted to coincide in social cost.
    """
    dec = solve_mixed(network, delta, replace(cfg, alpha=alpha))
    cen = solve_mixed(
        network, delta,
        replace(cfg, alpha=alpha, init="uniform", x_h0=None, x_a0=None),
    )
    return CentralizedComparison(
        social_decentralized=dec.social,
        social_centralized=cen.social,
        deviation=abs(dec.social - cen.social),
        converged=dec.converged and cen.converged,
    )


def analyze(
    network: Network,
    delta: IncidenceMatrix,
    alpha: float,
    cfg: SolverConfig,
) -> AnalysisVerdict:
    """Run every applicable instance-level check at the given alpha."""
    _, _, n = cost_arrays(network)
    skipped: Dict[str, str] = {}

    no_effect = None
    if np.unique(n).size == 1:
        no_effect = check_no_effect(network, delta)
    else:
        skipped["no_effect"] = "links carry different cost exponents"

    deterioration = None
    if not np.all(n == 1.0):
        skipped["deterioration"] = "requires linear costs on every link"
    elif delta.num_paths > P_MAX:
        skipped["deterioration"] = f"more than {P_MAX} paths"
    else:
        deterioration = deterioration_report(
            network, delta, exact_baseline(network, delta)
        )

    centralized = compare_centralized(network, delta, alpha, cfg)

    improvement = None
    if is_path_multigraph(network):
        mixed = solve_mixed(network, delta, replace(cfg, alpha=alpha))
        baseline_x = construct_baseline_from_mixed(network, delta, mixed)
        baseline_flow = FlowPattern(
            x_h=baseline_x, x_a=np.zeros_like(baseline_x), alpha=0.0
        )
        improvement = ImprovementCertificate(
            dominates=check_improvement(baseline_x, mixed.flow.x_h),
            baseline_x=baseline_x,
            mixed_x_h=np.array(mixed.flow.x_h, copy=True),
            baseline_gap=vi_gap(network, delta, baseline_flow),
            social_mixed=mixed.social,
            social_baseline=social_cost(network, delta.delta @ baseline_x),
        )
    else:
        skipped["improvement"] = "network is not a path multigraph"

    return AnalysisVerdict(
        no_effect=no_effect,
        deterioration=deterioration,
        centralized_match=centralized,
        improvement=improvement,
        skipped=skipped,
    )
