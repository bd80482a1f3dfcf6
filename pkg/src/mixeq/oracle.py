"""Exact equilibria for linear link costs, by support enumeration.

With every link cost linear (n = 1), path costs are affine in the aggregated
path flow: ch = M x + c0 and ca = 2 M x + c0 with M = delta^T K delta. For a
guessed support the equal-cost conditions become a linear system, so the
equilibrium can be computed exactly and verified against the full inequality
set. These routines are deliberately independent of the iterative solver;
they serve as ground truth in its tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import FrozenSet, Tuple

import numpy as np

from mixeq import kernels
from mixeq.costs import cost_arrays
from mixeq.errors import (
    GridBudgetExceeded,
    NoValidSupport,
    PathBudgetExceeded,
    RequiresLinearCosts,
)
from mixeq.netmodel import IncidenceMatrix, Network, columns_independent
from mixeq.solver import FlowPattern, vi_gap

__all__ = [
    "SupportPair",
    "ExactEquilibrium",
    "GridOracleResult",
    "exact_baseline",
    "exact_mixed",
    "grid_gap_oracle",
]

P_MAX = 20
COST_SLACK = 1e-9
FLOW_CLAMP = 1e-12


@dataclass(frozen=True)
class SupportPair:
    """Used-path index sets for the two classes."""

    v_h: FrozenSet[int]
    v_a: FrozenSet[int]


@dataclass(frozen=True, eq=False)
class ExactEquilibrium:
    """Closed-form equilibrium for a linear-cost instance.

    Attributes:
        x_agg: Aggregated path flow, length P, summing to 1.
        lambda_h: Minimum (equilibrium) human path cost.
        lambda_a: Minimum (equilibrium) autonomous path cost.
        support: Used-path sets backing the solution.
        split_witness: One feasible (x_h, x_a) decomposition of x_agg.
    """

    x_agg: np.ndarray
    lambda_h: float
    lambda_a: float
    support: SupportPair
    split_witness: Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True, eq=False)
class GridOracleResult:
    """Best flow found by brute-force grid search."""

    flow: FlowPattern
    gap: float
    n_evaluated: int


def _paths_matrices(network: Network, delta: IncidenceMatrix):
    k, b, n = cost_arrays(network)
    if not np.all(n == 1.0):
        raise RequiresLinearCosts("support enumeration requires n = 1 on every link")
    if delta.num_paths > P_MAX:
        raise PathBudgetExceeded(
            f"support enumeration limited to {P_MAX} paths, got {delta.num_paths}"
        )
    d = delta.delta
    m_path = (d.T * k) @ d
    c0 = d.T @ b
    return m_path, c0


def _verify_single_class(m_eff, c0, support, x, slack):
    """Equilibrium check for one class with effective congestion matrix m_eff.

    Returns (lam, ok): lam is the minimum path cost at x; ok means every
    support path is within slack of it (off-support paths exceed it by
    construction of the minimum).
    """
    costs = m_eff @ x + c0
    lam = float(costs.min())
    for p in support:
        if costs[p] > lam + slack:
            return lam, False
    return lam, True


def _solve_support(m_eff, c0, support):
    """Equal-cost flow on a candidate support; None if out of reach.

    Uses the closed form x_V = M_V^{-1} (lam 1 - c0_V) with lam from the
    demand constraint when M_V is invertible, otherwise a least-squares solve
    of the stacked system. Verification happens at the caller.
    """
    v = list(support)
    m_v = m_eff[np.ix_(v, v)]
    size = len(v)
    if columns_independent(m_v):
        try:
            y1 = np.linalg.solve(m_v, np.ones(size))
            yb = np.linalg.solve(m_v, c0[v])
        except np.linalg.LinAlgError:
            return None
        denom = float(y1.sum())
        if abs(denom) < 1e-300:
            return None
        lam = (1.0 + float(yb.sum())) / denom
        return lam * y1 - yb
    # dependent columns: minimum-norm least squares on [M_V x - lam 1; sum x]
    a_mat = np.zeros((size + 1, size + 1))
    a_mat[:size, :size] = m_v
    a_mat[:size, size] = -1.0
    a_mat[size, :size] = 1.0
    rhs = np.concatenate([-c0[v], [1.0]])
    sol, _, _, _ = np.linalg.lstsq(a_mat, rhs, rcond=1e-10)
    return sol[:size]


def _single_class_equilibrium(m_eff, c0, p_count):
    """First valid support in (size, lex) order, or None."""
    for size in range(1, p_count + 1):
        for support in combinations(range(p_count), size):
            x_v = _solve_support(m_eff, c0, support)
            if x_v is None:
                continue
            if np.any(x_v < -FLOW_CLAMP):
                continue
            x = np.zeros(p_count)
            x[list(support)] = np.maximum(x_v, 0.0)
            if abs(float(x.sum()) - 1.0) > COST_SLACK:
                continue
            lam, ok = _verify_single_class(m_eff, c0, support, x, COST_SLACK)
            if ok:
                return x, lam, frozenset(support)
    return None


def exact_baseline(network: Network, delta: IncidenceMatrix) -> ExactEquilibrium:
    """Exact all-human Wardrop equilibrium for a linear-cost instance.

    Enumerates candidate supports by increasing size (lexicographic within a
    size) and accepts the first one whose equal-cost solution is nonnegative
    and undercuts no off-support path.

    Raises:
        RequiresLinearCosts: If any link has n != 1.
        PathBudgetExceeded: If the instance has more than 20 paths.
        NoValidSupport: If no support passes; not expected for feasible
            linear instances.
    """
    m_path, c0 = _paths_matrices(network, delta)
    p_count = delta.num_paths
    got = _single_class_equilibrium(m_path, c0, p_count)
    if got is None:
        raise NoValidSupport(
            f"no valid human support among {2 ** p_count - 1} candidates"
        )
    x, lam_h, support = got
    ca = 2.0 * (m_path @ x) + c0
    return ExactEquilibrium(
        x_agg=x,
        lambda_h=lam_h,
        lambda_a=float(ca.min()),
        support=SupportPair(v_h=support, v_a=frozenset()),
        split_witness=(x.copy(), np.zeros(p_count)),
    )


def _greedy_split(x, vh_mask, va_mask, alpha):
    """Feasible (x_h, x_a) with x_h supported in v_h and x_a in v_a.

    Autonomous demand is taken from autonomous-only paths first (forced), then
    from shared paths in index order.
    """
    p_count = x.shape[0]
    x_a = np.zeros(p_count)
    for p in range(p_count):
        if va_mask[p] and not vh_mask[p]:
            x_a[p] = x[p]
    rem = alpha - float(x_a.sum())
    for p in range(p_count):
        if rem <= 0.0:
            break
        if va_mask[p] and vh_mask[p]:
            take = min(x[p], rem)
            x_a[p] = take
            rem -= take
    x_h = x - x_a
    np.maximum(x_h, 0.0, out=x_h)
    return x_h, x_a


def exact_mixed(network: Network, delta: IncidenceMatrix, alpha: float) -> ExactEquilibrium:
    """Exact two-class equilibrium for a linear-cost instance.

    Enumerates support pairs (v_h, v_a) ordered by total size, then human
    size, then lexicographically; solves the stacked equal-cost system by
    minimum-norm least squares; verifies nonnegativity, both classes'
    inequality conditions, and that the class demands fit the supports. The
    first valid pair wins. Degenerate stacked systems are skipped implicitly:
    their least-squares solutions fail verification unless they happen to be
    genuine equilibria.

    Raises:
        RequiresLinearCosts, PathBudgetExceeded, NoValidSupport.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    m_path, c0 = _paths_matrices(network, delta)
    p_count = delta.num_paths
    if alpha == 0.0:
        return exact_baseline(network, delta)
    if alpha == 1.0:
        got = _single_class_equilibrium(2.0 * m_path, c0, p_count)
        if got is None:
            raise NoValidSupport(
                f"no valid autonomous support among {2 ** p_count - 1} candidates"
            )
        x, lam_a, support = got
        ch = m_path @ x + c0
        return ExactEquilibrium(
            x_agg=x,
            lambda_h=float(ch.min()),
            lambda_a=lam_a,
            support=SupportPair(v_h=frozenset(), v_a=support),
            split_witness=(np.zeros(p_count), x.copy()),
        )

    found, x, lam_h, lam_a, vh_mask, va_mask, n_tried = kernels.mixed_support_search(
        m_path, c0, alpha, COST_SLACK, FLOW_CLAMP
    )
    if not found:
        raise NoValidSupport(f"no valid support pair among {n_tried} candidates")
    x_h, x_a = _greedy_split(x, vh_mask, va_mask, alpha)
    return ExactEquilibrium(
        x_agg=x,
        lambda_h=float(lam_h),
        lambda_a=float(lam_a),
        support=SupportPair(
            v_h=frozenset(int(p) for p in np.flatnonzero(vh_mask)),
            v_a=frozenset(int(p) for p in np.flatnonzero(va_mask)),
        ),
        split_witness=(x_h, x_a),
    )


def _compositions(total_units: int, parts: int):
    """All vectors of nonnegative ints of given length summing to total_units."""
    if parts == 1:
        yield (total_units,)
        return
    for first in range(total_units + 1):
        for rest in _compositions(total_units - first, parts - 1):
            yield (first,) + rest


def _n_compositions(total_units: int, parts: int) -> int:
    return comb(total_units + parts - 1, parts - 1)


def grid_gap_oracle(
    network: Network,
    delta: IncidenceMatrix,
    alpha: float,
    grid_steps: int,
) -> GridOracleResult:
    """Brute-force VI-gap minimizer over a simplex grid.

    Evaluates every pair of grid points (x_h on the human simplex, x_a on the
    autonomous one) with per-class resolution grid_steps, and returns the pair
    with the smallest gap. Coarse by nature; intended as an independent sanity
    oracle for nonlinear costs where support enumeration does not apply.

    Raises:
        GridBudgetExceeded: If the pair count exceeds 2e6.
        ValueError: If grid_steps is out of range.
    """
    if not 1 <= grid_steps <= 200:
        raise ValueError("grid_steps must lie in [1, 200]")
    p_count = delta.num_paths
    n_pairs = _n_compositions(grid_steps, p_count) ** 2
    if n_pairs > 2_000_000:
        raise GridBudgetExceeded(
            f"{n_pairs} grid pairs exceed the 2e6 evaluation budget"
        )
    k, b, n = cost_arrays(network)
    d = delta.delta

    grid = np.array(list(_compositions(grid_steps, p_count)), dtype=np.float64)
    grid /= grid_steps
    x_h_grid = grid * (1.0 - alpha)
    x_a_grid = grid * alpha
    f_h_grid = x_h_grid @ d.T
    f_a_grid = x_a_grid @ d.T

    best_gap = np.inf
    best_pair = (0, 0)
    n_rows = grid.shape[0]
    for j in range(n_rows):
        f = f_h_grid + f_a_grid[j]
        fp = f**n
        t = k * fp + b
        ch = t @ d
        ca = ((n + 1.0) * k * fp + b) @ d
        gaps = (
            np.einsum("ij,ij->i", ch, x_h_grid)
            - (1.0 - alpha) * ch.min(axis=1)
            + ca @ x_a_grid[j]
            - alpha * ca.min(axis=1)
        )
        i = int(np.argmin(gaps))
        if gaps[i] < best_gap:
            best_gap = float(gaps[i])
            best_pair = (i, j)
    i, j = best_pair
    flow = FlowPattern(x_h=x_h_grid[i], x_a=x_a_grid[j], alpha=alpha)
    return GridOracleResult(
        flow=flow, gap=vi_gap(network, delta, flow), n_evaluated=n_rows * n_rows
    )
