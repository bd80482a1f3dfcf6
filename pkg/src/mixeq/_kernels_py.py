"""Pure-Python reference kernels.

These are the semantic ground truth for the compiled extension in _kernels.pyx:
same branch structure, same tie-breaks, same stopping rules. The compiled
module is preferred at import time by mixeq.kernels; this module must stay
importable with numpy alone so the package works without a C toolchain.
"""

from __future__ import annotations

from itertools import combinations
from typing import List, Optional, Tuple

import numpy as np

BACKEND = "python"

_STALL_LIMIT = 300
_REFRESH_EVERY = 512
_BISECT_ITERS = 80


def potential_value(
    kk: np.ndarray,
    bb: np.ndarray,
    nn: np.ndarray,
    f_fixed: np.ndarray,
    f_own: np.ndarray,
    marginal: bool,
) -> float:
    """Objective minimized by fw_simplex, evaluated at own link flow f_own.

    marginal=False: sum of link travel-time integrals from f_fixed to
    f_fixed + f_own (the congestion potential of the selfish class).
    marginal=True: total travel time at aggregated flow f_fixed + f_own.
    """
    f = f_fixed + f_own
    if marginal:
        return float(f @ (kk * f**nn + bb))
    np1 = nn + 1.0
    return float(np.sum(kk / np1 * (f**np1 - f_fixed**np1) + bb * f_own))


def _grad_path(delta, w, bb, nn, f):
    # path gradient = delta^T (w * f^n + b); f >= 0 so f**n is safe
    return delta.T @ (w * f**nn + bb)


def fw_simplex(
    delta: np.ndarray,
    kk: np.ndarray,
    bb: np.ndarray,
    nn: np.ndarray,
    f_fixed: np.ndarray,
    demand: float,
    marginal: bool,
    x: np.ndarray,
    tol: float,
    max_iter: int,
    trace: Optional[List[float]] = None,
) -> Tuple[float, int, bool]:
    """Away-step Frank-Wolfe on the simplex {x >= 0, sum x = demand}.

    Minimizes the class potential whose path gradient is delta^T c(f_fixed +
    delta x), with c the travel time (marginal=False) or the marginal social
    cost (marginal=True). x is updated in place from its incoming value (warm
    start). Stops when the Frank-Wolfe duality gap drops below
    tol * max(1, |c . x|).

    Returns:
        (gap, iterations, converged) with gap the absolute duality gap at the
        returned x. On non-convergence x holds the best iterate seen.

    The trace argument (reference implementation only) collects the objective
    value at the start of every iteration, for monotonicity checks.
    """
    if demand <= 0.0:
        x[:] = 0.0
        return 0.0, 0, True
    np.maximum(x, 0.0, out=x)
    total = float(x.sum())
    if total <= 0.0:
        x[:] = 0.0
        x[0] = demand
    else:
        x *= demand / total

    w = (nn + 1.0) * kk if marginal else kk
    linear = bool(np.all(nn == 1.0))
    f_own = delta @ x

    best_gap = np.inf
    best_x = x.copy()
    best_iter = 0
    gap = np.inf
    converged = False
    it = 0

    for it in range(1, max_iter + 1):
        if it % _REFRESH_EVERY == 0:
            f_own = delta @ x
        if trace is not None:
            trace.append(potential_value(kk, bb, nn, f_fixed, f_own, marginal))
        c = _grad_path(delta, w, bb, nn, f_fixed + f_own)
        cx = float(c @ x)
        s = int(np.argmin(c))
        gap = cx - demand * c[s]
        if gap < best_gap:
            best_gap = gap
            best_x[:] = x
            best_iter = it
        if gap <= tol * max(1.0, abs(cx)):
            converged = True
            break
        if it - best_iter > _STALL_LIMIT:
            break

        on_support = x > 0.0
        v = int(np.argmax(np.where(on_support, c, -np.inf)))
        gap_away = demand * c[v] - cx

        if gap >= gap_away:
            d_vec = -x.copy()
            d_vec[s] += demand
            g_max = 1.0
            full_fw = True
        else:
            d_vec = x.copy()
            d_vec[v] -= demand
            rest = demand - x[v]
            g_max = x[v] / rest if rest > 1e-300 else 1e12
            full_fw = False

        df = delta @ d_vec
        gap_dir = gap if full_fw else gap_away
        if linear:
            denom = float((w * df) @ df)
            gamma = g_max if denom <= 0.0 else min(gap_dir / denom, g_max)
        else:
            gamma = _exact_step(w, bb, nn, f_fixed + f_own, df, g_max)
        if gamma <= 0.0:
            break

        x += gamma * d_vec
        f_own += gamma * df
        # incremental updates can drift a hair below zero; f**nn with a
        # fractional exponent would turn that into NaN
        np.maximum(f_own, 0.0, out=f_own)
        if full_fw and gamma >= 1.0:
            x[:] = 0.0
            x[s] = demand
            f_own = delta[:, s] * demand
        elif not full_fw and gamma >= g_max * (1.0 - 1e-15):
            x[v] = 0.0
        np.maximum(x, 0.0, out=x)

    if not converged and best_gap < gap:
        x[:] = best_x
        gap = best_gap
    total = float(x.sum())
    if total > 0.0:
        x *= demand / total
    return float(gap), it, converged


def _exact_step(w, bb, nn, f, df, g_max):
    # exact line search: bisect the directional derivative
    # phi'(g) = df . (w * (f + g df)^n + b), increasing in g by convexity
    def dphi(g: float) -> float:
        ff = np.maximum(f + g * df, 0.0)
        return float(df @ (w * ff**nn + bb))

    if dphi(g_max) <= 0.0:
        return g_max
    lo, hi = 0.0, g_max
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if dphi(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mixed_support_search(
    m_path: np.ndarray,
    c0: np.ndarray,
    alpha: float,
    slack: float,
    clamp: float,
) -> Tuple[bool, np.ndarray, float, float, np.ndarray, np.ndarray, int]:
    """Two-class support enumeration for linear path costs.

    Path costs are human ch = m_path x + c0 and autonomous ca = 2 m_path x +
    c0. Candidate support pairs (v_h, v_a) are tried in order of total size,
    then human size, then lexicographic on each side; for each pair the
    stacked equal-cost system is solved by minimum-norm least squares and the
    equilibrium conditions are verified on the clamped solution. The first
    pair that passes wins.

    Returns:
        (found, x_agg, lam_h, lam_a, vh_mask, va_mask, n_tried). Masks are
        uint8. On failure found is False and x_agg is zeros.
    """
    p_count = c0.shape[0]
    n_tried = 0
    for total in range(2, 2 * p_count + 1):
        for size_h in range(max(1, total - p_count), min(p_count, total - 1) + 1):
            size_a = total - size_h
            for vh in combinations(range(p_count), size_h):
                for va in combinations(range(p_count), size_a):
                    n_tried += 1
                    got = _try_pair(m_path, c0, alpha, vh, va, slack, clamp)
                    if got is None:
                        continue
                    x, lam_h, lam_a = got
                    vh_mask = np.zeros(p_count, dtype=np.uint8)
                    va_mask = np.zeros(p_count, dtype=np.uint8)
                    vh_mask[list(vh)] = 1
                    va_mask[list(va)] = 1
                    return True, x, lam_h, lam_a, vh_mask, va_mask, n_tried
    zero = np.zeros(p_count)
    return (
        False,
        zero,
        float("nan"),
        float("nan"),
        np.zeros(p_count, dtype=np.uint8),
        np.zeros(p_count, dtype=np.uint8),
        n_tried,
    )


def _try_pair(m_path, c0, alpha, vh, va, slack, clamp):
    p_count = c0.shape[0]
    support = sorted(set(vh) | set(va))
    n_u = len(support)
    col = {p: j for j, p in enumerate(support)}
    # with no shared path the equal-cost rows leave one degree of freedom,
    # pinned by anchoring the human mass; shared paths make that an
    # inequality instead, checked after solving
    disjoint = n_u == len(vh) + len(va)
    rows = len(vh) + len(va) + 1 + (1 if disjoint else 0)
    a_mat = np.zeros((rows, n_u + 2))
    rhs = np.zeros(rows)
    r = 0
    for p in vh:
        a_mat[r, :n_u] = m_path[p, support]
        a_mat[r, n_u] = -1.0
        rhs[r] = -c0[p]
        r += 1
    for p in va:
        a_mat[r, :n_u] = 2.0 * m_path[p, support]
        a_mat[r, n_u + 1] = -1.0
        rhs[r] = -c0[p]
        r += 1
    a_mat[r, :n_u] = 1.0
    rhs[r] = 1.0
    if disjoint:
        r += 1
        for p in vh:
            a_mat[r, col[p]] = 1.0
        rhs[r] = 1.0 - alpha

    sol, _, _, _ = np.linalg.lstsq(a_mat, rhs, rcond=1e-10)
    x = np.zeros(p_count)
    for p in support:
        v = sol[col[p]]
        if v < -clamp:
            return None
        x[p] = v if v > 0.0 else 0.0
    if abs(float(x.sum()) - 1.0) > slack:
        return None
    mx = m_path @ x
    ch = mx + c0
    ca = 2.0 * mx + c0
    lam_h = float(ch.min())
    lam_a = float(ca.min())
    for p in vh:
        if ch[p] > lam_h + slack:
            return None
    for p in va:
        if ca[p] > lam_a + slack:
            return None
    if float(x[list(vh)].sum()) < (1.0 - alpha) - slack:
        return None
    if float(x[list(va)].sum()) < alpha - slack:
        return None
    return x, lam_h, lam_a
