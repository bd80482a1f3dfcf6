"""Mixed-autonomy equilibrium solver.

Equilibria are characterized by a variational inequality over two demand
simplices: selfish agents see travel times, altruistic agents see marginal
social costs. solve_mixed alternates the two single-class subproblems
(Gauss-Seidel relaxation), each handled by an away-step Frank-Wolfe kernel,
and certifies the result with a VI gap. Convergence of the relaxation is not
guaranteed in general; non-convergence is reported, never masked.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from mixeq import kernels
from mixeq.costs import cost_arrays
from mixeq.errors import DimensionMismatch, InfeasibleFlow
from mixeq.netmodel import IncidenceMatrix, Network

__all__ = [
    "FlowPattern",
    "EquilibriumResult",
    "SolverConfig",
    "UniquenessReport",
    "all_or_nothing",
    "frank_wolfe_human",
    "frank_wolfe_auto",
    "solve_mixed",
    "vi_gap",
    "multi_start_uniqueness_check",
]

_FEAS_TOL = 1e-12

INIT_MODES = ("free_flow_aon", "all_on_first_path", "uniform", "given")


@dataclass(frozen=True, eq=False)
class FlowPattern:
    """Feasible two-class path flow pattern.

    Attributes:
        x_h: Human path flows, length P, nonnegative, summing to 1 - alpha.
        x_a: Autonomous path flows, length P, nonnegative, summing to alpha.
        alpha: Autonomous demand share (the sum of x_a).
    """

    x_h: np.ndarray
    x_a: np.ndarray
    alpha: float

    def __post_init__(self) -> None:
        x_h = np.ascontiguousarray(self.x_h, dtype=np.float64)
        x_a = np.ascontiguousarray(self.x_a, dtype=np.float64)
        if x_h.shape != x_a.shape or x_h.ndim != 1:
            raise DimensionMismatch("x_h and x_a must be 1-d vectors of equal length")
        if np.any(x_h < -_FEAS_TOL) or np.any(x_a < -_FEAS_TOL):
            raise InfeasibleFlow("negative path flow")
        if abs(float(x_h.sum()) - (1.0 - self.alpha)) > 1e-9:
            raise InfeasibleFlow(
                f"human flow sums to {float(x_h.sum())}, expected {1.0 - self.alpha}"
            )
        if abs(float(x_a.sum()) - self.alpha) > 1e-9:
            raise InfeasibleFlow(
                f"autonomous flow sums to {float(x_a.sum())}, expected {self.alpha}"
            )
        x_h.flags.writeable = False
        x_a.flags.writeable = False
        object.__setattr__(self, "x_h", x_h)
        object.__setattr__(self, "x_a", x_a)

    @property
    def x_agg(self) -> np.ndarray:
        return self.x_h + self.x_a

    def link_flows(self, delta: IncidenceMatrix) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(f_h, f_a, f) link flow vectors under the given incidence matrix."""
        f_h = delta.delta @ self.x_h
        f_a = delta.delta @ self.x_a
        return f_h, f_a, f_h + f_a


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Solver output.

    Attributes:
        flow: The returned flow pattern.
        lambda_h: Minimum human path cost at the returned flow.
        lambda_a: Minimum autonomous path cost at the returned flow.
        social: Total travel time.
        gap: Absolute VI gap at the returned flow.
        iterations: Outer relaxation iterations performed.
        converged: Whether the relative gap criterion was met.
    """

    flow: FlowPattern
    lambda_h: float
    lambda_a: float
    social: float
    gap: float
    iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class SolverConfig:
    """Knobs for solve_mixed and the single-class subsolvers.

    outer_tol and inner_tol are relative tolerances (against the social cost
    and the gradient-flow product respectively). init selects the starting
    point: all-or-nothing on free-flow costs (default), everything on the
    first path, uniform, or vectors supplied in x_h0/x_a0.
    """

    alpha: float
    outer_tol: float = 1e-8
    inner_tol: float = 1e-10
    # near-degenerate class splits can take >1000 sweeps to settle
    max_outer: int = 4000
    max_inner: int = 5000
    init: str = "free_flow_aon"
    x_h0: Optional[np.ndarray] = None
    x_a0: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not (self.outer_tol > 0.0 and self.inner_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.init == "given" and (self.x_h0 is None or self.x_a0 is None):
            raise ValueError("init='given' requires x_h0 and x_a0")


@dataclass(frozen=True)
class UniquenessReport:
    """Spread of equilibria across random restarts."""

    max_f_deviation: float
    max_s_deviation: float
    n_converged: int
    n_runs: int


def all_or_nothing(delta: IncidenceMatrix, link_costs: np.ndarray, demand: float) -> np.ndarray:
    """All demand on the cheapest path under the given link costs.

    Ties break to the lowest path index.
    """
    if demand < 0.0:
        raise ValueError("demand must be nonnegative")
    c = delta.delta.T @ np.asarray(link_costs, dtype=np.float64)
    x = np.zeros(delta.num_paths)
    x[int(np.argmin(c))] = demand
    return x


def _initial_split(network, delta, cfg):
    """Starting (x_h, x_a) per cfg.init; always exactly feasible."""
    p_count = delta.num_paths
    alpha = cfg.alpha
    if cfg.init == "given":
        x_h = np.asarray(cfg.x_h0, dtype=np.float64).copy()
        x_a = np.asarray(cfg.x_a0, dtype=np.float64).copy()
        if x_h.shape != (p_count,) or x_a.shape != (p_count,):
            raise DimensionMismatch("x_h0/x_a0 must have one entry per path")
        for vec, target in ((x_h, 1.0 - alpha), (x_a, alpha)):
            np.maximum(vec, 0.0, out=vec)
            s = float(vec.sum())
            if target == 0.0:
                vec[:] = 0.0
            elif s <= 0.0:
                vec[:] = 0.0
                vec[0] = target
            else:
                vec *= target / s
        return x_h, x_a
    if cfg.init == "uniform":
        x_h = np.full(p_count, (1.0 - alpha) / p_count)
        x_a = np.full(p_count, alpha / p_count)
        return x_h, x_a
    if cfg.init == "all_on_first_path":
        x_h = np.zeros(p_count)
        x_a = np.zeros(p_count)
        x_h[0] = 1.0 - alpha
        x_a[0] = alpha
        return x_h, x_a
    # free-flow all-or-nothing: both classes rank paths by delta^T b at f = 0
    _, b, _ = cost_arrays(network)
    x_h = all_or_nothing(delta, b, 1.0 - alpha)
    x_a = all_or_nothing(delta, b, alpha)
    return x_h, x_a


def frank_wolfe_human(
    network: Network,
    delta: IncidenceMatrix,
    f_a_fixed: np.ndarray,
    demand: float,
    cfg: SolverConfig,
) -> np.ndarray:
    """Selfish-class best response: Wardrop flow against fixed autonomous flow.

    Minimizes the travel-time potential over {x >= 0, sum x = demand} to a
    relative duality gap of cfg.inner_tol. Returns the best iterate found even
    when the iteration cap is hit.
    """
    k, b, n = cost_arrays(network)
    x = _single_class_start(network, delta, cfg, demand, human=True)
    kernels.fw_simplex(
        delta.delta, k, b, n, np.asarray(f_a_fixed, dtype=np.float64), demand,
        False, x, cfg.inner_tol, cfg.max_inner,
    )
    return x


def frank_wolfe_auto(
    network: Network,
    delta: IncidenceMatrix,
    f_h_fixed: np.ndarray,
    demand: float,
    cfg: SolverConfig,
) -> np.ndarray:
    """Altruistic-class best response: minimizes total travel time.

    Equivalently a Wardrop assignment under marginal social costs.
    """
    k, b, n = cost_arrays(network)
    x = _single_class_start(network, delta, cfg, demand, human=False)
    kernels.fw_simplex(
        delta.delta, k, b, n, np.asarray(f_h_fixed, dtype=np.float64), demand,
        True, x, cfg.inner_tol, cfg.max_inner,
    )
    return x


def _single_class_start(network, delta, cfg, demand, human):
    if cfg.init == "given":
        given = cfg.x_h0 if human else cfg.x_a0
        if given is not None:
            x = np.asarray(given, dtype=np.float64).copy()
            if x.shape != (delta.num_paths,):
                raise DimensionMismatch("start vector must have one entry per path")
            return x
    if cfg.init == "uniform":
        return np.full(delta.num_paths, demand / delta.num_paths)
    if cfg.init == "all_on_first_path":
        x = np.zeros(delta.num_paths)
        x[0] = demand
        return x
    _, b, _ = cost_arrays(network)
    return all_or_nothing(delta, b, demand)


def _gap_terms(network, delta, x_h, x_a):
    """(gap, lambda_h, lambda_a, social) at the given path flows."""
    k, b, n = cost_arrays(network)
    d = delta.delta
    f = d @ (x_h + x_a)
    fp = f**n
    t = k * fp + b
    ch = d.T @ t
    ca = d.T @ ((n + 1.0) * k * fp + b)
    lam_h = float(ch.min())
    lam_a = float(ca.min())
    demand_h = float(x_h.sum())
    demand_a = float(x_a.sum())
    gap = float(ch @ x_h) - demand_h * lam_h + float(ca @ x_a) - demand_a * lam_a
    social = float(f @ t)
    return gap, lam_h, lam_a, social


def solve_mixed(network: Network, delta: IncidenceMatrix, cfg: SolverConfig) -> EquilibriumResult:
    """Equilibrium of the two-class VI by Gauss-Seidel relaxation.

    Alternates the human and autonomous best responses until the combined VI
    gap falls below cfg.outer_tol relative to the current social cost, or
    cfg.max_outer sweeps elapse. Non-convergence is reported through the
    converged flag; the best iterate seen (by gap) is returned either way.
    """
    k, b, n = cost_arrays(network)
    d = delta.delta
    x_h, x_a = _initial_split(network, delta, cfg)

    best = None
    gap = np.inf
    outer = 0
    converged = False
    for outer in range(1, cfg.max_outer + 1):
        kernels.fw_simplex(
            d, k, b, n, d @ x_a, 1.0 - cfg.alpha, False, x_h, cfg.inner_tol, cfg.max_inner
        )
        kernels.fw_simplex(
            d, k, b, n, d @ x_h, cfg.alpha, True, x_a, cfg.inner_tol, cfg.max_inner
        )
        gap, lam_h, lam_a, social = _gap_terms(network, delta, x_h, x_a)
        if best is None or gap < best[0]:
            best = (gap, lam_h, lam_a, social, x_h.copy(), x_a.copy(), outer)
        if gap <= cfg.outer_tol * social:
            converged = True
            break

    gap, lam_h, lam_a, social, x_h, x_a, _ = best
    flow = FlowPattern(x_h=x_h, x_a=x_a, alpha=cfg.alpha)
    return EquilibriumResult(
        flow=flow,
        lambda_h=lam_h,
        lambda_a=lam_a,
        social=social,
        gap=gap,
        iterations=outer,
        converged=converged,
    )


def vi_gap(network: Network, delta: IncidenceMatrix, flow: FlowPattern) -> float:
    """VI gap of a feasible flow; zero exactly at equilibrium.

    Computed as c_H(f) . f_h - (1-alpha) min_p C_p_H + c_A(f) . f_a -
    alpha min_p C_p_A, which is the maximum of c(f) . (f - f') over feasible
    f' because the feasible set is a product of two scaled simplices.

    Raises:
        InfeasibleFlow: If demand sums are off by more than 1e-9.
    """
    demand_h = float(flow.x_h.sum())
    demand_a = float(flow.x_a.sum())
    if abs(demand_h - (1.0 - flow.alpha)) > 1e-9 or abs(demand_a - flow.alpha) > 1e-9:
        raise InfeasibleFlow("class demand sums violated beyond 1e-9")
    if flow.x_h.shape[0] != delta.num_paths:
        raise DimensionMismatch("flow length does not match path count")
    gap, _, _, _ = _gap_terms(network, delta, flow.x_h, flow.x_a)
    # nonnegative by construction up to rounding
    return max(gap, 0.0)


def multi_start_uniqueness_check(
    network: Network,
    delta: IncidenceMatrix,
    cfg: SolverConfig,
    n_starts: int = 10,
    seed: int = 0,
) -> UniquenessReport:
    """Empirical uniqueness probe: spread of equilibria over random starts.

    Draws n_starts feasible initializations (independent uniforms, normalized
    per class), solves each, and reports the maximum pairwise deviation of
    aggregated link flows (max norm) and of social cost among converged runs.
    Non-converged runs are excluded and show up in n_converged.
    """
    rng = np.random.default_rng(seed)
    p_count = delta.num_paths
    flows = []
    socials = []
    n_converged = 0
    for _ in range(n_starts):
        u_h = rng.uniform(size=p_count)
        u_a = rng.uniform(size=p_count)
        start = replace(
            cfg,
            init="given",
            x_h0=(1.0 - cfg.alpha) * u_h / u_h.sum(),
            x_a0=cfg.alpha * u_a / u_a.sum(),
        )
        res = solve_mixed(network, delta, start)
        if not res.converged:
            continue
        n_converged += 1
        _, _, f = res.flow.link_flows(delta)
        flows.append(f)
        socials.append(res.social)
    max_f = 0.0
    max_s = 0.0
    for i in range(len(flows)):
        for j in range(i + 1, len(flows)):
            max_f = max(max_f, float(np.max(np.abs(flows[i] - flows[j]))))
            max_s = max(max_s, abs(socials[i] - socials[j]))
    return UniquenessReport(
        max_f_deviation=max_f,
        max_s_deviation=max_s,
        n_converged=n_converged,
        n_runs=n_starts,
    )
