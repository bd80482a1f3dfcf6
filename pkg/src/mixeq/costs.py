"""Link travel times, marginal social costs, and path-level cost evaluation.

The canonical cost model is the polynomial family t(f) = k * f**n + b with
k > 0, b >= 0, n >= 1. BPR-style parameters (t0, m, theta, beta) are converted
to this form on construction via k = t0 * theta / m**beta, n = beta, b = t0.

Two agent classes perceive different link costs at aggregated flow f:

* selfish (human) agents see the travel time t(f);
* altruistic (autonomous) agents see the marginal social cost
  t(f) + f * t'(f) = (n + 1) * k * f**n + b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Tuple

import numpy as np

from mixeq.errors import DimensionMismatch

if TYPE_CHECKING:
    from mixeq.netmodel import IncidenceMatrix, Network

__all__ = [
    "CostParams",
    "ClassCosts",
    "travel_time",
    "marginal_cost",
    "cost_arrays",
    "class_link_costs",
    "path_costs",
    "social_cost",
    "beckmann_human",
]


@dataclass(frozen=True)
class CostParams:
    """Polynomial link cost t(f) = k * f**n + b.

    Attributes:
        k: Congestion coefficient, time per unit flow**n. Must be positive.
        b: Free-flow travel time. Must be nonnegative.
        n: Congestion exponent. Must be at least 1.
    """

    k: float
    b: float
    n: float = 1.0

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise ValueError(f"cost coefficient k must be positive, got {self.k}")
        if not self.b >= 0:
            raise ValueError(f"free-flow time b must be nonnegative, got {self.b}")
        if not self.n >= 1:
            raise ValueError(f"cost exponent n must be at least 1, got {self.n}")

    @classmethod
    def polynomial(cls, k: float, b: float, n: float = 1.0) -> "CostParams":
        """Build directly from polynomial parameters."""
        return cls(k=float(k), b=float(b), n=float(n))

    @classmethod
    def bpr(cls, t0: float, m: float, theta: float, beta: float) -> "CostParams":
        """Convert BPR parameters t0 * (1 + theta * (f/m)**beta) to polynomial form.

        Args:
            t0: Free-flow travel time, positive.
            m: Link capacity, positive.
            theta: Congestion scaling, nonnegative.
            beta: Congestion exponent, at least 1.

        Returns:
            The equivalent polynomial CostParams with
            k = t0 * theta / m**beta, b = t0, n = beta.
        """
        if not t0 > 0:
            raise ValueError(f"bpr t0 must be positive, got {t0}")
        if not m > 0:
            raise ValueError(f"bpr capacity m must be positive, got {m}")
        if not theta >= 0:
            raise ValueError(f"bpr theta must be nonnegative, got {theta}")
        if not beta >= 1:
            raise ValueError(f"bpr beta must be at least 1, got {beta}")
        return cls(k=float(t0) * float(theta) / float(m) ** float(beta), b=float(t0), n=float(beta))


@dataclass(frozen=True, eq=False)
class ClassCosts:
    """Per-class cost vectors over one index set (links or paths).

    Attributes:
        human: Travel-time costs seen by the selfish class.
        auto: Marginal social costs seen by the altruistic class.
    """

    human: np.ndarray
    auto: np.ndarray


def _pow(f: float, n: float) -> float:
    # explicit zero branch so non-integer exponents cannot produce NaN at f = 0
    if f == 0.0:
        return 0.0
    if n == 1.0:
        return f
    return math.pow(f, n)


def travel_time(cost: CostParams, f: float) -> float:
    """Travel time k * f**n + b at nonnegative link flow f."""
    if f < 0:
        raise ValueError(f"link flow must be nonnegative, got {f}")
    return cost.k * _pow(f, cost.n) + cost.b


def marginal_cost(cost: CostParams, f: float) -> float:
    """Marginal social cost t(f) + f * t'(f) = (n + 1) * k * f**n + b."""
    if f < 0:
        raise ValueError(f"link flow must be nonnegative, got {f}")
    return (cost.n + 1.0) * cost.k * _pow(f, cost.n) + cost.b


# ---------------------------------------------------------------------------
# vectorized evaluation over a network
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def cost_arrays(network: "Network") -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Extract read-only (k, b, n) float arrays in link order."""
    k = np.array([lk.cost.k for lk in network.links], dtype=np.float64)
    b = np.array([lk.cost.b for lk in network.links], dtype=np.float64)
    n = np.array([lk.cost.n for lk in network.links], dtype=np.float64)
    for arr in (k, b, n):
        arr.flags.writeable = False
    return k, b, n


def _pow_vec(f: np.ndarray, n: np.ndarray) -> np.ndarray:
    # power with the same zero branch as the scalar path
    out = np.where(f == 0.0, 0.0, np.power(np.maximum(f, 1e-300), n))
    return out


def class_link_costs(network: "Network", f: np.ndarray) -> ClassCosts:
    """Evaluate both classes' link costs at aggregated link flow f."""
    k, b, n = cost_arrays(network)
    f = np.asarray(f, dtype=np.float64)
    if f.shape != k.shape:
        raise DimensionMismatch(f"expected {k.shape[0]} link flows, got shape {f.shape}")
    fp = _pow_vec(f, n)
    human = k * fp + b
    auto = (n + 1.0) * k * fp + b
    return ClassCosts(human=human, auto=auto)


def path_costs(network: "Network", delta: "IncidenceMatrix", f: np.ndarray) -> ClassCosts:
    """Path costs for both classes at aggregated link flow f.

    Args:
        network: The network whose links define the cost parameters.
        delta: Link-path incidence matrix aligned with the network link order.
        f: Aggregated link flow vector, length L, nonnegative.

    Returns:
        ClassCosts with length-P vectors: human = delta.T @ c_human and
        auto = delta.T @ c_auto.

    Raises:
        DimensionMismatch: If f or delta does not match the network layout.
    """
    link = class_link_costs(network, f)
    d = delta.delta
    if d.shape[0] != link.human.shape[0]:
        raise DimensionMismatch(
            f"incidence has {d.shape[0]} link rows, network has {link.human.shape[0]} links"
        )
    return ClassCosts(human=d.T @ link.human, auto=d.T @ link.auto)


def social_cost(network: "Network", f: np.ndarray) -> float:
    """Total travel time sum_a f_a * t_a(f_a) at aggregated link flow f."""
    k, b, n = cost_arrays(network)
    f = np.asarray(f, dtype=np.float64)
    if f.shape != k.shape:
        raise DimensionMismatch(f"expected {k.shape[0]} link flows, got shape {f.shape}")
    return float(f @ (k * _pow_vec(f, n) + b))


def beckmann_human(network: "Network", f_h: np.ndarray, f_a_fixed: np.ndarray) -> float:
    """Congestion potential whose minimizer is the selfish-class response.

    Evaluates sum_a of the integral of t_a from f_a_fixed[a] to
    f_a_fixed[a] + f_h[a], in closed form per link:
    k/(n+1) * ((F + f_h)**(n+1) - F**(n+1)) + b * f_h.
    """
    k, b, n = cost_arrays(network)
    f_h = np.asarray(f_h, dtype=np.float64)
    f_a_fixed = np.asarray(f_a_fixed, dtype=np.float64)
    if f_h.shape != k.shape or f_a_fixed.shape != k.shape:
        raise DimensionMismatch("link flow vectors must match the network link count")
    total = f_h + f_a_fixed
    np1 = n + 1.0
    return float(np.sum(k / np1 * (_pow_vec(total, np1) - _pow_vec(f_a_fixed, np1)) + b * f_h))
