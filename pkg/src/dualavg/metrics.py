"""Regret accounting and the analytic guarantees to compare against.

The headline guarantee bounds cumulative regret against any fixed feasible
comparator by C * sqrt(T) with

    C = R^2 / k + k L^2 (6 n / (1 - gamma) + 6 n delta nu + 1)

where R bounds the regularizer over the feasible set, L the subgradient
norms, k the step scale, gamma the per-block contraction factor of the
realized mixing sequence, and delta * nu the information horizon. The
running-average variant doubles the constant; the time-averaged
convergence-rate form divides by T.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "MetricsError",
    "BoundInputs",
    "regret_coefficient",
    "regret_bound",
    "regret_series",
    "network_error_bound",
    "deviation_series",
    "closed_form_deviation_bound",
    "gamma_closed_form_bound",
]


class MetricsError(ValueError):
    """Invalid bound inputs."""


@dataclass(frozen=True)
class BoundInputs:
    """Constants feeding the regret guarantee."""

    R: float
    L: float
    k: float
    n: int
    gamma: float
    nu: int
    delta: int = 1

    def __post_init__(self) -> None:
        if not (self.R > 0 and self.L > 0 and self.k > 0):
            raise MetricsError("R, L, k must all be positive")
        if self.n < 1 or self.nu < 1 or self.delta < 1:
            raise MetricsError("n, nu, delta must all be >= 1")
        if not (0.0 <= self.gamma < 1.0):
            raise MetricsError(
                f"need contraction factor in [0, 1), got gamma={self.gamma}"
            )


def regret_coefficient(b: BoundInputs) -> float:
    """The sqrt(T) multiplier C."""
    network = 6.0 * b.n / (1.0 - b.gamma) + 6.0 * b.n * b.delta * b.nu + 1.0
    return b.R ** 2 / b.k + b.k * b.L ** 2 * network


def regret_bound(b: BoundInputs, horizon: int, variant: str = "individual") -> float:
    """Guarantee value at the given horizon.

    variant: "individual" gives C sqrt(T) for the per-round decisions,
    "average" doubles it for the running-average decisions, and "rate" gives
    the time-averaged form C / sqrt(T).
    """
    if horizon < 1:
        raise MetricsError(f"horizon must be >= 1, got {horizon}")
    c = regret_coefficient(b)
    if variant == "individual":
        return c * np.sqrt(horizon)
    if variant == "average":
        return 2.0 * c * np.sqrt(horizon)
    if variant == "rate":
        return c / np.sqrt(horizon)
    raise MetricsError(f"unknown variant {variant!r}")


def regret_series(
    costs_at_decisions: np.ndarray, costs_at_comparator: np.ndarray
) -> np.ndarray:
    """Cumulative regret per agent.

    costs_at_decisions : (T, n) global cost evaluated at each agent's
    decision each round; costs_at_comparator : (T,) global cost at the fixed
    comparator. Returns the (T, n) running sums of the differences.
    """
    costs_at_decisions = np.asarray(costs_at_decisions, dtype=float)
    costs_at_comparator = np.asarray(costs_at_comparator, dtype=float)
    if costs_at_decisions.shape[0] != costs_at_comparator.shape[0]:
        raise MetricsError("round counts differ between decisions and comparator")
    return np.cumsum(costs_at_decisions - costs_at_comparator[:, None], axis=0)


# ---- Network deviation audits ----

def network_error_bound(
    L: float,
    p_seq: Sequence[np.ndarray],
    pi: np.ndarray,
    t: int,
) -> np.ndarray:
    """Per-agent deviation ceiling at round t from the realized matrices.

    For duals started at zero on 1-based rounds,

        ||ybar(t) - y_i(t)|| <= L * sum_{k=1}^{t-2} sum_j |B_ij(t-1, k+1) - pi_j| + 2 L

    where B(t-1, k+1) = P(t-1) ... P(k+1) is the interval backward product
    (identity when k = t-2... exclusive of the round-k matrix). Rounds t <= 2
    get the bare 2L term. p_seq[s] must hold the matrix of round s+1.
    """
    pi = np.asarray(pi, dtype=float)
    n = pi.shape[0]
    if t < 1:
        raise MetricsError(f"rounds are 1-based, got t={t}")
    total = np.zeros(n)
    if t > 2:
        if len(p_seq) < t - 1:
            raise MetricsError(f"need matrices through round {t - 1}, got {len(p_seq)}")
        # walk k downward, extending the product on the right one factor at a time
        prod = np.asarray(p_seq[t - 2], dtype=float).copy()  # P(t-1)
        for k in range(t - 2, 0, -1):
            # prod currently holds B(t-1, k+1)
            total += np.abs(prod - pi[None, :]).sum(axis=1)
            if k > 1:
                prod = prod @ np.asarray(p_seq[k - 1], dtype=float)  # append P(k)
    return L * total + 2.0 * L


def deviation_series(y_hist: np.ndarray, g_hist: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """|| ybar(t) - y_i(t) || per round and agent, with ybar built by the
    recursion ybar(next) = ybar + gbar from the recorded subgradients.

    y_hist : (T, n, d) duals entering each round; g_hist : (T, n, d)
    subgradients of each round. The recursion form is exactly the reference
    sequence the deviation guarantee is stated for, and is valid for any
    fixed probability vector pi.
    """
    y_hist = np.asarray(y_hist, dtype=float)
    g_hist = np.asarray(g_hist, dtype=float)
    pi = np.asarray(pi, dtype=float)
    g_bar = np.einsum("i,tid->td", pi, g_hist)
    y_bar = np.zeros_like(g_bar)
    y_bar[1:] = np.cumsum(g_bar[:-1], axis=0)
    return np.linalg.norm(y_hist - y_bar[:, None, :], axis=2)


def closed_form_deviation_bound(
    L: float, n: int, gamma: float, delta: int, nu: int
) -> float:
    """Horizon-free deviation ceiling n L (1 / (1 - gamma) + delta nu - 1) + 2 L.

    Geometric-sum relaxation of the exact audit; cheap enough to stamp on
    every trace row.
    """
    if not (0.0 <= gamma < 1.0):
        raise MetricsError(f"need gamma in [0, 1), got {gamma}")
    return n * L * (1.0 / (1.0 - gamma) + delta * nu - 1.0) + 2.0 * L


def gamma_closed_form_bound(n: int, max_in_neighborhood: int, delta: int, nu: int) -> float:
    """Closed-form contraction diagnostic 1 - n / (max_i |N(i)| + 1)^(delta nu).

    Reported for comparison only: the derivation behind it is shaky and the
    value can be vacuous (<= 0 when neighborhoods are small), so nothing in
    the package asserts against it.
    """
    if n < 1 or max_in_neighborhood < 0 or delta < 1 or nu < 1:
        raise MetricsError("invalid closed-form inputs")
    return 1.0 - n / float((max_in_neighborhood + 1) ** (delta * nu))
