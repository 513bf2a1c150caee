"""Distributed dual averaging over a mixing matrix sequence.

Each round, every agent averages its in-neighbors' dual variables with its
row of the communication matrix, adds its own fresh subgradient, and maps the
dual back to a primal decision through a regularized projection:

    y_i(t+1) = sum_j P[i, j](t) * y_j(t) + g_i(t)
    x_i(t+1) = argmin_{x in X} ( <y_i(t+1), x> + psi(x) / alpha(t) )

with psi(x) = ||x||^2 / 2 and step sizes alpha(t) = k / sqrt(t). Rounds are
1-based; duals start at zero, so the first decision of every agent is the
origin (which all feasible sets here contain).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence, Tuple

import numpy as np

from .graphs import WeightedDigraph

__all__ = [
    "EngineError",
    "FeasibleSet",
    "StepSchedule",
    "AgentState",
    "LossOracle",
    "project",
    "dwda_round",
    "running_average",
    "check_mixing_convention",
    "CentralReference",
    "central_reference",
    "deviation",
]


class EngineError(ValueError):
    """Invalid engine parameters or inputs."""


# ---- Feasible sets ----

@dataclass(frozen=True)
class FeasibleSet:
    """Euclidean ball or axis-aligned box, both containing the origin.

    kind : "ball" or "box".
    radius : ball radius r > 0 (ball only).
    lo, hi : per-coordinate bounds with lo <= 0 <= hi (box only).
    """

    kind: str
    dim: int
    radius: Optional[float] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    @staticmethod
    def ball(radius: float, dim: int) -> "FeasibleSet":
        if not (radius > 0):
            raise EngineError(f"ball radius must be positive, got {radius}")
        return FeasibleSet(kind="ball", dim=dim, radius=float(radius))

    @staticmethod
    def box(lo: Sequence[float], hi: Sequence[float]) -> "FeasibleSet":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise EngineError("box needs matching 1-d bound vectors")
        if np.any(lo > 0) or np.any(hi < 0):
            raise EngineError("box must contain the origin (lo <= 0 <= hi)")
        if np.any(lo >= hi):
            raise EngineError("box needs lo < hi in every coordinate")
        return FeasibleSet(kind="box", dim=lo.shape[0], lo=lo, hi=hi)

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            return bool(np.linalg.norm(x, axis=-1).max() <= self.radius + tol)
        ok_lo = np.all(x >= self.lo - tol)
        ok_hi = np.all(x <= self.hi + tol)
        return bool(ok_lo and ok_hi)

    def euclidean_projection(self, x: np.ndarray) -> np.ndarray:
        """Nearest feasible point (used for comparator points, not the engine)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            nrm = np.linalg.norm(x)
            if nrm <= self.radius:
                return x.copy()
            return x * (self.radius / nrm)
        return np.clip(x, self.lo, self.hi)


def project(y: np.ndarray, alpha: float, chi: FeasibleSet) -> np.ndarray:
    """Regularized projection argmin_{x in X} <y, x> + ||x||^2 / (2 alpha).

    Closed forms: the unconstrained minimizer is -alpha * y; the ball clips
    its norm at r along the same ray, the box clamps per coordinate. Accepts
    a single vector or a batch with trailing dimension chi.dim.
    """
    if not (alpha > 0):
        raise EngineError(f"alpha must be positive, got {alpha}")
    y = np.asarray(y, dtype=float)
    raw = -alpha * y
    if chi.kind == "ball":
        nrm = np.linalg.norm(raw, axis=-1, keepdims=True)
        scale = np.ones_like(nrm)
        over = nrm > chi.radius
        # avoid 0/0 at the origin; overshoot rows rescale onto the sphere
        scale = np.where(over, chi.radius / np.where(nrm > 0, nrm, 1.0), 1.0)
        return raw * scale
    return np.clip(raw, chi.lo, chi.hi)


# ---- Step schedule ----

@dataclass(frozen=True)
class StepSchedule:
    """alpha(t) = k / sqrt(t), t >= 1."""

    k: float

    def __post_init__(self) -> None:
        if not (self.k > 0):
            raise EngineError(f"step scale k must be positive, got {self.k}")

    def alpha(self, t: int) -> float:
        if t < 1:
            raise EngineError(f"rounds are 1-based, got t={t}")
        return self.k / np.sqrt(t)


# ---- Per-agent state and the round map ----

@dataclass
class AgentState:
    """Dual variable, current decision, and running decision average."""

    y: np.ndarray
    x: np.ndarray
    x_avg: np.ndarray


class LossOracle(Protocol):
    """Local loss interface the engine pulls from each round."""

    def loss(self, t: int, i: int, x: np.ndarray) -> float: ...

    def subgradient(self, t: int, i: int, x: np.ndarray) -> np.ndarray: ...

    def lipschitz(self) -> float: ...


def dwda_round(
    y: np.ndarray,
    g: np.ndarray,
    p: np.ndarray,
    t: int,
    sched: StepSchedule,
    chi: FeasibleSet,
) -> Tuple[np.ndarray, np.ndarray]:
    """One synchronized round for all agents.

    y, g : (n, d) current duals and fresh subgradients.
    p : (n, n) row-stochastic mixing matrix for this round.
    Returns (y_next, x_next), both (n, d).
    """
    y = np.asarray(y, dtype=float)
    g = np.asarray(g, dtype=float)
    if y.shape != g.shape:
        raise EngineError(f"dual/subgradient shape mismatch: {y.shape} vs {g.shape}")
    y_next = p @ y + g
    x_next = project(y_next, sched.alpha(t), chi)
    return y_next, x_next


def running_average(x_avg: np.ndarray, x_new: np.ndarray, t_new: int) -> np.ndarray:
    """Average of the first t_new decisions from the previous average.

    x_avg holds the mean of decisions 1..t_new-1; the identity
    avg_new = ((t_new - 1) * avg_old + x_new) / t_new folds in the t_new-th.
    """
    if t_new < 1:
        raise EngineError(f"t_new must be >= 1, got {t_new}")
    if t_new == 1:
        return np.asarray(x_new, dtype=float).copy()
    return ((t_new - 1) * x_avg + x_new) / t_new


def check_mixing_convention(p: np.ndarray, pattern: Optional[WeightedDigraph] = None,
                            tol: float = 1e-12) -> bool:
    """True iff p is row stochastic with positive diagonal and, when a
    topology is given, supported on in-neighborhoods plus self."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        return False
    if np.any(p < -tol) or np.abs(p.sum(axis=1) - 1.0).max() > tol:
        return False
    if np.any(np.diag(p) <= 0):
        return False
    if pattern is not None:
        allowed = pattern.adjacency() > 0
        np.fill_diagonal(allowed, True)
        if np.any((p > tol) & ~allowed):
            return False
    return True


# ---- Network-average reference ----

@dataclass
class CentralReference:
    """pi-weighted averages of the recorded run.

    y_bar[t], g_bar[t] : weighted dual and subgradient averages per round.
    phi[t] : projection of y_bar[t] with the step used to produce round-t
    decisions, phi[t] = project(y_bar[t], alpha(t-1)) for t >= 2.
    recursion_residual[t] : || y_bar[t+1] - y_bar[t] - g_bar[t] ||, zero up to
    rounding when pi is exactly invariant for every matrix in the sequence.
    """

    y_bar: np.ndarray
    g_bar: np.ndarray
    phi: np.ndarray
    recursion_residual: np.ndarray


def central_reference(
    y_hist: np.ndarray,
    g_hist: np.ndarray,
    pi: np.ndarray,
    sched: StepSchedule,
    chi: FeasibleSet,
) -> CentralReference:
    """Collapse a recorded run onto the pi-weighted average trajectory.

    y_hist : (T, n, d) duals entering each round (y_hist[0] is all zeros).
    g_hist : (T, n, d) subgradients drawn each round.
    """
    y_hist = np.asarray(y_hist, dtype=float)
    g_hist = np.asarray(g_hist, dtype=float)
    pi = np.asarray(pi, dtype=float)
    T = y_hist.shape[0]
    y_bar = np.einsum("i,tid->td", pi, y_hist)
    g_bar = np.einsum("i,tid->td", pi, g_hist)
    phi = np.zeros_like(y_bar)
    for t in range(1, T):
        phi[t] = project(y_bar[t], sched.alpha(t), chi)
    resid = np.zeros(T)
    for t in range(T - 1):
        resid[t] = np.linalg.norm(y_bar[t + 1] - y_bar[t] - g_bar[t])
    return CentralReference(y_bar=y_bar, g_bar=g_bar, phi=phi, recursion_residual=resid)


def deviation(y: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Per-agent distance || sum_j pi_j y_j - y_i ||_2 at one time point."""
    y = np.asarray(y, dtype=float)
    pi = np.asarray(pi, dtype=float)
    y_bar = pi @ y
    return np.linalg.norm(y - y_bar[None, :], axis=1)
