"""Adaptive edge weighting by multiplicative (exponential) loss updates.

Each agent runs one allocator over the experts it can hear from (its
in-neighbors plus itself). Observed experts have their weights multiplied by
beta raised to the capped normalized loss; unobserved experts keep their
weights. The mixing row an agent uses each round is its weight vector
restricted to the currently active experts and renormalized, which makes the
assembled communication matrix row stochastic with a positive diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graphs import WeightedDigraph

__all__ = [
    "AllocationError",
    "AllocatorState",
    "new_allocator",
    "update_weights",
    "distribution",
    "assemble_comm_matrix",
    "allocation_regret",
    "allocation_regret_bound",
    "hedge_beta",
    "WeightBank",
    "UNDERFLOW_FLOOR",
]

UNDERFLOW_FLOOR = 1e-150


class AllocationError(ValueError):
    """Degenerate weights or invalid allocator parameters."""


@dataclass(frozen=True)
class AllocatorState:
    """One agent's view: a positive weight per potential expert.

    owner : the agent index (always an admissible expert for itself).
    beta : discount base in [0, 1]; 1 freezes the weights (uniform mixing).
    weights : length-n vector, all ones at birth.
    loss_cap : normalizer M > 0; losses enter the exponent as min(loss/M, 1).
    """

    owner: int
    beta: float
    weights: np.ndarray
    loss_cap: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.beta <= 1.0):
            raise AllocationError(f"beta must be in [0,1], got {self.beta}")
        if not (self.loss_cap > 0):
            raise AllocationError(f"loss_cap must be positive, got {self.loss_cap}")
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or not (0 <= self.owner < w.shape[0]):
            raise AllocationError("owner index out of range for the weight vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise AllocationError("weights must be finite and nonnegative")


def new_allocator(owner: int, n: int, beta: float, loss_cap: float) -> AllocatorState:
    return AllocatorState(owner=owner, beta=beta, weights=np.ones(n), loss_cap=loss_cap)


def update_weights(state: AllocatorState, losses: Mapping[int, float]) -> AllocatorState:
    """Apply one round of observed losses; unobserved experts are untouched.

    losses maps expert index -> nonnegative loss (the keys are this round's
    active set). Returns a new state; the input is not mutated.
    """
    w = np.array(state.weights, dtype=float)
    for j, loss in losses.items():
        if not (0 <= j < w.shape[0]):
            raise AllocationError(f"expert {j} out of range")
        if not np.isfinite(loss) or loss < 0:
            raise AllocationError(f"loss for expert {j} must be finite and >= 0, got {loss}")
        w[j] = w[j] * state.beta ** min(loss / state.loss_cap, 1.0)
    if losses:
        active_max = max(w[j] for j in losses)
        if 0.0 < active_max < UNDERFLOW_FLOOR:
            # rescale the whole vector: every pairwise ratio survives
            w /= active_max
    return replace(state, weights=w)


def distribution(state: AllocatorState, active: Iterable[int]) -> np.ndarray:
    """Weight vector restricted to the active experts, renormalized.

    Returns a full-length vector that is zero off the active set and sums to
    one on it.
    """
    idx = sorted(set(active))
    if not idx:
        raise AllocationError("active set is empty")
    if any(not (0 <= j < state.weights.shape[0]) for j in idx):
        raise AllocationError(f"active set {idx} out of range")
    q = np.zeros_like(np.asarray(state.weights, dtype=float))
    total = float(state.weights[idx].sum())
    if total <= 0:
        raise AllocationError(f"active weights of agent {state.owner} sum to zero")
    q[idx] = state.weights[idx] / total
    return q


def assemble_comm_matrix(
    states: Sequence[AllocatorState], topology: WeightedDigraph
) -> np.ndarray:
    """Stack each agent's active-set distribution into a mixing matrix.

    Row i is agent i's distribution over its in-neighbors and itself, so the
    result is row stochastic with support inside the topology's pattern and a
    strictly positive diagonal (for beta > 0).
    """
    n = topology.n
    if len(states) != n:
        raise AllocationError(f"need {n} allocator states, got {len(states)}")
    p = np.zeros((n, n))
    for i, st in enumerate(states):
        if st.owner != i:
            raise AllocationError(f"state at position {i} is owned by {st.owner}")
        p[i] = distribution(st, topology.in_neighbors(i) + [i])
    return p


# ---- Regret accounting for the allocation subproblem ----

def allocation_regret(q_hist: np.ndarray, losses: np.ndarray) -> float:
    """Realized mixture loss minus the best single expert in hindsight.

    q_hist and losses are (T, m): the distribution played each round and the
    loss vector revealed after it.
    """
    q_hist = np.asarray(q_hist, dtype=float)
    losses = np.asarray(losses, dtype=float)
    if q_hist.shape != losses.shape:
        raise ValueError(f"shape mismatch: {q_hist.shape} vs {losses.shape}")
    suffered = float((q_hist * losses).sum())
    best = float(losses.sum(axis=0).min())
    return suffered - best


def allocation_regret_bound(loss_cap: float, num_experts: int, horizon: int) -> float:
    """Worst-case regret guarantee M * (sqrt(2 T ln m) + ln m)."""
    if num_experts < 1 or horizon < 1:
        raise ValueError("need num_experts >= 1 and horizon >= 1")
    lnm = np.log(num_experts)
    return float(loss_cap * (np.sqrt(2.0 * horizon * lnm) + lnm))


def hedge_beta(horizon: int, num_experts: int) -> float:
    """Discount base tuned to the horizon: 1 / (1 + sqrt(2 ln m / T))."""
    if num_experts < 2:
        return 1.0
    return float(1.0 / (1.0 + np.sqrt(2.0 * np.log(num_experts) / horizon)))


# ---- Vectorized bank used by the round loop ----

class WeightBank:
    """All agents' allocators in one (n, n) array; row i belongs to agent i.

    Semantically identical to running n AllocatorState updates per round (the
    test suite checks the equivalence); existence justified purely by speed.
    """

    def __init__(self, n: int, beta: float, loss_cap: float):
        if not (0.0 <= beta <= 1.0):
            raise AllocationError(f"beta must be in [0,1], got {beta}")
        if not (loss_cap > 0):
            raise AllocationError(f"loss_cap must be positive, got {loss_cap}")
        self.n = n
        self.beta = beta
        self.loss_cap = loss_cap
        self.weights = np.ones((n, n))
        self.rounds_active = np.zeros((n, n), dtype=np.int64)

    def update(self, losses: np.ndarray, active: np.ndarray) -> None:
        """losses: (n,) per-expert losses; active: (n, n) bool observation mask."""
        if np.any(losses < 0) or not np.all(np.isfinite(losses)):
            raise AllocationError("losses must be finite and >= 0")
        capped = np.minimum(losses / self.loss_cap, 1.0)
        factor = self.beta ** capped
        self.weights *= np.where(active, factor[None, :], 1.0)
        self.rounds_active += active
        masked = np.where(active, self.weights, 0.0)
        row_max = masked.max(axis=1)
        needs = (row_max > 0.0) & (row_max < UNDERFLOW_FLOOR)
        if np.any(needs):
            self.weights[needs] /= row_max[needs, None]

    def mixing_matrix(self, active: np.ndarray) -> np.ndarray:
        """Row-stochastic matrix of active-set distributions."""
        masked = np.where(active, self.weights, 0.0)
        totals = masked.sum(axis=1, keepdims=True)
        if np.any(totals <= 0):
            bad = int(np.argmin(totals))
            raise AllocationError(f"active weights of agent {bad} sum to zero")
        return masked / totals
