"""Row-stochastic matrix algebra for consensus diagnostics.

Products of communication matrices are taken backward in time: feeding the
sequence P(0), P(1), ..., P(t) yields P(t) @ ... @ P(0), the map that carries
round-0 state to round t+1. The contraction coefficient
tau(Q) = 1 - min_{i,i'} sum_k min(Q[i,k], Q[i',k]) measures the worst row-pair
overlap; tau < 1 certifies geometric consensus and is submultiplicative over
products.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .graphs import WeightedDigraph, distances

__all__ = [
    "StochasticityError",
    "StructureError",
    "ConvergenceError",
    "validate_stochastic",
    "ergodic_coefficient",
    "BackwardProduct",
    "backward_product",
    "is_scrambling",
    "stationary_vector",
    "empirical_pi",
    "row_agreement_gap",
    "nu_fixed",
    "nu_switching",
    "gamma_estimate",
    "consensus_gap",
    "save_matrix_csv",
    "load_matrix_csv",
]

ROW_SUM_TOL = 1e-12
SUPPORT_EPS = 1e-14


class StochasticityError(ValueError):
    """Rows do not form probability distributions within tolerance."""


class StructureError(ValueError):
    """Matrix support violates a structural precondition (pattern, diagonal)."""


class ConvergenceError(RuntimeError):
    """An iterative computation did not reach its tolerance in its budget."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved {achieved:.3e})")
        self.achieved = achieved


def validate_stochastic(p: np.ndarray, tol: float = ROW_SUM_TOL) -> None:
    """Check square, nonnegative, rows summing to 1 within tol."""
    p = np.asarray(p)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise StochasticityError(f"expected a square matrix, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise StochasticityError("matrix has non-finite entries")
    if np.any(p < -tol):
        raise StochasticityError(f"negative entry {p.min():.3e}")
    gap = np.abs(p.sum(axis=1) - 1.0).max()
    if gap > tol:
        raise StochasticityError(f"row sums off by {gap:.3e} (tol {tol:.1e})")


def ergodic_coefficient(p: np.ndarray) -> float:
    """tau(p) = 1 - min over row pairs of the summed entrywise minima.

    Returns a value in [0, 1]: 0 for identical rows, 1 for a pair of rows with
    disjoint support.
    """
    p = np.asarray(p, dtype=float)
    validate_stochastic(p)
    # pairwise min-overlap, vectorized over all row pairs
    overlap = np.minimum(p[:, None, :], p[None, :, :]).sum(axis=2)
    return float(1.0 - overlap.min())


class BackwardProduct:
    """Accumulates P(t) @ ... @ P(0) one factor at a time."""

    def __init__(self, n: int):
        self.matrix = np.eye(n)
        self.count = 0

    def push(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        validate_stochastic(p)
        self.matrix = p @ self.matrix
        self.count += 1
        return self.matrix


def backward_product(seq: Sequence[np.ndarray]) -> np.ndarray:
    """Product of a time-ordered sequence, newest factor leftmost."""
    if len(seq) == 0:
        raise ValueError("backward product of an empty sequence")
    acc = BackwardProduct(np.asarray(seq[0]).shape[0])
    for p in seq:
        acc.push(p)
    return acc.matrix


def is_scrambling(p: np.ndarray, eps: float = SUPPORT_EPS) -> bool:
    """True when every pair of rows shares a column with entries > eps."""
    p = np.asarray(p)
    validate_stochastic(p)
    support = p > eps
    shared = (support[:, None, :] & support[None, :, :]).any(axis=2)
    return bool(shared.all())


def _support_strongly_connected(p: np.ndarray, eps: float) -> bool:
    n = p.shape[0]
    if n == 1:
        return True
    off = np.array(p > eps)
    np.fill_diagonal(off, False)
    ncomp, _ = connected_components(csr_matrix(off), directed=True, connection="strong")
    return ncomp == 1


def stationary_vector(
    p: np.ndarray, tol: float = 1e-12, max_iter: Optional[int] = None
) -> np.ndarray:
    """Left fixed probability vector pi with pi @ p = pi, via power iteration.

    Requires the support of p to be strongly connected with a positive
    diagonal (so the fixed vector is unique and the iteration converges).
    """
    p = np.asarray(p, dtype=float)
    validate_stochastic(p)
    n = p.shape[0]
    if np.any(np.diag(p) <= SUPPORT_EPS):
        raise StructureError("diagonal must be strictly positive")
    if not _support_strongly_connected(p, SUPPORT_EPS):
        raise StructureError("support is not strongly connected")
    if max_iter is None:
        max_iter = 100 * n
    pi = np.full(n, 1.0 / n)
    residual = np.inf
    for _ in range(max_iter):
        nxt = pi @ p
        nxt /= nxt.sum()
        residual = np.abs(nxt - pi).max()
        pi = nxt
        if residual <= tol:
            return pi
    raise ConvergenceError(f"power iteration did not reach tol {tol:.1e} in {max_iter} iters", residual)


def row_agreement_gap(p: np.ndarray) -> float:
    """Max over row pairs of the infinity distance between rows."""
    p = np.asarray(p, dtype=float)
    return float(np.abs(p[:, None, :] - p[None, :, :]).max()) if p.shape[0] > 1 else 0.0


def empirical_pi(seq: Sequence[np.ndarray], tol: float = 1e-10) -> np.ndarray:
    """Consensus row of the backward product of a realized matrix sequence.

    Multiplies factors in time order and returns the first row as soon as all
    rows agree within tol; raises ConvergenceError (carrying the achieved gap)
    if the sequence runs out first. This is the reference vector for
    time-varying runs, where no single matrix owns a stationary vector.
    """
    if len(seq) == 0:
        raise ValueError("empirical pi of an empty sequence")
    acc = BackwardProduct(np.asarray(seq[0]).shape[0])
    gap = np.inf
    for p in seq:
        prod = acc.push(p)
        gap = row_agreement_gap(prod)
        if gap <= tol:
            return prod[0].copy()
    raise ConvergenceError(f"rows did not agree within {tol:.1e} after {acc.count} factors", gap)


# ---- Connectivity horizons ----

def nu_fixed(g: WeightedDigraph) -> int:
    """Information horizon of a fixed topology: min over sinks i of the
    longest directed distance into i, clamped to at least 1.

    Requires strong connectivity (all distances finite).
    """
    d = distances(g)
    if not np.all(np.isfinite(d)):
        raise StructureError("nu is undefined: graph is not strongly connected")
    if g.n == 1:
        return 1
    eccentricity_in = d.max(axis=0)  # max_j dist(j, i) per column i
    return max(1, int(eccentricity_in.min()))


def nu_switching(n: int) -> int:
    """Worst-case horizon for switching topologies on n nodes."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return max(1, n - 1)


def gamma_estimate(seq: Sequence[np.ndarray], delta: int, nu: int) -> float:
    """Max contraction coefficient over consecutive blocks of delta*nu factors.

    The realized sequence is partitioned from the start; a trailing partial
    block is ignored. Needs at least one complete block.
    """
    if delta < 1 or nu < 1:
        raise ValueError(f"need delta, nu >= 1, got delta={delta}, nu={nu}")
    block = delta * nu
    nblocks = len(seq) // block
    if nblocks == 0:
        raise ValueError(f"sequence of {len(seq)} factors is shorter than one block ({block})")
    worst = 0.0
    for b in range(nblocks):
        prod = backward_product(seq[b * block : (b + 1) * block])
        worst = max(worst, ergodic_coefficient(prod))
    return worst


def consensus_gap(prod: np.ndarray, pi: np.ndarray) -> float:
    """max_{i,j} |prod[i,j] - pi[j]|: distance of a product from consensus."""
    prod = np.asarray(prod, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if prod.shape[1] != pi.shape[0]:
        raise ValueError(f"shape mismatch: {prod.shape} vs {pi.shape}")
    return float(np.abs(prod - pi[None, :]).max())


# ---- CSV debugging helpers ----

def save_matrix_csv(p: np.ndarray, path: str) -> None:
    """Header line with n, then one CSV row per matrix row."""
    p = np.asarray(p)
    with open(path, "w") as fh:
        fh.write(f"{p.shape[0]}\n")
        for row in p:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_matrix_csv(path: str) -> np.ndarray:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    n = int(lines[0])
    rows = [np.array([float(v) for v in ln.split(",")]) for ln in lines[1 : n + 1]]
    return np.vstack(rows)
