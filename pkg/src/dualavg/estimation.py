"""Parameter estimation over a sensor network: the benchmark loss family.

Each sensor i models its scalar (or stacked) reading as H_i @ theta and pays
the squared residual f_{t,i}(x) = ||z_{t,i} - H_i x||^2 / 2 against what it
actually observed. Observations follow z = a * theta + b with per-sensor,
per-round draws a ~ U(0, a_max) and noise b from a configurable family, so
the assumed linear model is deliberately mis-specified. A jammed sensor's
feed is frozen at z = H_i theta + b_max (the gain pinned to its own model
matrix, the noise pinned at the edge), which corrupts its data while leaving
the topology untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .engine import FeasibleSet

__all__ = [
    "ScenarioError",
    "NOISE_FAMILIES",
    "SensorModel",
    "ScenarioParams",
    "sample_noise",
    "observe",
    "local_cost",
    "local_subgradient",
    "lipschitz_constant",
    "prox_radius",
    "loss_ceiling",
    "best_fixed",
    "ObservationBatch",
    "make_observation_batch",
]

NOISE_FAMILIES = ("uniform_symmetric", "gaussian", "uniform", "laplace")


class ScenarioError(ValueError):
    """Invalid scenario parameters."""


@dataclass(frozen=True)
class SensorModel:
    """Assumed linear map of one sensor; jammed flags corrupted feeds."""

    H: np.ndarray  # (p, d)
    jammed: bool = False

    def __post_init__(self) -> None:
        H = np.asarray(self.H, dtype=float)
        if H.ndim != 2:
            raise ScenarioError(f"H must be 2-d (p, d), got shape {H.shape}")
        object.__setattr__(self, "H", H)


@dataclass(frozen=True)
class ScenarioParams:
    """Scenario constants; defaults mirror the scalar benchmark setup."""

    theta_max: float = 0.5
    h_max: float = 0.25
    a_max: float = 1.0
    b_max: float = 0.25
    d: int = 1
    noise_family: str = "uniform_symmetric"
    truncate_noise: bool = True

    def __post_init__(self) -> None:
        for name in ("theta_max", "h_max", "a_max", "b_max"):
            if not (getattr(self, name) > 0):
                raise ScenarioError(f"{name} must be positive")
        if self.d < 1:
            raise ScenarioError(f"d must be >= 1, got {self.d}")
        if self.noise_family not in NOISE_FAMILIES:
            raise ScenarioError(
                f"unknown noise family {self.noise_family!r}; "
                f"expected one of {NOISE_FAMILIES}"
            )


# ---- Noise ----

def sample_noise(
    family: str,
    size: Tuple[int, ...] | int,
    b_max: float,
    rng: np.random.Generator,
    truncate: bool = True,
) -> np.ndarray:
    """Draw noise samples.

    uniform_symmetric is U(-b_max, b_max). The remaining families are shifted
    and scaled to mean -b_max and standard deviation b_max; with truncate=True
    draws are rejection-sampled back into (-b_max, b_max).
    """
    if family not in NOISE_FAMILIES:
        raise ScenarioError(f"unknown noise family {family!r}")
    if family == "uniform_symmetric":
        return rng.uniform(-b_max, b_max, size=size)

    def draw(k: int) -> np.ndarray:
        if family == "gaussian":
            return rng.normal(-b_max, b_max, size=k)
        if family == "uniform":
            # mean -b_max, std b_max: halfwidth sqrt(3) * b_max
            half = np.sqrt(3.0) * b_max
            return rng.uniform(-b_max - half, -b_max + half, size=k)
        # laplace: std = sqrt(2) * scale
        return rng.laplace(-b_max, b_max / np.sqrt(2.0), size=k)

    shape = (size,) if isinstance(size, int) else tuple(size)
    total = int(np.prod(shape)) if shape else 1
    if not truncate:
        return draw(total).reshape(shape)
    out = np.empty(total)
    filled = 0
    while filled < total:
        cand = draw(total - filled)
        keep = cand[(cand > -b_max) & (cand < b_max)]
        out[filled : filled + keep.size] = keep
        filled += keep.size
    return out.reshape(shape)


# ---- Observation model ----

def _observation(a: float, b: float, H: np.ndarray, theta: np.ndarray,
                 jammed: bool, b_max: float) -> np.ndarray:
    if jammed:
        return H @ theta + b_max
    return a * theta + b


def observe(
    params: ScenarioParams,
    sensor: SensorModel,
    theta_true: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """One observation for one sensor: z = a * theta + b, or the jammed feed.

    Draws a ~ U(0, a_max) and b from the configured family per call. For
    unjammed sensors the model requires p == d (z lives in the theta space).
    """
    theta_true = np.atleast_1d(np.asarray(theta_true, dtype=float))
    if not sensor.jammed and sensor.H.shape[0] != theta_true.shape[0]:
        raise ScenarioError(
            f"unjammed observation needs p == d, got p={sensor.H.shape[0]}, d={theta_true.shape[0]}"
        )
    a = float(rng.uniform(0.0, params.a_max))
    b = float(sample_noise(params.noise_family, 1, params.b_max, rng, params.truncate_noise)[0])
    return _observation(a, b, sensor.H, theta_true, sensor.jammed, params.b_max)


# ---- Local losses ----

def local_cost(H: np.ndarray, z: np.ndarray, x: np.ndarray) -> float:
    """f(x) = ||z - H x||^2 / 2."""
    r = np.atleast_1d(z) - np.atleast_2d(H) @ np.atleast_1d(x)
    return float(0.5 * (r @ r))


def local_subgradient(H: np.ndarray, z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Gradient of the local cost: -H^T (z - H x)."""
    H = np.atleast_2d(H)
    r = np.atleast_1d(z) - H @ np.atleast_1d(x)
    return -H.T @ r


# ---- Analytic constants ----

def lipschitz_constant(params: ScenarioParams) -> float:
    """Gradient-norm ceiling over the decision set under bounded observations:
    (theta_max * h_max / 2 + a_max * theta_max + b_max) * h_max.
    """
    return (
        0.5 * params.theta_max * params.h_max
        + params.a_max * params.theta_max
        + params.b_max
    ) * params.h_max


def prox_radius(params: ScenarioParams) -> float:
    """sqrt(max ||x||^2 / 2) over the decision ball: theta_max / sqrt(2)."""
    return params.theta_max / np.sqrt(2.0)


def loss_ceiling(params: ScenarioParams) -> float:
    """Analytic cap on any single local cost with in-range data:
    (a_max theta_max + b_max + h_max theta_max)^2 / 2. Used as the loss
    normalizer of the adaptive weighting.
    """
    reach = params.a_max * params.theta_max + params.b_max + params.h_max * params.theta_max
    return 0.5 * reach * reach


# ---- Best fixed decision in hindsight ----

def best_fixed(
    z_hist: np.ndarray,
    models: Sequence[SensorModel],
    chi: FeasibleSet,
) -> np.ndarray:
    """Least-squares comparator: time-averaged normal-equation solution,
    projected onto the feasible set.

    z_hist : (T, n) for scalar readings or (T, n, p) stacked.
    With identical scalar unit models this reduces to the grand mean of all
    observations (then clipped).
    """
    z_hist = np.asarray(z_hist, dtype=float)
    if z_hist.ndim == 2:
        z_hist = z_hist[:, :, None]
    T, n, p = z_hist.shape
    if len(models) != n:
        raise ScenarioError(f"got {n} observation columns but {len(models)} sensors")
    d = models[0].H.shape[1]
    gram = np.zeros((d, d))
    for m in models:
        if m.H.shape[0] != p:
            raise ScenarioError("all sensors need the same output dim for the batch solve")
        gram += m.H.T @ m.H
    Hstack = np.stack([m.H for m in models])  # (n, p, d)
    rhs = np.einsum("npd,tnp->td", Hstack, z_hist)  # per-round sum_i H_i^T z_{t,i}
    sol = np.linalg.solve(gram, rhs.mean(axis=0))
    return chi.euclidean_projection(sol)


# ---- Pregenerated observation streams ----

@dataclass
class ObservationBatch:
    """All randomness of one run, drawn up front in a fixed order.

    a, b : (T, n) per-round, per-sensor draws.
    z : (T, n) scalar observations with jamming applied (d = 1 fast path).
    """

    params: ScenarioParams
    theta_true: np.ndarray
    H: np.ndarray               # (n,) scalar gains
    jammed: np.ndarray          # (n,) bool
    a: np.ndarray
    b: np.ndarray
    z: np.ndarray


def make_observation_batch(
    params: ScenarioParams,
    n: int,
    horizon: int,
    theta_true: float,
    rng: np.random.Generator,
    jammed: Optional[Sequence[int]] = None,
) -> ObservationBatch:
    """Draw gains and the full (T, n) observation table for a scalar run.

    Draw order is fixed (gains, then a-table, then b-table), so every value
    is a pure function of the generator's seed, independent of how the run
    later consumes rounds.
    """
    if params.d != 1:
        raise ScenarioError("batched observations support the scalar model only")
    if not (abs(theta_true) <= params.theta_max):
        raise ScenarioError(f"|theta_true| must be <= theta_max, got {theta_true}")
    H = rng.uniform(0.0, params.h_max, size=n)
    a = rng.uniform(0.0, params.a_max, size=(horizon, n))
    b = sample_noise(params.noise_family, (horizon, n), params.b_max, rng, params.truncate_noise)
    z = a * theta_true + b
    jam_mask = np.zeros(n, dtype=bool)
    if jammed:
        jam_idx = np.array(sorted(set(jammed)), dtype=int)
        if jam_idx.size and (jam_idx.min() < 0 or jam_idx.max() >= n):
            raise ScenarioError("jammed indices out of range")
        jam_mask[jam_idx] = True
        z[:, jam_mask] = H[jam_mask] * theta_true + params.b_max
    return ObservationBatch(
        params=params,
        theta_true=np.atleast_1d(float(theta_true)),
        H=H,
        jammed=jam_mask,
        a=a,
        b=b,
        z=z,
    )
