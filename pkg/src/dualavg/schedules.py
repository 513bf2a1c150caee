"""Topology schedules: which edges exist at each round.

A schedule emits one edge set per round, deterministically from (seed, t).
Window discipline: over every window of delta consecutive rounds the union of
emitted graphs must be strongly connected; partition achieves this by
construction, random_drop repairs the final round of a deficient window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import WeightedDigraph, is_strongly_connected, union_graph

__all__ = [
    "ScheduleError",
    "TopologySchedule",
    "fixed_schedule",
    "partition_schedule",
    "random_drop_schedule",
    "jam_isolation_schedule",
    "validate_schedule",
]

MODES = ("fixed", "partition", "random_drop", "jam_isolation")


class ScheduleError(ValueError):
    """Invalid schedule parameters or a broken window invariant."""


@dataclass(frozen=True)
class TopologySchedule:
    """Deterministic map from round to active topology.

    base : the full graph; every emitted edge set is a subset of it.
    mode : one of fixed, partition, random_drop, jam_isolation.
    delta : window length; unions over any aligned delta-window must be
        strongly connected.
    p_drop : per-edge drop probability (random_drop only).
    seed : randomness root for random_drop draws.
    """

    base: WeightedDigraph
    mode: str
    delta: int = 1
    p_drop: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ScheduleError(f"unknown mode {self.mode!r}")
        if self.delta < 1:
            raise ScheduleError(f"delta must be >= 1, got {self.delta}")
        if not (0.0 <= self.p_drop < 1.0):
            raise ScheduleError(f"p_drop must be in [0,1), got {self.p_drop}")
        if not is_strongly_connected(self.base):
            raise ScheduleError("base graph must be strongly connected")

    # ---- per-round edge sets ----

    def edges_at(self, t: int) -> WeightedDigraph:
        """Topology of round t (1-based); stateless in (seed, t)."""
        if t < 1:
            raise ScheduleError(f"rounds are 1-based, got t={t}")
        if self.mode in ("fixed", "jam_isolation"):
            return self.base
        if self.mode == "partition":
            group = (t - 1) % self.delta
            picked = {
                e: w
                for idx, (e, w) in enumerate(sorted(self.base.edge_weights.items()))
                if idx % self.delta == group
            }
            return WeightedDigraph(self.base.n, picked)
        return self._random_drop_round(t)

    def _window_keep_masks(self, window: int) -> np.ndarray:
        """Keep/drop draws for all rounds of one 0-based window, then the
        spanning repair: if the union of kept edges is not strongly
        connected, the window's last round restores the missing base edges.
        """
        edges = sorted(self.base.edge_weights)
        rng = np.random.default_rng(np.random.SeedSequence((self.seed, 7, window)))
        keep = rng.random((self.delta, len(edges))) >= self.p_drop
        union_mask = keep.any(axis=0)
        kept_union = WeightedDigraph(
            self.base.n,
            {e: self.base.edge_weights[e] for e, k in zip(edges, union_mask) if k},
        )
        if not is_strongly_connected(kept_union):
            keep[-1, :] |= ~union_mask
        return keep

    def _random_drop_round(self, t: int) -> WeightedDigraph:
        window, offset = divmod(t - 1, self.delta)
        keep = self._window_keep_masks(window)[offset]
        edges = sorted(self.base.edge_weights)
        return WeightedDigraph(
            self.base.n,
            {e: self.base.edge_weights[e] for e, k in zip(edges, keep) if k},
        )


def fixed_schedule(base: WeightedDigraph) -> TopologySchedule:
    return TopologySchedule(base=base, mode="fixed")


def partition_schedule(base: WeightedDigraph, delta: int) -> TopologySchedule:
    """Deal the base edges round-robin into delta groups; round t plays
    group (t-1) mod delta, so any delta consecutive rounds cover the base."""
    return TopologySchedule(base=base, mode="partition", delta=delta)


def random_drop_schedule(
    base: WeightedDigraph, p_drop: float, delta: int, seed: int
) -> TopologySchedule:
    return TopologySchedule(
        base=base, mode="random_drop", delta=delta, p_drop=p_drop, seed=seed
    )


def jam_isolation_schedule(base: WeightedDigraph) -> TopologySchedule:
    """Jamming corrupts data, not links: the topology stays the base graph.

    The mode exists so runs can declare the jamming scenario explicitly; the
    corrupted feeds live in the estimation scenario.
    """
    return TopologySchedule(base=base, mode="jam_isolation")


def validate_schedule(sched: TopologySchedule, horizon: int) -> None:
    """Check every complete delta-window union over rounds 1..horizon.

    Raises ScheduleError naming the first offending window.
    """
    for start in range(1, horizon + 1, sched.delta):
        stop = start + sched.delta - 1
        if stop > horizon:
            break
        window = [sched.edges_at(t) for t in range(start, stop + 1)]
        if not is_strongly_connected(union_graph(window)):
            raise ScheduleError(
                f"window rounds {start}..{stop}: union is not strongly connected"
            )
