import numpy as np
import pytest

from dualavg.graphs import GraphFamilySpec, generate, is_strongly_connected, union_graph
from dualavg.schedules import (
    ScheduleError,
    TopologySchedule,
    fixed_schedule,
    jam_isolation_schedule,
    partition_schedule,
    random_drop_schedule,
    validate_schedule,
)


def ring(n):
    return generate(GraphFamilySpec(family="directed_cycle", n=n))


def dense(n, seed=0):
    return generate(GraphFamilySpec(family="erdos_renyi", n=n, seed=seed, p=0.5))


class TestConstruction:
    def test_rejects_unknown_mode(self):
        with pytest.raises(ScheduleError):
            TopologySchedule(base=ring(4), mode="chaos")

    def test_rejects_disconnected_base(self):
        from dualavg.graphs import WeightedDigraph

        g = WeightedDigraph(n=3, edge_weights={(0, 1): 1.0})
        with pytest.raises(ScheduleError):
            fixed_schedule(g)

    def test_rejects_bad_delta_and_drop(self):
        with pytest.raises(ScheduleError):
            TopologySchedule(base=ring(4), mode="partition", delta=0)
        with pytest.raises(ScheduleError):
            TopologySchedule(base=ring(4), mode="random_drop", p_drop=1.0)

    def test_one_based_rounds(self):
        with pytest.raises(ScheduleError):
            fixed_schedule(ring(4)).edges_at(0)


class TestFixed:
    def test_every_round_is_base(self):
        g = ring(5)
        sched = fixed_schedule(g)
        for t in (1, 7, 100):
            assert sched.edges_at(t).edge_weights == g.edge_weights

    def test_jam_isolation_same_topology(self):
        # jamming corrupts readings, not links
        g = dense(6, seed=2)
        sched = jam_isolation_schedule(g)
        assert sched.edges_at(3).edge_weights == g.edge_weights
        validate_schedule(sched, 10)


class TestPartition:
    def test_round_robin_deal(self):
        g = ring(6)  # 6 edges
        sched = partition_schedule(g, delta=3)
        counts = [len(sched.edges_at(t).edges) for t in (1, 2, 3)]
        assert sum(counts) == 6
        # deal is by sorted-edge index mod delta: groups have equal share here
        assert counts == [2, 2, 2]

    def test_period_delta(self):
        g = dense(7, seed=5)
        sched = partition_schedule(g, delta=4)
        assert sched.edges_at(1).edge_weights == sched.edges_at(5).edge_weights
        assert sched.edges_at(2).edge_weights == sched.edges_at(6).edge_weights

    def test_window_union_recovers_base(self):
        g = dense(8, seed=3)
        sched = partition_schedule(g, delta=5)
        window = [sched.edges_at(t) for t in range(1, 6)]
        assert union_graph(window).edge_weights.keys() == g.edge_weights.keys()
        validate_schedule(sched, 25)

    def test_groups_are_disjoint(self):
        g = dense(6, seed=9)
        sched = partition_schedule(g, delta=3)
        seen = set()
        for t in (1, 2, 3):
            es = set(sched.edges_at(t).edges)
            assert not (seen & es)
            seen |= es


class TestRandomDrop:
    def test_deterministic_in_seed_and_round(self):
        g = dense(8, seed=1)
        a = random_drop_schedule(g, p_drop=0.4, delta=3, seed=11)
        b = random_drop_schedule(g, p_drop=0.4, delta=3, seed=11)
        for t in range(1, 20):
            assert a.edges_at(t).edge_weights == b.edges_at(t).edge_weights

    def test_different_seeds_differ(self):
        g = dense(8, seed=1)
        a = random_drop_schedule(g, p_drop=0.4, delta=3, seed=11)
        b = random_drop_schedule(g, p_drop=0.4, delta=3, seed=12)
        assert any(
            a.edges_at(t).edge_weights != b.edges_at(t).edge_weights for t in range(1, 20)
        )

    def test_subset_of_base(self):
        g = dense(8, seed=4)
        sched = random_drop_schedule(g, p_drop=0.5, delta=2, seed=7)
        for t in range(1, 15):
            assert set(sched.edges_at(t).edges) <= set(g.edges)

    def test_windows_repaired_to_connectivity(self):
        # aggressive dropping still leaves every aligned window spanning
        g = ring(9)
        sched = random_drop_schedule(g, p_drop=0.9, delta=4, seed=3)
        validate_schedule(sched, 60)
        for start in range(1, 57, 4):
            window = [sched.edges_at(t) for t in range(start, start + 4)]
            assert is_strongly_connected(union_graph(window))

    def test_access_order_does_not_matter(self):
        g = dense(7, seed=6)
        sched = random_drop_schedule(g, p_drop=0.3, delta=3, seed=5)
        forward = [sched.edges_at(t).edge_weights for t in range(1, 10)]
        backward = [sched.edges_at(t).edge_weights for t in range(9, 0, -1)][::-1]
        assert forward == backward


class TestValidate:
    def test_flags_broken_window(self, monkeypatch):
        g = ring(4)
        sched = fixed_schedule(g)
        empty = type(g)(n=4, edge_weights={})
        monkeypatch.setattr(TopologySchedule, "edges_at", lambda self, t: empty)
        with pytest.raises(ScheduleError, match="window rounds 1..1"):
            validate_schedule(sched, 5)

    def test_ignores_trailing_partial_window(self):
        g = ring(5)
        sched = partition_schedule(g, delta=4)
        # horizon 6 has one complete window (1..4); rounds 5..6 are not checked
        validate_schedule(sched, 6)
