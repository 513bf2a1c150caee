import numpy as np
import pytest

from dualavg.engine import (
    AgentState,
    CentralReference,
    EngineError,
    FeasibleSet,
    StepSchedule,
    central_reference,
    check_mixing_convention,
    deviation,
    dwda_round,
    project,
    running_average,
)
from dualavg.graphs import WeightedDigraph


class TestFeasibleSet:
    def test_ball_contains(self):
        chi = FeasibleSet.ball(1.0, 2)
        assert chi.contains(np.array([0.6, 0.8]))
        assert not chi.contains(np.array([0.8, 0.8]))

    def test_box_must_hold_origin(self):
        with pytest.raises(EngineError):
            FeasibleSet.box([0.1, -1.0], [1.0, 1.0])
        with pytest.raises(EngineError):
            FeasibleSet.box([-1.0], [-0.5])

    def test_euclidean_projection_ball(self):
        chi = FeasibleSet.ball(1.0, 2)
        np.testing.assert_allclose(
            chi.euclidean_projection(np.array([3.0, 4.0])), [0.6, 0.8], atol=1e-15
        )
        inside = np.array([0.1, 0.2])
        np.testing.assert_array_equal(chi.euclidean_projection(inside), inside)

    def test_euclidean_projection_box(self):
        chi = FeasibleSet.box([-1.0, -1.0], [1.0, 2.0])
        np.testing.assert_allclose(
            chi.euclidean_projection(np.array([5.0, -3.0])), [1.0, -1.0], atol=0
        )


class TestRegularizedProjection:
    def test_interior_closed_form(self):
        # raw point -alpha*y = (-0.5, 0) stays inside the unit ball
        chi = FeasibleSet.ball(1.0, 2)
        out = project(np.array([1.0, 0.0]), 0.5, chi)
        np.testing.assert_allclose(out, [-0.5, 0.0], atol=1e-15)

    def test_ball_clip_along_ray(self):
        chi = FeasibleSet.ball(1.0, 2)
        out = project(np.array([4.0, 0.0]), 1.0, chi)
        np.testing.assert_allclose(out, [-1.0, 0.0], atol=1e-15)

    def test_box_clamp(self):
        chi = FeasibleSet.box([-0.25, -0.25], [0.25, 0.25])
        out = project(np.array([4.0, -0.1]), 1.0, chi)
        np.testing.assert_allclose(out, [-0.25, 0.1], atol=1e-15)

    def test_batch_matches_loop(self):
        rng = np.random.default_rng(13)
        chi = FeasibleSet.ball(0.7, 3)
        ys = rng.normal(size=(8, 3)) * 2.0
        batch = project(ys, 0.3, chi)
        for row, y in zip(batch, ys):
            np.testing.assert_allclose(row, project(y, 0.3, chi), atol=1e-15)

    def test_optimality_against_grid(self):
        # brute-force the 1-d objective <y,x> + x^2/(2 alpha) over the set
        chi = FeasibleSet.ball(0.5, 1)
        for y in (-3.0, -0.4, 0.0, 0.4, 3.0):
            for alpha in (0.1, 0.5, 2.0):
                xs = np.linspace(-0.5, 0.5, 20001)
                vals = y * xs + xs ** 2 / (2 * alpha)
                best = xs[np.argmin(vals)]
                got = project(np.array([y]), alpha, chi)[0]
                assert got == pytest.approx(best, abs=1e-4)

    def test_rejects_nonpositive_alpha(self):
        chi = FeasibleSet.ball(1.0, 1)
        with pytest.raises(EngineError):
            project(np.array([1.0]), 0.0, chi)


class TestStepSchedule:
    def test_values(self):
        s = StepSchedule(k=0.25)
        assert s.alpha(1) == pytest.approx(0.25)
        assert s.alpha(4) == pytest.approx(0.125)
        assert s.alpha(100) == pytest.approx(0.025)

    def test_one_based(self):
        with pytest.raises(EngineError):
            StepSchedule(k=1.0).alpha(0)

    def test_positive_scale(self):
        with pytest.raises(EngineError):
            StepSchedule(k=0.0)


class TestRoundMap:
    def test_single_agent_hand_run(self):
        # n=1: P=[1], so y accumulates raw subgradients
        chi = FeasibleSet.ball(10.0, 1)
        sched = StepSchedule(k=1.0)
        y = np.zeros((1, 1))
        p = np.ones((1, 1))
        y, x = dwda_round(y, np.array([[2.0]]), p, 1, sched, chi)
        assert y[0, 0] == pytest.approx(2.0)
        assert x[0, 0] == pytest.approx(-2.0)  # alpha(1)=1
        y, x = dwda_round(y, np.array([[1.0]]), p, 2, sched, chi)
        assert y[0, 0] == pytest.approx(3.0)
        assert x[0, 0] == pytest.approx(-3.0 / np.sqrt(2.0))

    def test_mixing_precedes_addition(self):
        # two agents fully averaging: the mix sees OLD duals, then adds g
        chi = FeasibleSet.ball(10.0, 1)
        sched = StepSchedule(k=1.0)
        y = np.array([[4.0], [0.0]])
        p = np.full((2, 2), 0.5)
        g = np.array([[1.0], [-1.0]])
        y2, _ = dwda_round(y, g, p, 1, sched, chi)
        np.testing.assert_allclose(y2, [[3.0], [1.0]], atol=1e-15)

    def test_shape_mismatch(self):
        chi = FeasibleSet.ball(1.0, 1)
        with pytest.raises(EngineError):
            dwda_round(np.zeros((2, 1)), np.zeros((3, 1)), np.eye(2), 1, StepSchedule(1.0), chi)


class TestRunningAverage:
    def test_matches_batch_mean(self):
        rng = np.random.default_rng(2)
        xs = rng.normal(size=(25, 3))
        avg = np.zeros(3)
        for t, x in enumerate(xs, start=1):
            avg = running_average(avg, x, t)
            np.testing.assert_allclose(avg, xs[:t].mean(axis=0), atol=1e-12)

    def test_first_round_copies(self):
        x = np.array([1.0, 2.0])
        avg = running_average(np.zeros(2), x, 1)
        np.testing.assert_array_equal(avg, x)
        avg[0] = 99.0
        assert x[0] == 1.0


class TestMixingConvention:
    def test_accepts_row_stochastic_with_diagonal(self):
        p = np.array([[0.5, 0.5], [0.25, 0.75]])
        assert check_mixing_convention(p)

    def test_rejects_column_stochastic(self):
        p = np.array([[0.5, 0.9], [0.5, 0.1]])
        assert not check_mixing_convention(p)

    def test_rejects_zero_diagonal(self):
        assert not check_mixing_convention(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_pattern_support(self):
        g = WeightedDigraph(n=3, edge_weights={(0, 1): 1.0, (1, 2): 1.0, (2, 0): 1.0})
        ok = np.array([[0.5, 0.0, 0.5], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])
        assert check_mixing_convention(ok, g)
        # agent 0 cannot hear agent 1 directly ((1, 0) absent)
        bad = np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])
        assert not check_mixing_convention(bad, g)


class TestCentralReference:
    def test_recursion_residual_zero_for_invariant_pi(self):
        # doubly stochastic mixing keeps the uniform vector invariant, so the
        # averaged dual must satisfy the cumulative-sum recursion exactly
        rng = np.random.default_rng(17)
        n, d, T = 4, 2, 30
        p = np.full((n, n), 1.0 / n)
        pi = np.full(n, 1.0 / n)
        sched = StepSchedule(k=0.5)
        chi = FeasibleSet.ball(1.0, d)
        y = np.zeros((n, d))
        y_hist = np.zeros((T, n, d))
        g_hist = np.zeros((T, n, d))
        for t in range(1, T + 1):
            g = rng.normal(size=(n, d))
            y_hist[t - 1] = y
            g_hist[t - 1] = g
            y, _ = dwda_round(y, g, p, t, sched, chi)
        ref = central_reference(y_hist, g_hist, pi, sched, chi)
        assert ref.recursion_residual[:-1].max() < 1e-12
        assert isinstance(ref, CentralReference)

    def test_phi_is_projected_average(self):
        pi = np.array([0.25, 0.75])
        y_hist = np.zeros((3, 2, 1))
        y_hist[2] = [[4.0], [8.0]]
        g_hist = np.zeros((3, 2, 1))
        sched = StepSchedule(k=1.0)
        chi = FeasibleSet.ball(100.0, 1)
        ref = central_reference(y_hist, g_hist, pi, sched, chi)
        y_bar = 0.25 * 4.0 + 0.75 * 8.0
        assert ref.phi[2, 0] == pytest.approx(-y_bar / np.sqrt(2.0))


class TestDeviation:
    def test_hand_example(self):
        pi = np.array([0.5, 0.5])
        y = np.array([[1.0, 0.0], [3.0, 0.0]])
        d = deviation(y, pi)
        np.testing.assert_allclose(d, [1.0, 1.0], atol=1e-15)

    def test_zero_at_consensus(self):
        pi = np.array([0.3, 0.7])
        y = np.tile([2.0, -1.0], (2, 1))
        np.testing.assert_allclose(deviation(y, pi), [0.0, 0.0], atol=1e-15)


class TestAgentState:
    def test_fields(self):
        st = AgentState(y=np.zeros(2), x=np.zeros(2), x_avg=np.zeros(2))
        assert st.y.shape == (2,)
