import numpy as np
import pytest

from dualavg.graphs import GraphFamilySpec, generate
from dualavg.stochastic import (
    BackwardProduct,
    ConvergenceError,
    StochasticityError,
    StructureError,
    backward_product,
    consensus_gap,
    empirical_pi,
    ergodic_coefficient,
    gamma_estimate,
    is_scrambling,
    load_matrix_csv,
    nu_fixed,
    nu_switching,
    row_agreement_gap,
    save_matrix_csv,
    stationary_vector,
    validate_stochastic,
)


def brute_force_tau(p):
    """Definitional pairwise evaluation with explicit loops."""
    n = p.shape[0]
    worst = 0.0
    for i in range(n):
        for j in range(n):
            overlap = sum(min(p[i, k], p[j, k]) for k in range(n))
            worst = max(worst, 1.0 - overlap)
    return worst


def random_stochastic(n, rng):
    m = rng.random((n, n)) + 1e-3
    return m / m.sum(axis=1, keepdims=True)


class TestErgodicCoefficient:
    def test_frozen_two_by_two(self):
        p = np.array([[0.5, 0.5], [0.25, 0.75]])
        # min-overlap = 0.25 + 0.5 = 0.75
        assert ergodic_coefficient(p) == pytest.approx(0.25, abs=1e-15)

    def test_identity_no_contraction(self):
        assert ergodic_coefficient(np.eye(3)) == pytest.approx(1.0)

    def test_rank_one_full_contraction(self):
        p = np.tile([0.2, 0.3, 0.5], (3, 1))
        assert ergodic_coefficient(p) == pytest.approx(0.0, abs=1e-15)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            p = random_stochastic(n, rng)
            assert ergodic_coefficient(p) == pytest.approx(brute_force_tau(p), abs=1e-12)

    def test_submultiplicative_over_products(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            a = random_stochastic(4, rng)
            b = random_stochastic(4, rng)
            assert ergodic_coefficient(a @ b) <= (
                ergodic_coefficient(a) * ergodic_coefficient(b) + 1e-12
            )


class TestValidation:
    def test_rejects_bad_rows(self):
        with pytest.raises(StochasticityError):
            validate_stochastic(np.array([[0.5, 0.6], [0.5, 0.5]]))
        with pytest.raises(StochasticityError):
            validate_stochastic(np.array([[1.1, -0.1], [0.5, 0.5]]))

    def test_accepts_within_tolerance(self):
        p = np.array([[0.5, 0.5], [0.25, 0.75]]) + 1e-15
        validate_stochastic(p)


class TestBackwardProduct:
    def test_order_newest_on_the_left(self):
        a = np.array([[1.0, 0.0], [0.5, 0.5]])
        b = np.array([[0.5, 0.5], [0.0, 1.0]])
        np.testing.assert_allclose(backward_product([a, b]), b @ a)
        acc = BackwardProduct(2)
        acc.push(a)
        acc.push(b)
        np.testing.assert_allclose(acc.matrix, b @ a)
        assert acc.count == 2

    def test_rejects_nonstochastic(self):
        acc = BackwardProduct(2)
        with pytest.raises(StochasticityError):
            acc.push(np.array([[0.9, 0.0], [0.5, 0.5]]))


class TestScrambling:
    def test_positive_column_scrambles(self):
        p = np.array([[0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.5, 0.25, 0.25]])
        assert is_scrambling(p)

    def test_permutation_does_not(self):
        assert not is_scrambling(np.array([[0.0, 1.0], [1.0, 0.0]]))


class TestStationary:
    def test_frozen_two_state_chain(self):
        p = np.array([[0.5, 0.5], [0.25, 0.75]])
        pi = stationary_vector(p)
        np.testing.assert_allclose(pi, [1.0 / 3.0, 2.0 / 3.0], atol=1e-10)

    def test_fixed_point_property(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = random_stochastic(5, rng)
            pi = stationary_vector(p)
            np.testing.assert_allclose(pi @ p, pi, atol=1e-10)
            assert pi.sum() == pytest.approx(1.0, abs=1e-10)

    def test_requires_positive_diagonal(self):
        with pytest.raises(StructureError):
            stationary_vector(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_requires_strong_connectivity(self):
        p = np.array([[1.0, 0.0], [0.5, 0.5]])
        with pytest.raises(StructureError):
            stationary_vector(p)

    def test_convergence_error_carries_progress(self):
        # asymmetric slow chain: fixed point (2/3, 1/3) is far from the
        # uniform start and the contraction rate is 1 - 3e-9 per step
        p = np.array([[1.0 - 1e-9, 1e-9], [2e-9, 1.0 - 2e-9]])
        with pytest.raises(ConvergenceError) as info:
            stationary_vector(p, tol=1e-14, max_iter=5)
        assert info.value.achieved > 0


class TestEmpiricalPi:
    def test_constant_chain_matches_stationary(self):
        p = np.array([[0.5, 0.5], [0.25, 0.75]])
        pi = empirical_pi([p] * 60)
        np.testing.assert_allclose(pi, [1.0 / 3.0, 2.0 / 3.0], atol=1e-9)

    def test_row_agreement_gap(self):
        prod = np.array([[0.3, 0.7], [0.3 + 1e-3, 0.7 - 1e-3]])
        assert row_agreement_gap(prod) == pytest.approx(1e-3, abs=1e-12)


class TestConnectivityIndex:
    def test_path_five_center(self):
        g = generate(GraphFamilySpec(family="path", n=5))
        # information reaches the center from every node within 2 hops
        assert nu_fixed(g) == 2

    def test_directed_cycle(self):
        g = generate(GraphFamilySpec(family="directed_cycle", n=3))
        assert nu_fixed(g) == 2

    def test_complete_graph(self):
        g = generate(GraphFamilySpec(family="complete", n=6))
        assert nu_fixed(g) == 1

    def test_requires_strong_connectivity(self):
        from dualavg.graphs import WeightedDigraph

        g = WeightedDigraph(n=3, edge_weights={(0, 1): 1.0, (1, 2): 1.0})
        with pytest.raises(StructureError):
            nu_fixed(g)

    def test_switching_fallback(self):
        assert nu_switching(5) == 4
        assert nu_switching(1) == 1


class TestGammaEstimate:
    def test_constant_sequence_single_block(self):
        p = np.array([[0.5, 0.5], [0.25, 0.75]])
        gamma = gamma_estimate([p, p], delta=1, nu=2)
        assert gamma == pytest.approx(ergodic_coefficient(p @ p), abs=1e-14)

    def test_max_over_blocks(self):
        good = np.tile([0.5, 0.5], (2, 1))
        bad = np.eye(2)
        gamma = gamma_estimate([good, bad], delta=1, nu=1)
        assert gamma == pytest.approx(1.0)

    def test_needs_one_complete_block(self):
        p = np.tile([0.5, 0.5], (2, 1))
        with pytest.raises(ValueError):
            gamma_estimate([p], delta=2, nu=1)


class TestConsensusGap:
    def test_zero_at_limit(self):
        pi = np.array([0.25, 0.75])
        prod = np.tile(pi, (2, 1))
        assert consensus_gap(prod, pi) == pytest.approx(0.0, abs=1e-15)

    def test_reports_worst_entry(self):
        pi = np.array([0.5, 0.5])
        prod = np.array([[0.6, 0.4], [0.5, 0.5]])
        assert consensus_gap(prod, pi) == pytest.approx(0.1, abs=1e-12)


class TestMatrixSerialization:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(9)
        p = random_stochastic(4, rng)
        path = tmp_path / "p.csv"
        save_matrix_csv(p, path)
        q = load_matrix_csv(path)
        np.testing.assert_allclose(q, p, atol=0)
