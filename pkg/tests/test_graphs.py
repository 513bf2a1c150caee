import numpy as np
import pytest

from dualavg.graphs import (
    GenerationError,
    GraphFamilySpec,
    GraphParameterError,
    WeightedDigraph,
    distances,
    generate,
    is_strongly_connected,
    laplacian,
    load_edge_list,
    save_edge_list,
    union_graph,
)


def make(n, edges):
    return WeightedDigraph(n=n, edge_weights={e: 1.0 for e in edges})


class TestWeightedDigraph:
    def test_validation(self):
        with pytest.raises(GraphParameterError):
            WeightedDigraph(n=2, edge_weights={(0, 0): 1.0})  # self-loop
        with pytest.raises(GraphParameterError):
            WeightedDigraph(n=2, edge_weights={(0, 2): 1.0})  # out of range
        with pytest.raises(GraphParameterError):
            WeightedDigraph(n=2, edge_weights={(0, 1): -1.0})  # bad weight

    def test_adjacency_convention(self):
        # arc (src, dst) lands in row dst: rows collect in-neighborhoods
        g = make(3, [(0, 1), (2, 1)])
        a = g.adjacency()
        assert a[1, 0] == 1.0 and a[1, 2] == 1.0
        assert a.sum() == 2.0
        assert g.in_neighbors(1) == [0, 2]
        assert g.out_neighbors(0) == [1]

    def test_max_in_neighborhood(self):
        g = make(4, [(0, 1), (2, 1), (3, 1), (1, 0)])
        assert g.max_in_neighborhood() == 3


class TestFamilies:
    def test_path(self):
        g = generate(GraphFamilySpec(family="path", n=4))
        assert set(g.edges) == {(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)}
        assert all(w == 1.0 for w in g.edge_weights.values())
        assert is_strongly_connected(g)

    def test_directed_cycle(self):
        g = generate(GraphFamilySpec(family="directed_cycle", n=3))
        assert set(g.edges) == {(0, 1), (1, 2), (2, 0)}
        assert is_strongly_connected(g)

    def test_complete(self):
        g = generate(GraphFamilySpec(family="complete", n=4))
        assert len(g.edges) == 12

    def test_erdos_renyi_deterministic(self):
        spec = GraphFamilySpec(family="erdos_renyi", n=20, seed=5, p=0.3)
        g1, g2 = generate(spec), generate(spec)
        assert g1.edges == g2.edges
        # symmetric by default
        for i, j in g1.edges:
            assert (j, i) in g1.edge_weights

    def test_erdos_renyi_directed_flag(self):
        spec = GraphFamilySpec(family="erdos_renyi", n=30, seed=5, p=0.3, directed=True)
        g = generate(spec)
        asym = [(i, j) for i, j in g.edges if (j, i) not in g.edge_weights]
        assert asym  # independent arc draws leave one-way links

    def test_random_tree_edge_count(self):
        for seed in range(5):
            g = generate(GraphFamilySpec(family="random_tree", n=12, seed=seed))
            assert len(g.edges) == 2 * 11  # n-1 undirected pairs
            assert is_strongly_connected(g)

    def test_random_k_regular_degrees(self):
        g = generate(GraphFamilySpec(family="random_k_regular", n=20, seed=3, k=4))
        a = g.adjacency() > 0
        assert (a.sum(axis=0) == 4).all() and (a.sum(axis=1) == 4).all()

    def test_regular_rejects_impossible(self):
        # nk odd has no simple k-regular realization
        with pytest.raises((GraphParameterError, GenerationError)):
            generate(GraphFamilySpec(family="random_k_regular", n=5, k=3))

    def test_explicit(self):
        g = generate(GraphFamilySpec(family="explicit", n=2, edges=[(0, 1, 2.5)]))
        assert g.edge_weights[(0, 1)] == 2.5

    def test_unknown_family(self):
        with pytest.raises(GraphParameterError):
            generate(GraphFamilySpec(family="moebius", n=4))


class TestAnalysis:
    def test_distances_path(self):
        g = generate(GraphFamilySpec(family="path", n=4))
        d = distances(g)
        assert d[0, 3] == 3 and d[3, 0] == 3 and d[1, 2] == 1

    def test_distances_directed_cycle(self):
        g = generate(GraphFamilySpec(family="directed_cycle", n=3))
        d = distances(g)
        # one-way ring: forward hops short, backward hops wrap
        assert d[0, 2] == 2 and d[2, 0] == 1

    def test_strong_connectivity(self):
        assert not is_strongly_connected(make(3, [(0, 1), (1, 2)]))
        assert is_strongly_connected(make(3, [(0, 1), (1, 2), (2, 0)]))

    def test_union(self):
        u = union_graph([make(3, [(0, 1)]), make(3, [(1, 2)]), make(3, [(0, 1)])])
        assert u.edge_weights[(0, 1)] == 2.0
        assert u.edge_weights[(1, 2)] == 1.0

    def test_laplacian_single_edge(self):
        g = make(2, [(0, 1)])
        expected = np.array([[0.0, 0.0], [-1.0, 1.0]])
        np.testing.assert_array_equal(laplacian(g), expected)

    def test_laplacian_annihilates_ones(self):
        g = generate(GraphFamilySpec(family="erdos_renyi", n=15, seed=2, p=0.3))
        np.testing.assert_allclose(laplacian(g) @ np.ones(15), 0.0, atol=1e-12)


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        g = generate(GraphFamilySpec(family="erdos_renyi", n=10, seed=1, p=0.4))
        path = tmp_path / "g.txt"
        save_edge_list(g, path)
        g2 = load_edge_list(path)
        assert g2.n == g.n and g2.edges == g.edges

    def test_one_indexed_on_disk(self, tmp_path):
        g = make(2, [(0, 1)])
        path = tmp_path / "g.txt"
        save_edge_list(g, path)
        body = path.read_text().splitlines()
        assert body[0] == "n=2"
        assert body[1].split()[:2] == ["1", "2"]
