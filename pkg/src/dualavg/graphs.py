"""Weighted directed graphs: the communication topologies agents talk over.

Edges are ordered pairs (i, j) meaning information flows from i to j; an
agent's neighborhood N(i) is its set of in-neighbors. Nodes are 0-indexed
internally and 1-indexed in files and CLI output.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

__all__ = [
    "WeightedDigraph",
    "GraphFamilySpec",
    "GraphParameterError",
    "GenerationError",
    "generate",
    "distances",
    "is_strongly_connected",
    "union_graph",
    "laplacian",
    "save_edge_list",
    "load_edge_list",
]

Edge = Tuple[int, int]


class GraphParameterError(ValueError):
    """Raised for malformed graph parameters or edge data."""


class GenerationError(RuntimeError):
    """Raised when a random family cannot produce a valid graph."""


# ---- Core type ----

@dataclass(frozen=True)
class WeightedDigraph:
    """Immutable weighted digraph on nodes 0..n-1.

    Parameters
    ----------
    n : int
        Number of nodes, n >= 1.
    edge_weights : dict
        Maps ordered pairs (src, dst) to nonnegative weights. Self-loops are
        rejected; they are implicit in every communication matrix built on top.
    """

    n: int
    edge_weights: Dict[Edge, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise GraphParameterError(f"need at least one node, got n={self.n}")
        for (i, j), w in self.edge_weights.items():
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphParameterError(f"edge ({i},{j}) out of range for n={self.n}")
            if i == j:
                raise GraphParameterError(f"self-loop ({i},{i}) not allowed")
            if not np.isfinite(w) or w < 0:
                raise GraphParameterError(f"edge ({i},{j}) has invalid weight {w}")

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return tuple(sorted(self.edge_weights))

    def in_neighbors(self, i: int) -> List[int]:
        """Nodes j with an edge (j, i), i.e. the sources agent i hears from."""
        return sorted(src for (src, dst) in self.edge_weights if dst == i)

    def out_neighbors(self, i: int) -> List[int]:
        return sorted(dst for (src, dst) in self.edge_weights if src == i)

    def adjacency(self) -> np.ndarray:
        """Weighted adjacency A with A[dst, src] = weight of edge (src, dst).

        Row r of A therefore lists the in-neighborhood of node r, matching the
        support convention of communication matrices.
        """
        a = np.zeros((self.n, self.n))
        for (src, dst), w in self.edge_weights.items():
            a[dst, src] = w
        return a

    def in_degree_weights(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def max_in_neighborhood(self) -> int:
        """max_i |N(i)|, used by the closed-form contraction diagnostic."""
        counts = np.zeros(self.n, dtype=int)
        for (_, dst) in self.edge_weights:
            counts[dst] += 1
        return int(counts.max()) if self.n else 0


# ---- Family specification and generation ----

@dataclass
class GraphFamilySpec:
    """Parameters selecting one graph family instance.

    family is one of: path, erdos_renyi, random_tree, random_k_regular,
    directed_cycle, complete, explicit.
    """

    family: str
    n: int
    seed: Optional[int] = None
    p: Optional[float] = None           # erdos_renyi edge probability
    k: Optional[int] = None             # random_k_regular degree
    directed: bool = False              # erdos_renyi: independent arcs instead of symmetric pairs
    edges: Optional[Sequence[Tuple[int, int, float]]] = None  # explicit, 0-indexed


_FAMILIES = (
    "path",
    "erdos_renyi",
    "random_tree",
    "random_k_regular",
    "directed_cycle",
    "complete",
    "explicit",
)


def _symmetric(pairs: Iterable[Edge]) -> Dict[Edge, float]:
    w: Dict[Edge, float] = {}
    for i, j in pairs:
        w[(i, j)] = 1.0
        w[(j, i)] = 1.0
    return w


def generate(spec: GraphFamilySpec) -> WeightedDigraph:
    """Build one graph instance from a family spec.

    Undirected families emit both directions of every edge with unit weight.
    Random families are deterministic given spec.seed.
    """
    if spec.family not in _FAMILIES:
        raise GraphParameterError(f"unknown family {spec.family!r}")
    n = spec.n
    if n < 1:
        raise GraphParameterError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))

    if spec.family == "path":
        return WeightedDigraph(n, _symmetric((i, i + 1) for i in range(n - 1)))

    if spec.family == "directed_cycle":
        if n == 1:
            return WeightedDigraph(1, {})
        return WeightedDigraph(n, {(i, (i + 1) % n): 1.0 for i in range(n)})

    if spec.family == "complete":
        return WeightedDigraph(
            n, {(i, j): 1.0 for i in range(n) for j in range(n) if i != j}
        )

    if spec.family == "erdos_renyi":
        if spec.p is None or not (0.0 <= spec.p <= 1.0):
            raise GraphParameterError(f"erdos_renyi needs p in [0,1], got {spec.p}")
        if spec.directed:
            draws = rng.random((n, n)) < spec.p
            np.fill_diagonal(draws, False)
            return WeightedDigraph(
                n, {(i, j): 1.0 for i in range(n) for j in range(n) if draws[i, j]}
            )
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        keep = rng.random(len(pairs)) < spec.p
        return WeightedDigraph(n, _symmetric(p for p, k in zip(pairs, keep) if k))

    if spec.family == "random_tree":
        return WeightedDigraph(n, _symmetric(_prufer_tree_edges(n, rng)))

    if spec.family == "random_k_regular":
        if spec.k is None:
            raise GraphParameterError("random_k_regular needs k")
        return WeightedDigraph(n, _symmetric(_pairing_model_edges(n, spec.k, rng)))

    # explicit
    if spec.edges is None:
        raise GraphParameterError("explicit family needs an edge list")
    w: Dict[Edge, float] = {}
    for i, j, wt in spec.edges:
        if (i, j) in w:
            raise GraphParameterError(f"duplicate edge ({i},{j})")
        w[(i, j)] = float(wt)
    return WeightedDigraph(n, w)


def _prufer_tree_edges(n: int, rng: np.random.Generator) -> List[Edge]:
    """Uniform random labeled tree decoded from a uniform Prufer sequence."""
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    seq = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=int)
    for v in seq:
        degree[v] += 1
    edges: List[Edge] = []
    # leaf is the smallest label of current degree one
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, int(v))
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def _pairing_model_edges(n: int, k: int, rng: np.random.Generator) -> List[Edge]:
    """k-regular simple graph via the pairing (configuration) model.

    Rejection-sampled: a shuffle producing a self-loop or parallel edge is
    discarded. Bounded at 1000 attempts.
    """
    if k < 0 or k >= n:
        raise GraphParameterError(f"k-regular needs 0 <= k < n, got k={k}, n={n}")
    if (n * k) % 2 != 0:
        raise GraphParameterError(f"n*k must be even, got n={n}, k={k}")
    if k == 0:
        return []
    stubs = np.repeat(np.arange(n), k)
    for _ in range(1000):
        perm = rng.permutation(stubs)
        pairs = perm.reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        canon = {(min(a, b), max(a, b)) for a, b in pairs}
        if len(canon) != len(pairs):
            continue
        return sorted(canon)
    raise GenerationError(f"pairing model failed after 1000 attempts (n={n}, k={k})")


# ---- Structure queries ----

def _support_csr(g: WeightedDigraph) -> csr_matrix:
    # csgraph convention: entry [i, j] is the arc i -> j
    if not g.edge_weights:
        return csr_matrix((g.n, g.n))
    src, dst = zip(*g.edge_weights)
    data = np.ones(len(src))
    return csr_matrix((data, (src, dst)), shape=(g.n, g.n))


def distances(g: WeightedDigraph) -> np.ndarray:
    """Hop-count distance matrix D with D[i, j] = directed distance i -> j.

    Unreachable pairs hold np.inf; the diagonal is zero.
    """
    return shortest_path(_support_csr(g), method="D", unweighted=True)


def is_strongly_connected(g: WeightedDigraph) -> bool:
    if g.n == 1:
        return True
    ncomp, _ = connected_components(_support_csr(g), directed=True, connection="strong")
    return ncomp == 1


def union_graph(graphs: Sequence[WeightedDigraph]) -> WeightedDigraph:
    """Edge union over a window; weights of repeated edges accumulate."""
    if not graphs:
        raise GraphParameterError("union of an empty graph sequence")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise GraphParameterError("union needs a common node count")
    acc: Dict[Edge, float] = {}
    for g in graphs:
        for e, w in g.edge_weights.items():
            acc[e] = acc.get(e, 0.0) + w
    return WeightedDigraph(n, acc)


def laplacian(g: WeightedDigraph) -> np.ndarray:
    """In-degree Laplacian L = D - A; rows sum to zero (L @ 1 = 0)."""
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


# ---- Edge-list text format ----

def save_edge_list(g: WeightedDigraph, path: str) -> None:
    """Write `n=<int>` then one `i j w` line per edge, 1-indexed."""
    with open(path, "w") as fh:
        fh.write(f"n={g.n}\n")
        for (i, j) in g.edges:
            fh.write(f"{i + 1} {j + 1} {g.edge_weights[(i, j)]:.17g}\n")


def load_edge_list(path: str) -> WeightedDigraph:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise GraphParameterError(f"{path}: expected 'n=<int>' header")
    try:
        n = int(lines[0][2:])
    except ValueError as exc:
        raise GraphParameterError(f"{path}: bad header {lines[0]!r}") from exc
    w: Dict[Edge, float] = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise GraphParameterError(f"{path}: bad edge line {ln!r}")
        i, j, wt = int(parts[0]) - 1, int(parts[1]) - 1, float(parts[2])
        if (i, j) in w:
            raise GraphParameterError(f"{path}: duplicate edge {ln!r}")
        w[(i, j)] = wt
    return WeightedDigraph(n, w)
