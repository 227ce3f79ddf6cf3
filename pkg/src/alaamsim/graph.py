"""Immutable simple undirected graphs.

Node ids are dense integers ``0..n-1``. Adjacency is stored in CSR form
(``indptr``/``indices``) so the MCMC kernels can index it directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import InputError


class Graph:
    """A fixed simple undirected graph.

    Construct with :func:`from_edge_list` (or :meth:`Graph.from_edges`);
    the constructor assumes its arguments are already canonical.
    """

    __slots__ = ("_n", "_edges", "_indptr", "_indices")

    def __init__(self, n: int, edges: np.ndarray):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self._n = int(n)
        self._edges = edges
        self._edges.setflags(write=False)
        deg = np.bincount(edges.ravel(), minlength=self._n)
        indptr = np.zeros(self._n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        indices = dst[order]
        self._indptr = indptr
        self._indices = indices
        self._indptr.setflags(write=False)
        self._indices.setflags(write=False)

    @classmethod
    def from_edges(cls, pairs, n: int) -> "Graph":
        return from_edge_list(pairs, n)

    @property
    def node_count(self) -> int:
        return self._n

    @property
    def edges(self) -> np.ndarray:
        """Edge array of shape ``(E, 2)`` with ``i < j``, lexicographically sorted."""
        return self._edges

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def indptr(self) -> np.ndarray:
        return self._indptr

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self._indices[self._indptr[i]:self._indptr[i + 1]]

    def degree(self, i: int) -> int:
        return int(self._indptr[i + 1] - self._indptr[i])

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < len(nb) and nb[k] == j)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self._edges}

    def adjacency_matrix(self) -> sparse.csr_matrix:
        data = np.ones(len(self._indices), dtype=np.int64)
        return sparse.csr_matrix((data, self._indices, self._indptr), shape=(self._n, self._n))

    def dense_adjacency(self) -> np.ndarray:
        a = np.zeros((self._n, self._n), dtype=np.int64)
        if len(self._edges):
            a[self._edges[:, 0], self._edges[:, 1]] = 1
            a[self._edges[:, 1], self._edges[:, 0]] = 1
        return a

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._edges, other._edges)

    def __hash__(self):
        return hash((self._n, self._edges.tobytes()))

    def __repr__(self):
        return f"Graph(n={self._n}, edges={len(self._edges)})"


def from_edge_list(pairs, n: int) -> Graph:
    """Build a graph from node-id pairs, collapsing duplicates.

    Raises :class:`InputError` on self-loops or ids outside ``[0, n)``.
    """
    if n < 0:
        raise InputError(f"node count must be non-negative, got {n}")
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
    if arr.size == 0:
        return Graph(n, np.empty((0, 2), dtype=np.int64))
    arr = arr.reshape(-1, 2)
    bad = (arr < 0) | (arr >= n)
    if bad.any():
        row = int(np.nonzero(bad.any(axis=1))[0][0])
        raise InputError(f"edge {tuple(arr[row])} has a node id outside [0, {n})")
    loops = arr[:, 0] == arr[:, 1]
    if loops.any():
        row = int(np.nonzero(loops)[0][0])
        raise InputError(f"self-loop {tuple(arr[row])} is not allowed")
    canon = np.sort(arr, axis=1)
    canon = np.unique(canon, axis=0)
    return Graph(n, canon)


def induced_subgraph(g: Graph, keep) -> tuple[Graph, np.ndarray]:
    """Subgraph induced by ``keep``.

    Returns the new graph and ``origin`` where ``origin[new_id] = old_id``.
    New ids follow ascending old id.
    """
    keep = np.unique(np.asarray(list(keep) if not isinstance(keep, np.ndarray) else keep, dtype=np.int64))
    if len(keep) and (keep[0] < 0 or keep[-1] >= g.node_count):
        raise InputError("induced_subgraph: node id out of range")
    remap = np.full(g.node_count, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    e = g.edges
    if len(e):
        mask = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
        new_edges = remap[e[mask]]
    else:
        new_edges = np.empty((0, 2), dtype=np.int64)
    # remap is monotone on keep, so i < j and lexicographic order survive
    return Graph(len(keep), new_edges), keep


def components(g: Graph) -> list[set[int]]:
    """Connected components, largest first (ties broken by smallest node id)."""
    if g.node_count == 0:
        return []
    _, labels = connected_components(g.adjacency_matrix(), directed=False)
    groups: dict[int, list[int]] = {}
    for node, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(node)
    comps = sorted(groups.values(), key=lambda c: (-len(c), c[0]))
    return [set(c) for c in comps]


def giant_component(g: Graph) -> tuple[Graph, np.ndarray]:
    return induced_subgraph(g, sorted(components(g)[0]))


@dataclass(frozen=True)
class GraphStats:
    n: int
    component_count: int
    mean_degree: float
    max_degree: int
    density: float
    global_clustering: float


def triangle_count(g: Graph) -> int:
    a = g.adjacency_matrix()
    return int((a @ a).multiply(a).sum()) // 6


def transitivity(g: Graph) -> float:
    """Global clustering: 3 * triangles / connected triples (0 when no triples)."""
    d = g.degrees
    triples = int((d * (d - 1)).sum()) // 2
    if triples == 0:
        return 0.0
    return 3.0 * triangle_count(g) / triples


def graph_stats(g: Graph) -> GraphStats:
    n = g.node_count
    if n < 2:
        raise InputError("graph_stats needs at least 2 nodes")
    d = g.degrees
    return GraphStats(
        n=n,
        component_count=len(components(g)),
        mean_degree=float(d.mean()),
        max_degree=int(d.max()),
        density=2.0 * g.edge_count / (n * (n - 1)),
        global_clustering=transitivity(g),
    )
