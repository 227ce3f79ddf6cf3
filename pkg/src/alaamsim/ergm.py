"""Test-network generation from an undirected ERGM.

Statistics are the edge count and the geometrically weighted
("alternating") k-star, k-triangle and 2-path statistics with decay
``lam``; with ``q = 1 - 1/lam`` and ``sp(i, j)`` the number of shared
partners of ``i`` and ``j``:

    edges  = |E|
    AS     = lam**2 * sum_i [q**deg(i) - 1 + deg(i)/lam]
    AT     = lam * sum_{(i,j) in E} [1 - q**sp(i,j)]
    A2P    = lam * sum_{i<j} [1 - q**sp(i,j)]

These are the closed forms of the alternating sums
sum_k (-1)**k S_k / lam**(k-2) over k-stars S_k and the analogous sums
over k-triangles and k-two-paths.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InputError
from .graph import Graph

log = logging.getLogger(__name__)

ERGM_EFFECTS = ("edge", "alt_k_star", "alt_k_triangle", "alt_two_path")


@dataclass(frozen=True)
class ErgmParams:
    edge: float = 0.0
    alt_k_star: float = 0.0
    alt_k_triangle: float = 0.0
    alt_two_path: float = 0.0
    lam: float = 2.0
    n: int = 500

    def __post_init__(self):
        if not self.lam > 1:
            raise InputError("lambda must be > 1")
        if self.n < 2:
            raise InputError("ERGM needs n >= 2")

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.edge, self.alt_k_star, self.alt_k_triangle, self.alt_two_path])


# Network used for the simulation studies (500 nodes).
STUDY_NETWORK = ErgmParams(edge=-4.0, alt_k_star=0.2, alt_k_triangle=1.0, alt_two_path=-0.2,
                           lam=2.0, n=500)


def ergm_statistics(g: Graph, lam: float = 2.0) -> np.ndarray:
    """Return ``(edges, AS, AT, A2P)`` computed from scratch."""
    if not lam > 1:
        raise InputError("lambda must be > 1")
    q = 1.0 - 1.0 / lam
    n = g.node_count
    if n == 0 or g.edge_count == 0:
        return np.zeros(4)
    a = g.adjacency_matrix()
    d = g.degrees.astype(np.float64)
    alt_star = lam * lam * float(np.sum(q ** d - 1.0 + d / lam))
    sp = (a @ a).toarray()
    e = g.edges
    alt_tri = lam * float(np.sum(1.0 - q ** sp[e[:, 0], e[:, 1]]))
    iu = np.triu_indices(n, 1)
    alt_2p = lam * float(np.sum(1.0 - q ** sp[iu]))
    return np.array([float(g.edge_count), alt_star, alt_tri, alt_2p])


class ErgmChain:
    """Single-dyad toggle Metropolis chain over graphs on ``n`` nodes."""

    def __init__(self, n: int, lam: float = 2.0, initial: Graph | None = None, rng=None):
        self.n = int(n)
        self.lam = float(lam)
        self.adj = np.zeros((n, n), dtype=np.uint8)
        self.nbr = np.zeros((n, max(n - 1, 1)), dtype=np.int64)
        self.deg = np.zeros(n, dtype=np.int64)
        self.pos = np.zeros((n, n), dtype=np.int64)
        self.sp = np.zeros((n, n), dtype=np.int64)
        self.qpow = (1.0 - 1.0 / self.lam) ** np.arange(n + 1, dtype=np.float64)
        self.z = np.zeros(4)
        if initial is not None:
            if initial.node_count != n:
                raise InputError("initial graph has the wrong node count")
            _kernels.ergm_load(self.adj, self.nbr, self.deg, self.pos, self.sp, initial.edges)
            self.z = ergm_statistics(initial, lam)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.accepted = 0

    def toggle_change(self, i: int, j: int) -> np.ndarray:
        """Change in statistics from toggling dyad (i, j), without applying it."""
        delta = np.zeros(4)
        if self.adj[i, j]:
            _kernels._ergm_remove(self.adj, self.nbr, self.deg, self.pos, self.sp, i, j)
            _kernels.ergm_add_change(self.adj, self.nbr, self.deg, self.sp, self.qpow, self.lam,
                                     i, j, delta)
            _kernels._ergm_add(self.adj, self.nbr, self.deg, self.pos, self.sp, i, j)
            return -delta
        _kernels.ergm_add_change(self.adj, self.nbr, self.deg, self.sp, self.qpow, self.lam,
                                 i, j, delta)
        return delta

    def run(self, theta, steps: int, chunk: int = 1 << 20):
        theta = np.asarray(theta, dtype=np.float64)
        left = int(steps)
        n = self.n
        while left > 0:
            k = min(chunk, left)
            first = self.rng.integers(0, n, size=k)
            second = self.rng.integers(0, n - 1, size=k)
            second += second >= first
            unif = self.rng.random(k)
            self.accepted += _kernels.ergm_toggles(self.adj, self.nbr, self.deg, self.pos, self.sp,
                                                   self.qpow, self.lam, theta, first, second,
                                                   unif, self.z)
            left -= k

    def graph(self) -> Graph:
        i, j = np.nonzero(np.triu(self.adj, 1))
        return Graph(self.n, np.column_stack([i, j]))


def ergm_simulate(p: ErgmParams, burn_in: int, rng_seed: int) -> Graph:
    """Run the chain from the empty graph for ``burn_in`` toggles and return the final graph."""
    if burn_in < 0:
        raise InputError("burn_in must be >= 0")
    chain = ErgmChain(p.n, p.lam, rng=np.random.default_rng(rng_seed))
    chain.run(p.theta, burn_in)
    g = chain.graph()
    log.debug("ergm_simulate: n=%d edges=%d accepted=%d", p.n, g.edge_count, chain.accepted)
    return g
