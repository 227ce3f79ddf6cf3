"""Network sampling: snowball (link-tracing) samples and random node samples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError
from .graph import Graph, induced_subgraph

UNBOUNDED = math.inf


@dataclass(frozen=True)
class SnowballConfig:
    """Snowball design.

    ``seeds`` is either a seed count (drawn uniformly without replacement)
    or an explicit sequence of seed node ids. ``max_follow`` is the
    fixed-choice limit m; ``math.inf`` follows every tie (BFS sampling).
    ``waves=0`` returns the seeds alone.
    """

    seeds: int | Sequence[int] = 1
    waves: int = 1
    max_follow: float = UNBOUNDED
    rng_seed: int = 0

    def __post_init__(self):
        if isinstance(self.seeds, (int, np.integer)):
            if self.seeds < 1:
                raise InputError("need at least one seed")
        elif len(self.seeds) < 1:
            raise InputError("need at least one seed")
        if self.waves < 0:
            raise InputError("waves must be >= 0")
        if not (self.max_follow == UNBOUNDED or (int(self.max_follow) == self.max_follow
                                                 and self.max_follow >= 1)):
            raise InputError("max_follow must be a positive integer or inf")

    @property
    def seed_count(self) -> int:
        if isinstance(self.seeds, (int, np.integer)):
            return int(self.seeds)
        return len(self.seeds)


@dataclass(frozen=True, eq=False)
class SnowballSample:
    """A snowball sample, indexed by sample-local node ids.

    ``origin_ids[k]`` is the source-graph id of sample node ``k``;
    ``followed_edges`` holds the traced ties as sample-local ``(a, b)``
    pairs with ``a < b``. ``waves`` is the design's wave count, so the
    outermost wave label is ``waves`` even if that wave came out empty.
    """

    graph: Graph
    wave_of: np.ndarray
    origin_ids: np.ndarray
    followed_edges: frozenset = field(default_factory=frozenset)
    waves: int = 0

    @property
    def size(self) -> int:
        return self.graph.node_count

    def wave_members(self, k: int) -> np.ndarray:
        return np.nonzero(self.wave_of == k)[0]

    def inner_nodes(self) -> np.ndarray:
        """Nodes whose outcome is modelled in conditional estimation."""
        return np.nonzero(self.wave_of < self.waves)[0]

    def outer_nodes(self) -> np.ndarray:
        return np.nonzero(self.wave_of == self.waves)[0]


def snowball(g: Graph, cfg: SnowballConfig) -> SnowballSample:
    """Draw a snowball sample.

    Each node of wave k-1 traces up to m of its ties to not-yet-sampled
    nodes, chosen uniformly at random; the targets form wave k. Frontier
    nodes are processed in discovery order, so a node reachable from two
    frontier nodes is credited to the first. The returned graph is the
    subgraph induced by every sampled node.
    """
    n = g.node_count
    rng = np.random.default_rng(cfg.rng_seed)
    if isinstance(cfg.seeds, (int, np.integer)):
        if cfg.seeds > n:
            raise InputError(f"cannot draw {cfg.seeds} seeds from {n} nodes")
        seeds = rng.choice(n, size=int(cfg.seeds), replace=False)
    else:
        seeds = np.asarray(cfg.seeds, dtype=np.int64)
        if len(np.unique(seeds)) != len(seeds):
            raise InputError("explicit seeds must be distinct")
        if len(seeds) and (seeds.min() < 0 or seeds.max() >= n):
            raise InputError("seed id out of range")

    wave = np.full(n, -1, dtype=np.int64)
    wave[seeds] = 0
    frontier = [int(s) for s in seeds]
    traced = []
    m = cfg.max_follow
    for k in range(1, cfg.waves + 1):
        nxt = []
        for i in frontier:
            nb = g.neighbors(i)
            cand = nb[wave[nb] < 0]
            if len(cand) == 0:
                continue
            if m != UNBOUNDED and len(cand) > m:
                cand = rng.choice(cand, size=int(m), replace=False)
            else:
                # keep RNG consumption independent of whether m binds
                cand = rng.permutation(cand)
            for j in cand:
                j = int(j)
                wave[j] = k
                nxt.append(j)
                traced.append((i, j))
        frontier = nxt
        if not frontier:
            break

    sampled = np.nonzero(wave >= 0)[0]
    sub, origin = induced_subgraph(g, sampled)
    local = np.full(n, -1, dtype=np.int64)
    local[origin] = np.arange(len(origin))
    followed = frozenset(tuple(sorted((int(local[a]), int(local[b])))) for a, b in traced)
    return SnowballSample(graph=sub, wave_of=wave[origin], origin_ids=origin,
                          followed_edges=followed, waves=cfg.waves)


def random_node_sample(g: Graph, k: int, rng_seed) -> tuple[Graph, np.ndarray]:
    """Induced subgraph on ``k`` nodes drawn uniformly without replacement."""
    if not 1 <= k <= g.node_count:
        raise InputError(f"sample size {k} outside [1, {g.node_count}]")
    rng = np.random.default_rng(rng_seed)
    keep = np.sort(rng.choice(g.node_count, size=k, replace=False))
    return induced_subgraph(g, keep)


@dataclass(frozen=True)
class SizeRow:
    waves: int
    seeds: int
    max_follow: float
    mean: float
    sd: float
    q05: float
    median: float
    q95: float
    replicates: int


def sample_size_sweep(g: Graph, waves: Sequence[int], seeds: Sequence[int],
                      max_follow: Sequence[float], replicates: int, rng_seed: int = 0) -> list[SizeRow]:
    """Distribution of snowball sample sizes over a design grid."""
    if replicates < 1:
        raise InputError("replicates must be >= 1")
    root = np.random.SeedSequence(rng_seed)
    rows = []
    for ci, (w, s, m) in enumerate((w, s, m) for w in waves for s in seeds for m in max_follow):
        children = np.random.SeedSequence(root.entropy, spawn_key=(ci,)).generate_state(replicates)
        sizes = np.array([
            snowball(g, SnowballConfig(seeds=s, waves=w, max_follow=m, rng_seed=int(c))).size
            for c in children
        ], dtype=float)
        q05, med, q95 = np.quantile(sizes, [0.05, 0.5, 0.95])
        rows.append(SizeRow(w, s, m, float(sizes.mean()),
                            float(sizes.std(ddof=1)) if replicates > 1 else 0.0,
                            float(q05), float(med), float(q95), replicates))
    return rows
