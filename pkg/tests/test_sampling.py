import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from alaamsim.errors import InputError
from alaamsim.graph import from_edge_list
from alaamsim.sampling import (UNBOUNDED, SnowballConfig, random_node_sample, sample_size_sweep,
                               snowball)

from conftest import random_graph


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.node_count))
    h.add_edges_from(map(tuple, g.edges))
    return h


def test_all_seeds_is_whole_graph(rng):
    g = random_graph(15, 0.3, rng)
    smp = snowball(g, SnowballConfig(seeds=15, waves=2))
    assert smp.graph == g and (smp.wave_of == 0).all()


def test_path_is_traced_in_order():
    g = from_edge_list([(0, 1), (1, 2)], 3)
    smp = snowball(g, SnowballConfig(seeds=[0], waves=2))
    assert list(smp.origin_ids) == [0, 1, 2] and list(smp.wave_of) == [0, 1, 2]
    assert smp.followed_edges == {(0, 1), (1, 2)}


def test_star_fixed_choice_is_uniform():
    star = from_edge_list([(0, k) for k in range(1, 6)], 6)
    subsets = {c: 0 for c in itertools.combinations(range(1, 6), 3)}
    reps = 5000
    for s in range(reps):
        smp = snowball(star, SnowballConfig(seeds=[0], waves=1, max_follow=3, rng_seed=s))
        assert smp.size == 4
        subsets[tuple(int(x) for x in smp.origin_ids[1:])] += 1
    assert len(subsets) == 10
    counts = np.array(list(subsets.values()))
    assert sps.chisquare(counts).pvalue > 0.001


def test_complete_graph_one_wave():
    k10 = from_edge_list(list(itertools.combinations(range(10), 2)), 10)
    assert all(snowball(k10, SnowballConfig(seeds=1, waves=1, rng_seed=s)).size == 10 for s in range(5))


def test_zero_waves_is_seeds_only(rng):
    g = random_graph(30, 0.2, rng)
    rows = sample_size_sweep(g, waves=[0], seeds=[4], max_follow=[UNBOUNDED], replicates=20)
    assert rows[0].mean == 4 and rows[0].sd == 0


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3),
       st.sampled_from([1, 2, 3, UNBOUNDED]))
def test_wave_invariants(seed, seeds, waves, m):
    rng = np.random.default_rng(seed)
    g = random_graph(25, 0.12, rng)
    smp = snowball(g, SnowballConfig(seeds=seeds, waves=waves, max_follow=m, rng_seed=seed))
    wave = smp.wave_of
    # BFS distance from the seeds within the traced ties equals the wave label
    traced = nx.Graph()
    traced.add_nodes_from(range(smp.size))
    traced.add_edges_from(smp.followed_edges)
    dist = nx.multi_source_dijkstra_path_length(traced, set(np.nonzero(wave == 0)[0].tolist()))
    assert all(dist[i] == wave[i] for i in range(smp.size))
    # each node traces at most m ties, each to the next wave
    parents = {}
    for a, b in smp.followed_edges:
        lo, hi = (a, b) if wave[a] < wave[b] else (b, a)
        assert wave[hi] == wave[lo] + 1
        parents.setdefault(lo, []).append(hi)
    if m != UNBOUNDED:
        assert all(len(v) <= m for v in parents.values())
    # followed ties are sample edges; the sample graph is the induced subgraph
    assert set(smp.followed_edges) <= smp.graph.edge_set()
    o = smp.origin_ids
    kept = set(o.tolist())
    induced = {(a, b) for a, b in g.edge_set() if a in kept and b in kept}
    assert {(int(o[a]), int(o[b])) for a, b in smp.graph.edge_set()} == induced
    assert smp.wave_of.max() <= waves and (wave == 0).sum() == seeds


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(0, 4))
def test_unbounded_snowball_is_bfs(seed, seeds, waves):
    rng = np.random.default_rng(seed)
    g = random_graph(30, 0.1, rng)
    smp = snowball(g, SnowballConfig(seeds=seeds, waves=waves, rng_seed=seed))
    start = smp.origin_ids[smp.wave_of == 0].tolist()
    dist = nx.multi_source_dijkstra_path_length(to_nx(g), set(start), cutoff=waves)
    assert sorted(dist) == smp.origin_ids.tolist()
    assert all(dist[int(o)] == w for o, w in zip(smp.origin_ids, smp.wave_of))


def test_deterministic_and_seed_sensitive(rng):
    g = random_graph(60, 0.08, rng)
    cfg = SnowballConfig(seeds=3, waves=2, max_follow=2, rng_seed=5)
    a, b = snowball(g, cfg), snowball(g, cfg)
    assert a.graph == b.graph and np.array_equal(a.wave_of, b.wave_of)
    others = {tuple(snowball(g, SnowballConfig(seeds=3, waves=2, max_follow=2, rng_seed=s)).origin_ids)
              for s in range(10)}
    assert len(others) > 1


@pytest.mark.parametrize("kw", [dict(seeds=0), dict(waves=-1), dict(max_follow=0),
                                dict(max_follow=2.5), dict(seeds=[])])
def test_config_validation(kw):
    with pytest.raises(InputError):
        SnowballConfig(**kw)


def test_too_many_seeds(rng):
    with pytest.raises(InputError):
        snowball(random_graph(5, 0.5, rng), SnowballConfig(seeds=6))
    with pytest.raises(InputError):
        snowball(random_graph(5, 0.5, rng), SnowballConfig(seeds=[1, 1]))


def test_random_node_sample(rng):
    g = random_graph(40, 0.2, rng)
    full, origin = random_node_sample(g, 40, 1)
    assert full == g and list(origin) == list(range(40))
    one, _ = random_node_sample(g, 1, 1)
    assert one.node_count == 1 and one.edge_count == 0
    with pytest.raises(InputError):
        random_node_sample(g, 0, 1)
    with pytest.raises(InputError):
        random_node_sample(g, 41, 1)


def test_random_sample_has_more_isolates_than_snowball():
    rng = np.random.default_rng(2)
    g = random_graph(400, 0.01, rng)
    iso_random, iso_snow = [], []
    for s in range(20):
        sub, _ = random_node_sample(g, 60, s)
        iso_random.append(np.mean(sub.degrees == 0))
        smp = snowball(g, SnowballConfig(seeds=3, waves=3, max_follow=3, rng_seed=s))
        iso_snow.append(np.mean(smp.graph.degrees == 0))
    assert np.mean(iso_random) > 3 * np.mean(iso_snow)


def test_sample_size_monotone(rng):
    g = random_graph(300, 0.015, rng)
    rows = sample_size_sweep(g, waves=[1, 2, 3], seeds=[2, 6], max_follow=[2, UNBOUNDED],
                             replicates=100, rng_seed=4)
    mean = {(r.waves, r.seeds, r.max_follow): r.mean for r in rows}
    for (w, s, m), v in mean.items():
        if w < 3:
            assert mean[(w + 1, s, m)] >= v
        if s == 2:
            assert mean[(w, 6, m)] >= v
        if m == 2:
            assert mean[(w, s, UNBOUNDED)] >= v
    sd = {(r.waves, r.seeds, r.max_follow): r.sd for r in rows}
    assert sd[(3, 2, UNBOUNDED)] > sd[(3, 2, 2)]
    assert all(math.isfinite(r.q05) and r.q05 <= r.median <= r.q95 for r in rows)
