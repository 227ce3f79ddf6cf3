import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import comb

from alaamsim.ergm import STUDY_NETWORK, ErgmChain, ErgmParams, ergm_simulate, ergm_statistics
from alaamsim.errors import InputError
from alaamsim.graph import from_edge_list

from conftest import random_graph


def series_statistics(g, lam):
    """Alternating-sum definitions evaluated term by term."""
    a = g.dense_adjacency().astype(np.int64)
    d = a.sum(axis=1)
    sp = a @ a
    n = g.node_count
    as_ = sum((-1) ** k * comb(d, k).sum() / lam ** (k - 2) for k in range(2, n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    tri = [sp[i, j] for i, j in pairs if a[i, j]]
    two = [sp[i, j] for i, j in pairs]
    at = sum((-1) ** (k + 1) * comb(tri, k).sum() / lam ** (k - 1) for k in range(1, n))
    a2p = sum((-1) ** (k + 1) * comb(two, k).sum() / lam ** (k - 1) for k in range(1, n))
    return np.array([g.edge_count, as_, at, a2p])


def test_empty_and_single_edge():
    assert ergm_statistics(from_edge_list([], 5)).tolist() == [0, 0, 0, 0]
    assert ergm_statistics(from_edge_list([(0, 1)], 5)).tolist() == [1, 0, 0, 0]


@pytest.mark.parametrize("lam", [2.0, 3.0])
def test_k4_against_series(lam):
    k4 = from_edge_list(list(itertools.combinations(range(4), 2)), 4)
    np.testing.assert_allclose(ergm_statistics(k4, lam), series_statistics(k4, lam), rtol=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 0.6))
def test_random_graphs_against_series(seed, p):
    g = random_graph(9, p, np.random.default_rng(seed))
    np.testing.assert_allclose(ergm_statistics(g, 2.0), series_statistics(g, 2.0), rtol=1e-10, atol=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(3, 30))
def test_incremental_change_matches_scratch(seed, n):
    rng = np.random.default_rng(seed)
    g = random_graph(n, rng.uniform(0.05, 0.5), rng)
    chain = ErgmChain(n, 2.0, initial=g)
    before = ergm_statistics(g)
    for _ in range(5):
        i, j = sorted(rng.choice(n, 2, replace=False).tolist())
        delta = chain.toggle_change(i, j)
        edges = g.edge_set() ^ {(i, j)}
        after = ergm_statistics(from_edge_list(list(edges), n))
        np.testing.assert_allclose(delta, after - before, atol=1e-9)


def test_chain_tally_matches_final_graph():
    chain = ErgmChain(40, 2.0, rng=np.random.default_rng(1))
    chain.run(STUDY_NETWORK.theta, 50_000)
    np.testing.assert_allclose(chain.z, ergm_statistics(chain.graph()), atol=1e-8)
    assert chain.accepted > 0


@given(st.integers(0, 2**32 - 1))
def test_isomorphism_invariance(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(15, 0.3, rng)
    perm = rng.permutation(15)
    h = from_edge_list([(perm[a], perm[b]) for a, b in g.edges], 15)
    np.testing.assert_allclose(ergm_statistics(g), ergm_statistics(h), rtol=1e-12)


def test_edge_only_is_bernoulli():
    n, theta = 30, -1.0
    p = ErgmParams(edge=theta, n=n)
    dyads = n * (n - 1) // 2
    counts = np.array([ergm_simulate(p, 20 * dyads, s).edge_count for s in range(200)])
    target = 1 / (1 + math.exp(-theta))
    se = math.sqrt(target * (1 - target) / (dyads * len(counts)))
    assert abs(counts.mean() / dyads - target) < 3 * se


def test_zero_parameters_half_density():
    g = ergm_simulate(ErgmParams(n=60), 200_000, 3)
    dyads = 60 * 59 / 2
    assert abs(g.edge_count - dyads / 2) < 4 * math.sqrt(dyads / 4)


def test_deterministic_by_seed():
    p = ErgmParams(edge=-2.0, alt_k_triangle=0.5, n=50)
    assert ergm_simulate(p, 100_000, 7) == ergm_simulate(p, 100_000, 7)
    assert ergm_simulate(p, 100_000, 7) != ergm_simulate(p, 100_000, 8)


def test_params_validation():
    with pytest.raises(InputError):
        ErgmParams(lam=1.0)
    with pytest.raises(InputError):
        ErgmParams(n=1)
    with pytest.raises(InputError):
        ergm_simulate(ErgmParams(n=5), -1, 0)
