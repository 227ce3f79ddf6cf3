"""The five-effect autologistic actor attribute model.

Outcomes ``y`` are binary node labels on a fixed graph. The model is the
exponential family

    P(y) ∝ exp(theta · z(y)),

with sufficient statistics ``z = (density, activity, contagion, binary,
continuous)``:

* density     = sum_i y_i
* activity    = sum_i y_i * deg(i)
* contagion   = sum_{(i,j) in E} y_i * y_j
* binary      = sum_i y_i * u_i
* continuous  = sum_i y_i * v_i
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .errors import InputError
from .graph import Graph

EFFECTS = ("density", "activity", "contagion", "binary", "continuous")
N_EFFECTS = len(EFFECTS)

_CHUNK = 1 << 20
_EMPTY_OUT = np.zeros((0, 0), dtype=np.int8)


@dataclass(frozen=True)
class _EffectVector:
    density: float = 0.0
    activity: float = 0.0
    contagion: float = 0.0
    binary: float = 0.0
    continuous: float = 0.0

    def __post_init__(self):
        pass

    @classmethod
    def from_array(cls, values):
        values = np.asarray(values, dtype=float).ravel()
        if values.shape != (N_EFFECTS,):
            raise InputError(f"expected {N_EFFECTS} values, got {values.shape}")
        return cls(*(float(x) for x in values))

    @classmethod
    def from_mapping(cls, mapping):
        unknown = set(mapping) - set(EFFECTS)
        if unknown:
            raise InputError(f"unknown effect names: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in mapping.items()})

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **changes):
        d = self.as_dict()
        d.update(changes)
        return type(self)(**d)

    def __array__(self, dtype=None, copy=None):
        a = self.as_array()
        return a if dtype is None else a.astype(dtype)

    def __iter__(self):
        return iter(self.as_array())

    def __getitem__(self, key):
        if isinstance(key, str):
            return getattr(self, key)
        return self.as_array()[key]


class ParameterVector(_EffectVector):
    """Model parameters, one per effect."""

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise InputError("parameter values must be finite")


class StatisticsVector(_EffectVector):
    """Sufficient statistics (or their expectation/difference)."""


@dataclass(frozen=True, eq=False)
class AttributeTable:
    """Per-node binary covariate, continuous covariate and binary outcome."""

    binary: np.ndarray
    continuous: np.ndarray
    outcome: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.binary)
        c = np.asarray(self.continuous, dtype=np.float64)
        y = np.asarray(self.outcome)
        if not (b.ndim == c.ndim == y.ndim == 1 and len(b) == len(c) == len(y)):
            raise InputError("binary, continuous and outcome must be 1-d and of equal length")
        if not np.isin(b, (0, 1)).all():
            raise InputError("binary covariate must be 0/1")
        if not np.isin(y, (0, 1)).all():
            raise InputError("outcome must be 0/1")
        if not np.isfinite(c).all():
            raise InputError("continuous covariate must be finite")
        object.__setattr__(self, "binary", b.astype(np.float64))
        object.__setattr__(self, "continuous", c.copy())
        object.__setattr__(self, "outcome", y.astype(np.int8))
        for arr in (self.binary, self.continuous, self.outcome):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.outcome)

    def __eq__(self, other):
        if not isinstance(other, AttributeTable):
            return NotImplemented
        return (np.array_equal(self.binary, other.binary)
                and np.array_equal(self.continuous, other.continuous)
                and np.array_equal(self.outcome, other.outcome))

    def with_outcome(self, outcome) -> "AttributeTable":
        return AttributeTable(self.binary, self.continuous, outcome)

    def subset(self, nodes) -> "AttributeTable":
        nodes = np.asarray(nodes, dtype=np.int64)
        return AttributeTable(self.binary[nodes], self.continuous[nodes], self.outcome[nodes])


def _check_sizes(g: Graph, attrs: AttributeTable):
    if len(attrs) != g.node_count:
        raise InputError(f"attribute table has {len(attrs)} rows but graph has {g.node_count} nodes")


def statistics_array(g: Graph, attrs: AttributeTable, y=None) -> np.ndarray:
    _check_sizes(g, attrs)
    y = attrs.outcome if y is None else np.asarray(y)
    yf = y.astype(np.float64)
    e = g.edges
    contagion = float((yf[e[:, 0]] * yf[e[:, 1]]).sum()) if len(e) else 0.0
    return np.array([
        yf.sum(),
        yf @ g.degrees.astype(np.float64),
        contagion,
        yf @ attrs.binary,
        yf @ attrs.continuous,
    ])


def statistics(g: Graph, attrs: AttributeTable) -> StatisticsVector:
    return StatisticsVector.from_array(statistics_array(g, attrs))


def change_statistics(g: Graph, attrs: AttributeTable, i: int) -> StatisticsVector:
    """Change in statistics when ``y_i`` goes from 0 to 1, others held fixed."""
    _check_sizes(g, attrs)
    if not 0 <= i < g.node_count:
        raise InputError(f"node {i} out of range")
    nb = g.neighbors(i)
    return StatisticsVector(
        density=1.0,
        activity=float(len(nb)),
        contagion=float(attrs.outcome[nb].sum()),
        binary=float(attrs.binary[i]),
        continuous=float(attrs.continuous[i]),
    )


def log_weight(theta, z) -> float:
    """Unnormalised log-probability ``theta · z``."""
    return float(np.dot(np.asarray(theta, dtype=float), np.asarray(z, dtype=float)))


@dataclass(frozen=True)
class SimulationConfig:
    burn_in: int = 0
    spacing: int = 1
    sample_count: int = 1
    free_nodes: tuple | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0:
            raise InputError("burn_in must be >= 0")
        if self.spacing < 1:
            raise InputError("spacing must be >= 1")
        if self.sample_count < 1:
            raise InputError("sample_count must be >= 1")
        if self.free_nodes is not None and len(self.free_nodes) == 0:
            raise InputError("free_nodes must be non-empty")


class OutcomeChain:
    """A single-node-toggle Metropolis chain over outcome vectors.

    Only nodes in ``free_nodes`` are ever toggled; the other outcomes stay
    at their initial values. The statistics tally ``z`` is maintained
    incrementally. With ``check=True`` it is recounted from scratch after
    every call and compared.
    """

    def __init__(self, g: Graph, attrs: AttributeTable, free_nodes=None, initial=None,
                 rng=None, check=False):
        _check_sizes(g, attrs)
        self.graph = g
        self.attrs = attrs
        if free_nodes is None:
            free = np.arange(g.node_count, dtype=np.int64)
        else:
            free = np.unique(np.asarray(list(free_nodes) if not isinstance(free_nodes, np.ndarray)
                                        else free_nodes, dtype=np.int64))
        if len(free) == 0:
            raise InputError("free_nodes must be non-empty")
        if free[0] < 0 or free[-1] >= g.node_count:
            raise InputError("free node id out of range")
        self.free = free
        if initial is None:
            y = np.zeros(g.node_count, dtype=np.int8)
        else:
            y = np.asarray(initial).astype(np.int8).copy()
            if y.shape != (g.node_count,) or not np.isin(y, (0, 1)).all():
                raise InputError("initial outcome vector must be 0/1 of length node_count")
        self.y = y
        self.z = statistics_array(g, attrs, y)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.check = check
        self.accepted = 0
        self.steps = 0

    def _draw(self, k):
        return self.rng.integers(0, len(self.free), size=k), self.rng.random(k)

    def _verify(self):
        if self.check:
            expect = statistics_array(self.graph, self.attrs, self.y)
            if not np.allclose(expect, self.z, rtol=0, atol=1e-8):
                raise AssertionError(f"running statistics {self.z} != recount {expect}")

    def advance(self, theta, steps: int) -> np.ndarray:
        """Run ``steps`` toggles at ``theta``; return a copy of the tally."""
        theta = np.asarray(theta, dtype=np.float64)
        g, a = self.graph, self.attrs
        left = int(steps)
        while left > 0:
            k = min(left, _CHUNK)
            picks, unif = self._draw(k)
            self.accepted += _kernels.alaam_toggles(
                g.indptr, g.indices, self.y, self.free, a.binary, a.continuous,
                theta, picks, unif, self.z, _EMPTY_OUT, 0)
            left -= k
        self.steps += int(steps)
        self._verify()
        return self.z.copy()

    def sample_states(self, theta, count: int, spacing: int) -> np.ndarray:
        """Record the state every ``spacing`` toggles, ``count`` times."""
        theta = np.asarray(theta, dtype=np.float64)
        g, a = self.graph, self.attrs
        out = np.empty((count, g.node_count), dtype=np.int8)
        per_chunk = max(1, _CHUNK // spacing)
        done = 0
        while done < count:
            c = min(per_chunk, count - done)
            picks, unif = self._draw(c * spacing)
            self.accepted += _kernels.alaam_toggles(
                g.indptr, g.indices, self.y, self.free, a.binary, a.continuous,
                theta, picks, unif, self.z, out[done:done + c], spacing)
            done += c
        self.steps += count * spacing
        self._verify()
        return out

    def sample_statistics(self, theta, count: int, spacing: int) -> np.ndarray:
        """Record the statistics tally every ``spacing`` toggles, ``count`` times."""
        theta = np.asarray(theta, dtype=np.float64)
        g, a = self.graph, self.attrs
        out = np.empty((count, N_EFFECTS), dtype=np.float64)
        per_chunk = max(1, _CHUNK // spacing)
        done = 0
        while done < count:
            c = min(per_chunk, count - done)
            picks, unif = self._draw(c * spacing)
            _kernels.alaam_sample_stats(
                g.indptr, g.indices, self.y, self.free, a.binary, a.continuous,
                theta, picks, unif, self.z, spacing, out[done:done + c])
            done += c
        self.steps += count * spacing
        self._verify()
        return out


def simulate_outcomes(g: Graph, attrs: AttributeTable, theta, cfg: SimulationConfig,
                      initial=None, check=False) -> np.ndarray:
    """Draw ``cfg.sample_count`` outcome vectors from the model.

    Returns an int8 array of shape ``(sample_count, n)``. The chain starts
    from ``initial`` (all-zero by default; when conditioning, pass the
    vector holding the fixed outcomes).
    """
    chain = OutcomeChain(g, attrs, cfg.free_nodes, initial=initial,
                         rng=np.random.default_rng(cfg.rng_seed), check=check)
    theta = np.asarray(theta, dtype=np.float64)
    if cfg.burn_in:
        chain.advance(theta, cfg.burn_in)
    return chain.sample_states(theta, cfg.sample_count, cfg.spacing)


MAX_EXACT_NODES = 20


def _enumerate(g: Graph, attrs: AttributeTable, free_nodes=None):
    _check_sizes(g, attrs)
    n = g.node_count
    free = np.arange(n) if free_nodes is None else np.unique(np.asarray(free_nodes, dtype=np.int64))
    if len(free) > MAX_EXACT_NODES:
        raise InputError(f"exact enumeration is limited to {MAX_EXACT_NODES} free nodes, got {len(free)}")
    codes = np.arange(1 << len(free), dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(len(free))) & 1).astype(np.int8)
    states = np.repeat(attrs.outcome[None, :], len(codes), axis=0)
    states[:, free] = bits
    yf = states.astype(np.float64)
    e = g.edges
    contagion = (yf[:, e[:, 0]] * yf[:, e[:, 1]]).sum(axis=1) if len(e) else np.zeros(len(codes))
    z = np.column_stack([
        yf.sum(axis=1),
        yf @ g.degrees.astype(np.float64),
        contagion,
        yf @ attrs.binary,
        yf @ attrs.continuous,
    ])
    return states, z


def exact_distribution(g: Graph, attrs: AttributeTable, theta, free_nodes=None):
    """Enumerate every outcome vector (over ``free_nodes``; others fixed).

    Returns ``(states, z, prob, log_kappa)``: the int8 states, their
    statistics, exact probabilities and the log normalising constant.
    State ``k`` sets free node ``free[b]`` to bit ``b`` of ``k``.
    """
    states, z = _enumerate(g, attrs, free_nodes)
    lw = z @ np.asarray(theta, dtype=np.float64)
    log_kappa = float(logsumexp(lw))
    prob = np.exp(lw - log_kappa)
    return states, z, prob, log_kappa


def exact_moments(g: Graph, attrs: AttributeTable, theta, free_nodes=None):
    """Exact mean statistics and normalising constant by full enumeration."""
    _, z, prob, log_kappa = exact_distribution(g, attrs, theta, free_nodes)
    mean = StatisticsVector.from_array(prob @ z)
    return mean, math.exp(log_kappa) if log_kappa < 709 else math.inf


def exact_covariance(g: Graph, attrs: AttributeTable, theta, free_nodes=None) -> np.ndarray:
    _, z, prob, _ = exact_distribution(g, attrs, theta, free_nodes)
    mean = prob @ z
    dz = z - mean
    return (dz * prob[:, None]).T @ dz


def exact_log_likelihood(g: Graph, attrs: AttributeTable, theta, free_nodes=None) -> float:
    _, _, _, log_kappa = exact_distribution(g, attrs, theta, free_nodes)
    return log_weight(theta, statistics_array(g, attrs)) - log_kappa
