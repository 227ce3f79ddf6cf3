"""Simulation studies of estimation under network sampling.

A study fixes one network and one covariate draw, simulates ``N_A``
outcome vectors at known parameters, and then for each sampling cell
(no sampling, a random-node sample size, or a snowball design) samples
every replicate afresh, estimates, and summarises RMSE and type I/II
error rates over the converged replicates.

All randomness derives from the master seed through
``numpy.random.SeedSequence(seed, spawn_key=...)``. Keys name the stage
(network, covariates, outcomes, sampling, estimation) and, for
per-replicate stages, the cell and the replicate index, so a cell gives
the same results whatever grid it is run in.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from .errors import AlaamError, InputError
from .ergm import ErgmParams, ergm_simulate
from .estimation import EstimationConfig, conditional_estimate, estimate
from .graph import Graph, giant_component
from .inference import (Interval, bca_interval, rmse, type1_indicator, type2_indicator,
                        wilson_interval)
from .model import (EFFECTS, N_EFFECTS, AttributeTable, ParameterVector, SimulationConfig,
                    simulate_outcomes)
from .sampling import UNBOUNDED, SnowballConfig, random_node_sample, snowball

log = logging.getLogger(__name__)

# Parameters of the simulated outcomes on the 500-node ERGM network.
ERGM_THETA = ParameterVector(density=-7.20, activity=0.55, contagion=1.00, binary=1.20,
                             continuous=1.15)
# Density used when Activity is zeroed, per network.
ACTIVITY_ZERO_DENSITY = {"ergm": -4.0, "project90": -7.0, "addhealth": -6.0}

_STAGE_NETWORK, _STAGE_COVARIATES, _STAGE_OUTCOMES, _STAGE_SAMPLE, _STAGE_ESTIMATE = range(5)
_SCHEME_CODES = {"none": 0, "random": 1, "snowball": 2}


def child_seed(master: int, *key: int) -> int:
    """Deterministic 64-bit child seed for ``key`` under ``master``."""
    ss = np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class NetworkSource:
    """Either an edge-list file or ERGM generation parameters."""

    path: str | None = None
    one_based: bool = False
    giant_component: bool = False
    ergm: ErgmParams | None = None
    ergm_burn_in: int = 10_000_000

    def __post_init__(self):
        if (self.path is None) == (self.ergm is None):
            raise InputError("network source needs exactly one of path or ergm")

    def load(self, seed: int) -> Graph:
        if self.ergm is not None:
            g = ergm_simulate(self.ergm, self.ergm_burn_in, child_seed(seed, _STAGE_NETWORK))
        else:
            from .io import read_edge_list
            g = read_edge_list(self.path, one_based=self.one_based)
        if self.giant_component:
            g, _ = giant_component(g)
        return g


@dataclass(frozen=True)
class Cell:
    """One sampling condition."""

    scheme: str
    size: int | None = None
    waves: int | None = None
    seeds: int | None = None
    max_follow: float | None = None

    def key(self) -> tuple[int, ...]:
        m = self.max_follow
        m_code = 0 if m is None or m == UNBOUNDED else int(m)
        return (_SCHEME_CODES[self.scheme], self.size or 0, self.waves or 0, self.seeds or 0, m_code)

    def label(self) -> str:
        if self.scheme == "none":
            return "none"
        if self.scheme == "random":
            return f"random(size={self.size})"
        return f"snowball(waves={self.waves}, seeds={self.seeds}, m={format_m(self.max_follow)})"


def format_m(m) -> str:
    if m is None:
        return ""
    return "Inf" if m == UNBOUNDED else str(int(m))


@dataclass(frozen=True)
class Sampling:
    """Sampling scheme: ``none``, ``random`` over ``sizes``, or a snowball grid."""

    scheme: str = "none"
    sizes: tuple[int, ...] = ()
    waves: tuple[int, ...] = ()
    seeds: tuple[int, ...] = ()
    max_follow: tuple[float, ...] = ()

    def __post_init__(self):
        if self.scheme not in _SCHEME_CODES:
            raise InputError(f"unknown sampling scheme {self.scheme!r}")
        if self.scheme == "random" and not self.sizes:
            raise InputError("random sampling needs at least one size")
        if self.scheme == "snowball" and not (self.waves and self.seeds and self.max_follow):
            raise InputError("snowball sampling needs waves, seeds and max_follow lists")

    def cells(self) -> list[Cell]:
        if self.scheme == "none":
            return [Cell("none")]
        if self.scheme == "random":
            return [Cell("random", size=int(k)) for k in self.sizes]
        return [Cell("snowball", waves=int(w), seeds=int(s), max_follow=m)
                for w in self.waves for s in self.seeds for m in self.max_follow]


@dataclass(frozen=True)
class ExperimentConfig:
    network: NetworkSource
    true_theta: ParameterVector = ERGM_THETA
    replicates: int = 100
    binary_fraction: float = 0.5
    sampling: Sampling = Sampling()
    estimation: EstimationConfig = EstimationConfig()
    zero_effect: str | None = None
    density_override: float | None = None
    outcome_burn_in: int = 1_000_000
    outcome_spacing: int = 100_000
    covariates_per_replicate: bool = False
    reuse_sample: bool = False
    bootstrap_replicates: int = 20_000
    seed: int = 0

    def __post_init__(self):
        if self.replicates < 2:
            raise InputError("need at least 2 replicates")
        if not 0.0 <= self.binary_fraction <= 1.0:
            raise InputError("binary_fraction must be in [0, 1]")
        if self.zero_effect is not None and self.zero_effect not in EFFECTS[1:]:
            raise InputError(f"zero_effect must be one of {EFFECTS[1:]}")

    def simulation_theta(self) -> ParameterVector:
        """Parameters the outcomes are simulated at (zero effect applied)."""
        theta = self.true_theta
        if self.zero_effect is not None:
            theta = theta.replace(**{self.zero_effect: 0.0})
            if self.density_override is not None:
                theta = theta.replace(density=self.density_override)
        return theta


@dataclass
class Study:
    """The fixed inputs shared by every cell: network, covariates, outcomes."""

    graph: Graph
    covariates: list[AttributeTable]
    outcomes: np.ndarray
    theta: ParameterVector

    def attrs(self, r: int) -> AttributeTable:
        cov = self.covariates[r if len(self.covariates) > 1 else 0]
        return cov.with_outcome(self.outcomes[r])

    def outcome_hash(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.outcomes).tobytes()).hexdigest()


def draw_covariates(n: int, binary_fraction: float, rng) -> AttributeTable:
    """Binary covariate positive on exactly ``round(fraction * n)`` random nodes; continuous N(0, 1)."""
    u = np.zeros(n, dtype=np.int8)
    u[rng.choice(n, size=int(round(binary_fraction * n)), replace=False)] = 1
    v = rng.standard_normal(n)
    return AttributeTable(u, v, np.zeros(n, dtype=np.int8))


def prepare_study(cfg: ExperimentConfig, graph: Graph | None = None) -> Study:
    g = graph if graph is not None else cfg.network.load(cfg.seed)
    n = g.node_count
    theta = cfg.simulation_theta()
    sim = dict(burn_in=cfg.outcome_burn_in, spacing=cfg.outcome_spacing)
    if cfg.covariates_per_replicate:
        covs = [draw_covariates(n, cfg.binary_fraction,
                                np.random.default_rng(child_seed(cfg.seed, _STAGE_COVARIATES, r)))
                for r in range(cfg.replicates)]
        outcomes = np.vstack([
            simulate_outcomes(g, covs[r], theta, SimulationConfig(
                sample_count=1, rng_seed=child_seed(cfg.seed, _STAGE_OUTCOMES, r), **sim))
            for r in range(cfg.replicates)])
    else:
        covs = [draw_covariates(n, cfg.binary_fraction,
                                np.random.default_rng(child_seed(cfg.seed, _STAGE_COVARIATES)))]
        outcomes = simulate_outcomes(g, covs[0], theta, SimulationConfig(
            sample_count=cfg.replicates, rng_seed=child_seed(cfg.seed, _STAGE_OUTCOMES), **sim))
    return Study(graph=g, covariates=covs, outcomes=outcomes, theta=theta)


@dataclass
class ReplicateRecord:
    replicate: int
    estimate: np.ndarray
    std_error: np.ndarray
    t_ratio: np.ndarray
    converged: bool
    sample_size: int
    free_nodes: int
    error: str | None = None


def run_replicate(study: Study, cfg: ExperimentConfig, cell: Cell, r: int) -> ReplicateRecord:
    g = study.graph
    attrs = study.attrs(r)
    sample_r = 0 if cfg.reuse_sample else r
    sample_seed = child_seed(cfg.seed, _STAGE_SAMPLE, *cell.key(), sample_r)
    est_cfg = replace(cfg.estimation, rng_seed=child_seed(cfg.seed, _STAGE_ESTIMATE, *cell.key(), r))
    nan = np.full(N_EFFECTS, np.nan)
    size = g.node_count
    try:
        if cell.scheme == "none":
            res = estimate(g, attrs, est_cfg)
        elif cell.scheme == "random":
            sub, origin = random_node_sample(g, cell.size, sample_seed)
            size = sub.node_count
            res = estimate(sub, attrs.subset(origin), est_cfg)
        else:
            smp = snowball(g, SnowballConfig(seeds=cell.seeds, waves=cell.waves,
                                             max_follow=cell.max_follow, rng_seed=sample_seed))
            size = smp.size
            res = conditional_estimate(smp, attrs.subset(smp.origin_ids), est_cfg)
    except AlaamError as exc:
        return ReplicateRecord(r, nan, nan.copy(), nan.copy(), False, size, 0, error=str(exc))
    return ReplicateRecord(r, res.theta_hat.as_array(), res.std_errors, res.t_ratios,
                           res.converged, size, res.sample_info[0], error=res.error)


@dataclass
class EffectSummary:
    effect: str
    true_value: float
    rmse: float
    rmse_ci: Interval
    type1: float | None
    type1_ci: Interval | None
    type2: float | None
    type2_ci: Interval | None


@dataclass
class ExperimentSummary:
    cell: Cell
    effects: list[EffectSummary]
    n_converged: int
    n_total: int
    sample_size_mean: float
    records: list[ReplicateRecord] = field(default_factory=list)
    outcome_hash: str = ""
    degenerate: bool = False

    def effect(self, name: str) -> EffectSummary:
        return self.effects[EFFECTS.index(name)]


def summarise(cell: Cell, records: Sequence[ReplicateRecord], truth: ParameterVector,
              bootstrap_replicates: int = 20_000, seed: int = 0) -> ExperimentSummary:
    """Aggregate replicate records. Only converged replicates enter the rates."""
    records = sorted(records, key=lambda rec: rec.replicate)
    ok = [rec for rec in records if rec.converged]
    k = len(ok)
    truth_arr = truth.as_array()
    effects = []
    nan_iv = Interval(math.nan, math.nan, degenerate=True)
    for e, name in enumerate(EFFECTS):
        t = float(truth_arr[e])
        if k == 0:
            effects.append(EffectSummary(name, t, math.nan, nan_iv,
                                         math.nan if t == 0 else None, nan_iv if t == 0 else None,
                                         None if t == 0 else math.nan, None if t == 0 else nan_iv))
            continue
        est = np.array([rec.estimate[e] for rec in ok])
        se = np.array([rec.std_error[e] for rec in ok])
        sq = (est - t) ** 2
        ci = bca_interval(sq, replicates=bootstrap_replicates,
                          rng_seed=child_seed(seed, 99, *cell.key(), e))
        rmse_ci = Interval(math.sqrt(ci.lo), math.sqrt(ci.hi), degenerate=ci.degenerate)
        if t == 0:
            hits = sum(type1_indicator(a, b) for a, b in zip(est, se))
            effects.append(EffectSummary(name, t, rmse(est, t), rmse_ci,
                                         hits / k, wilson_interval(hits, k), None, None))
        else:
            hits = sum(type2_indicator(a, b, int(np.sign(t))) for a, b in zip(est, se))
            effects.append(EffectSummary(name, t, rmse(est, t), rmse_ci,
                                         None, None, hits / k, wilson_interval(hits, k)))
    return ExperimentSummary(cell=cell, effects=effects, n_converged=k, n_total=len(records),
                             sample_size_mean=float(np.mean([r.sample_size for r in records])),
                             records=list(records), degenerate=(k == 0))


def _replicate_task(args):
    study, cfg, cell, r = args
    return run_replicate(study, cfg, cell, r)


def run_cell(study: Study, cfg: ExperimentConfig, cell: Cell, workers: int = 1) -> ExperimentSummary:
    tasks = [(study, cfg, cell, r) for r in range(cfg.replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_replicate_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        records = [_replicate_task(t) for t in tasks]
    summary = summarise(cell, records, cfg.simulation_theta(), cfg.bootstrap_replicates, cfg.seed)
    summary.outcome_hash = study.outcome_hash()
    log.info("%s: %d/%d converged", cell.label(), summary.n_converged, summary.n_total)
    return summary


@dataclass
class SweepResult:
    """Summaries keyed by cell, plus failures of cells that raised."""

    cells: list[Cell]
    summaries: dict[Cell, ExperimentSummary]
    failures: dict[Cell, str]
    outcome_hash: str
    graph: Graph

    def __getitem__(self, cell: Cell) -> ExperimentSummary:
        return self.summaries[cell]


def sweep(cfg: ExperimentConfig, study: Study | None = None, workers: int = 1) -> SweepResult:
    """Run every cell of ``cfg.sampling`` on one shared study."""
    study = study if study is not None else prepare_study(cfg)
    digest = study.outcome_hash()
    summaries, failures = {}, {}
    cells = cfg.sampling.cells()
    for cell in cells:
        try:
            s = run_cell(study, cfg, cell, workers)
        except Exception as exc:  # noqa: BLE001 - a failing cell must not abort the sweep
            log.exception("cell %s failed", cell.label())
            failures[cell] = f"{type(exc).__name__}: {exc}"
            continue
        if s.outcome_hash != digest:
            raise AssertionError("cells consumed different outcome vectors")
        summaries[cell] = s
    return SweepResult(cells, summaries, failures, digest, study.graph)


def run_experiment(cfg: ExperimentConfig, study: Study | None = None, workers: int = 1) -> ExperimentSummary:
    """Run a single-cell experiment."""
    cells = cfg.sampling.cells()
    if len(cells) != 1:
        raise InputError(f"run_experiment needs exactly one sampling cell, got {len(cells)}; use sweep")
    study = study if study is not None else prepare_study(cfg)
    return run_cell(study, cfg, cells[0], workers)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """JSON-ready form of ``cfg``; ``config_from_dict`` inverts it."""
    d = asdict(cfg)
    d["true_theta"] = cfg.true_theta.as_dict()
    d["sampling"]["max_follow"] = [format_m(m) for m in cfg.sampling.max_follow]
    for key in ("sizes", "waves", "seeds"):
        d["sampling"][key] = list(d["sampling"][key])
    if d["estimation"]["free_nodes"] is not None:
        d["estimation"]["free_nodes"] = list(d["estimation"]["free_nodes"])
    return d


def _parse_m(value) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity"):
            return UNBOUNDED
        value = int(value)
    if isinstance(value, float) and math.isinf(value):
        return UNBOUNDED
    return int(value)


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise InputError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InputError(f"{where}: unknown keys {unknown}")
    return data


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from its JSON form.

    Missing keys take their defaults; unknown keys are an error.
    ``max_follow`` entries may be integers or ``"Inf"``.
    """
    d = dict(_build(ExperimentConfig, d, "config"))
    if "network" not in d:
        raise InputError("config: 'network' is required")
    net = dict(_build(NetworkSource, d["network"], "network"))
    if net.get("ergm") is not None:
        net["ergm"] = ErgmParams(**_build(ErgmParams, net["ergm"], "network.ergm"))
    d["network"] = NetworkSource(**net)
    if "true_theta" in d:
        d["true_theta"] = ParameterVector.from_mapping(d["true_theta"])
    if "sampling" in d:
        smp = dict(_build(Sampling, d["sampling"], "sampling"))
        for key in ("sizes", "waves", "seeds"):
            if key in smp:
                smp[key] = tuple(int(x) for x in smp[key])
        if "max_follow" in smp:
            smp["max_follow"] = tuple(_parse_m(m) for m in smp["max_follow"])
        d["sampling"] = Sampling(**smp)
    if "estimation" in d:
        est = dict(_build(EstimationConfig, d["estimation"], "estimation"))
        if est.get("free_nodes") is not None:
            est["free_nodes"] = tuple(int(i) for i in est["free_nodes"])
        d["estimation"] = EstimationConfig(**est)
    try:
        return ExperimentConfig(**d)
    except TypeError as exc:
        raise InputError(f"config: {exc}") from None
