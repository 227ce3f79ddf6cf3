"""Maximum-likelihood estimation by three-phase stochastic approximation.

The estimator solves the moment equation ``E_theta[z] = z_obs`` with a
Robbins-Monro scheme driven by an MCMC outcome chain:

phase 1
    Simulate at the starting value, estimate the covariance ``D`` of the
    statistics and take one damped Newton step.
phase 2
    Sub-phases of updates ``theta -= a * D^-1 (z - z_obs)``, halving ``a``
    each sub-phase; each sub-phase ends at the average of its iterates.
    ``phase2_scaling="diagonal"`` uses ``diag(D)`` instead of ``D``.
phase 3
    A long run at the final value gives convergence t-ratios
    ``(mean(z) - z_obs) / sd(z)`` and standard errors from the inverse
    covariance of the statistics.

Conditional estimation (snowball samples) holds outcomes of the
outermost wave fixed: they enter the statistics but are never toggled.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateDataError, InputError
from .graph import Graph
from .model import (EFFECTS, N_EFFECTS, AttributeTable, OutcomeChain, ParameterVector,
                    statistics_array)
from .sampling import SnowballSample

log = logging.getLogger(__name__)

CONVERGENCE_T = 0.1


@dataclass(frozen=True)
class EstimationConfig:
    """Tuning of the stochastic approximation.

    ``mcmc_spacing`` and ``burn_in`` default to ``10 * free`` and
    ``10 * mcmc_spacing`` toggles. Sub-phase ``k`` (from 1) runs between
    ``2**(4(k-1)/3) * (7 + p)`` and that plus ``phase2_extra_steps``
    iterations. A step whose norm ``sqrt(s' D s)`` (the implied shift of
    the expected statistics in standard-deviation units) exceeds
    ``trust_radius`` is scaled back; ``max_clamps`` consecutive clamps abort the run.
    A run that does not converge is restarted from its own estimate (with
    a fresh phase 1 there), up to ``max_runs`` runs in total.
    """

    phase1_samples: int = 100
    phase2_subphases: int = 5
    phase2_initial_gain: float = 0.1
    phase2_extra_steps: int = 200
    phase3_samples: int = 1000
    mcmc_spacing: int | None = None
    burn_in: int | None = None
    max_iterations: int = 20_000
    trust_radius: float = 2.0
    max_clamps: int = 3
    newton_gain: float = 0.5
    max_runs: int = 3
    phase2_scaling: str = "full"
    rng_seed: int = 0
    free_nodes: tuple | None = None

    def __post_init__(self):
        if self.phase2_initial_gain <= 0 or self.newton_gain < 0:
            raise InputError("gains must be positive")
        if self.phase1_samples < 10 or self.phase3_samples < 10:
            raise InputError("phase 1 and phase 3 need at least 10 samples")
        if self.phase2_subphases < 1:
            raise InputError("need at least one phase-2 sub-phase")
        if self.mcmc_spacing is not None and self.mcmc_spacing < 1:
            raise InputError("mcmc_spacing must be >= 1")
        if self.free_nodes is not None and len(self.free_nodes) == 0:
            raise InputError("free_nodes must be non-empty")
        if self.phase2_scaling not in ("full", "diagonal"):
            raise InputError("phase2_scaling must be 'full' or 'diagonal'")
        if self.trust_radius <= 0 or self.max_clamps < 1 or self.max_runs < 1:
            raise InputError("trust_radius, max_clamps and max_runs must be positive")

    def subphase_lengths(self, k: int) -> tuple[int, int]:
        lo = int(math.ceil(2 ** (4 * (k - 1) / 3) * (7 + N_EFFECTS)))
        return lo, lo + self.phase2_extra_steps


@dataclass
class EstimationResult:
    theta_hat: ParameterVector
    std_errors: np.ndarray
    t_ratios: np.ndarray
    converged: bool
    significant: np.ndarray
    sample_info: tuple[int, int]
    error: str | None = None
    z_obs: np.ndarray = field(default_factory=lambda: np.full(N_EFFECTS, np.nan))
    phase3_mean: np.ndarray = field(default_factory=lambda: np.full(N_EFFECTS, np.nan))
    phase3_sd: np.ndarray = field(default_factory=lambda: np.full(N_EFFECTS, np.nan))
    phase3_cov: np.ndarray = field(default_factory=lambda: np.full((N_EFFECTS, N_EFFECTS), np.nan))
    phase3_samples: int = 0
    phase2_iterations: list = field(default_factory=list)
    gains: list = field(default_factory=list)
    clamps: int = 0
    runs: int = 1

    @property
    def mc_standard_errors(self) -> np.ndarray:
        """Monte-Carlo standard error of the phase-3 mean statistics."""
        if self.phase3_samples == 0:
            return np.full(N_EFFECTS, np.nan)
        return self.phase3_sd / math.sqrt(self.phase3_samples)

    def as_dict(self) -> dict:
        d = {"converged": self.converged, "error": self.error,
             "free_nodes": self.sample_info[0], "fixed_nodes": self.sample_info[1]}
        for k, name in enumerate(EFFECTS):
            d[f"{name}_estimate"] = self.theta_hat[k]
            d[f"{name}_se"] = float(self.std_errors[k])
            d[f"{name}_t"] = float(self.t_ratios[k])
            d[f"{name}_significant"] = bool(self.significant[k])
        return d


def initial_theta(g: Graph, attrs: AttributeTable, free_nodes=None) -> ParameterVector:
    """Density at the logit of the observed positive fraction, other effects 0."""
    if len(attrs) != g.node_count:
        raise InputError("attribute table does not match the graph")
    y = attrs.outcome if free_nodes is None else attrs.outcome[np.asarray(free_nodes, dtype=np.int64)]
    if len(y) == 0:
        raise InputError("no outcomes to estimate from")
    p = float(np.mean(y))
    if p == 0.0 or p == 1.0:
        raise DegenerateDataError("outcome is constant; the likelihood has no finite maximum")
    return ParameterVector(density=math.log(p / (1.0 - p)))


def _free_array(g: Graph, free_nodes) -> np.ndarray:
    if free_nodes is None:
        return np.arange(g.node_count, dtype=np.int64)
    free = np.unique(np.asarray(list(free_nodes), dtype=np.int64))
    if len(free) == 0:
        raise InputError("free_nodes must be non-empty")
    if free[0] < 0 or free[-1] >= g.node_count:
        raise InputError("free node id out of range")
    return free


def _failed(theta, info, z_obs, error, **extra) -> EstimationResult:
    nan = np.full(N_EFFECTS, np.nan)
    return EstimationResult(theta_hat=theta, std_errors=nan.copy(), t_ratios=nan.copy(),
                            converged=False, significant=np.zeros(N_EFFECTS, dtype=bool),
                            sample_info=info, error=error, z_obs=z_obs, **extra)


def estimate(g: Graph, attrs: AttributeTable, cfg: EstimationConfig = EstimationConfig(),
             theta0=None) -> EstimationResult:
    """Estimate the five effects from the observed outcome in ``attrs``.

    Raises :class:`DegenerateDataError` when the data admit no estimate
    (constant free outcomes, or a statistic that cannot vary). Numerical
    failures later on (singular phase-3 covariance, runaway steps) give a
    non-converged result with ``error`` set instead.
    """
    result = None
    start = theta0
    for run in range(cfg.max_runs):
        run_cfg = cfg if run == 0 else replace(cfg, rng_seed=_child_seed(cfg.rng_seed, run))
        result = _estimate_once(g, attrs, run_cfg, start)
        result.runs = run + 1
        if result.converged or result.error is not None:
            break
        start = result.theta_hat
    return result


def _child_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(k,)).generate_state(1)[0])


def _estimate_once(g: Graph, attrs: AttributeTable, cfg: EstimationConfig, theta0) -> EstimationResult:
    free = _free_array(g, cfg.free_nodes)
    info = (len(free), g.node_count - len(free))
    z_obs = statistics_array(g, attrs)
    theta = (initial_theta(g, attrs, free if cfg.free_nodes is not None else None).as_array()
             if theta0 is None else np.asarray(theta0, dtype=float).copy())
    spacing = cfg.mcmc_spacing or 10 * len(free)
    burn_in = cfg.burn_in if cfg.burn_in is not None else 10 * spacing
    rng = np.random.default_rng(cfg.rng_seed)
    chain = OutcomeChain(g, attrs, free, initial=attrs.outcome, rng=rng)

    # phase 1
    chain.advance(theta, burn_in)
    z1 = chain.sample_statistics(theta, cfg.phase1_samples, spacing)
    dev1 = z1.mean(axis=0) - z_obs
    cov1 = np.cov(z1, rowvar=False)
    var1 = np.diag(cov1).copy()
    if np.any(var1 <= 0):
        flat = [EFFECTS[k] for k in np.nonzero(var1 <= 0)[0]]
        raise DegenerateDataError(f"statistics with zero variance: {', '.join(flat)}")
    if cfg.newton_gain > 0:
        try:
            step = cfg.newton_gain * np.linalg.solve(cov1, dev1)
        except np.linalg.LinAlgError:
            step = cfg.newton_gain * dev1 / var1
        step, _ = _clamp(step, cov1, cfg.trust_radius)
        theta = theta - step

    # phase 2
    if cfg.phase2_scaling == "full":
        try:
            precond = np.linalg.inv(cov1)
        except np.linalg.LinAlgError:
            precond = np.diag(1.0 / var1)
    else:
        precond = np.diag(1.0 / var1)
    gain = cfg.phase2_initial_gain
    gains, iterations = [], []
    total = 0
    clamps_in_row = 0
    clamps = 0
    for k in range(1, cfg.phase2_subphases + 1):
        n_min, n_max = cfg.subphase_lengths(k)
        theta_sum = np.zeros(N_EFFECTS)
        prev = None
        cross = np.zeros(N_EFFECTS)
        it = 0
        while it < n_max and total < cfg.max_iterations:
            z = chain.advance(theta, spacing)
            dev = z - z_obs
            step = gain * (precond @ dev)
            step, clamped = _clamp(step, cov1, cfg.trust_radius)
            if clamped:
                clamps += 1
                clamps_in_row += 1
                if clamps_in_row >= cfg.max_clamps:
                    return _failed(ParameterVector.from_array(theta), info, z_obs,
                                   "phase 2 diverged (repeated trust-region clamps)",
                                   phase2_iterations=iterations, gains=gains, clamps=clamps)
            else:
                clamps_in_row = 0
            theta = theta - step
            if not np.all(np.isfinite(theta)):
                return _failed(ParameterVector(), info, z_obs, "non-finite parameter in phase 2",
                               phase2_iterations=iterations, gains=gains, clamps=clamps)
            theta_sum += theta
            it += 1
            total += 1
            if prev is not None:
                cross += prev * dev
            prev = dev
            if it >= n_min and np.all(cross < 0):
                break
        theta = theta_sum / it if it else theta
        gains.append(gain)
        iterations.append(it)
        gain /= 2.0
        if total >= cfg.max_iterations:
            break

    # phase 3
    z3 = chain.sample_statistics(theta, cfg.phase3_samples, spacing)
    mean3 = z3.mean(axis=0)
    sd3 = z3.std(axis=0, ddof=1)
    cov3 = np.cov(z3, rowvar=False)
    extra = dict(phase3_mean=mean3, phase3_sd=sd3, phase3_cov=cov3,
                 phase3_samples=cfg.phase3_samples, phase2_iterations=iterations,
                 gains=gains, clamps=clamps)
    theta_vec = ParameterVector.from_array(theta)
    if np.any(sd3 <= 0):
        return _failed(theta_vec, info, z_obs, "phase-3 statistic with zero variance", **extra)
    t_ratios = (mean3 - z_obs) / sd3
    try:
        inv = np.linalg.inv(cov3)
    except np.linalg.LinAlgError:
        inv = None
    if inv is None or not np.all(np.isfinite(inv)) or np.any(np.diag(inv) <= 0) \
            or np.linalg.cond(cov3) > 1e12:
        res = _failed(theta_vec, info, z_obs, "singular phase-3 covariance", **extra)
        res.t_ratios = t_ratios
        return res
    se = np.sqrt(np.diag(inv))
    converged = bool(np.all(np.abs(t_ratios) < CONVERGENCE_T))
    return EstimationResult(theta_hat=theta_vec, std_errors=se, t_ratios=t_ratios,
                            converged=converged, significant=np.abs(theta) > 2.0 * se,
                            sample_info=info, z_obs=z_obs, **extra)


def _clamp(step, cov, radius):
    # size of a step = implied shift of the expected statistics, in s.d. units
    scaled = math.sqrt(max(float(step @ cov @ step), 0.0))
    if not np.isfinite(scaled):
        return np.zeros_like(step), True
    if scaled > radius:
        return step * (radius / scaled), True
    return step, False


def conditional_estimate(sample: SnowballSample, attrs: AttributeTable,
                         cfg: EstimationConfig = EstimationConfig(), theta0=None) -> EstimationResult:
    """Estimate on a snowball sample, conditioning on the outermost wave.

    ``attrs`` is indexed by sample-local ids. Nodes in waves
    ``0..waves-1`` are free; outermost-wave outcomes are held fixed.
    """
    if sample.waves < 1:
        raise InputError("a zero-wave sample has no inner waves to estimate conditionally")
    inner = sample.inner_nodes()
    if len(inner) == 0:
        raise InputError("sample has no inner-wave nodes")
    return estimate(sample.graph, attrs, replace(cfg, free_nodes=tuple(int(i) for i in inner)),
                    theta0=theta0)
