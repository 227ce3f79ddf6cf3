"""Simulation, estimation and sampling studies for autologistic actor attribute models."""

__version__ = "0.1.0"

from .errors import AlaamError, DataFormatError, DegenerateDataError, InputError
from .graph import Graph, GraphStats, components, from_edge_list, graph_stats, induced_subgraph
from .model import (EFFECTS, AttributeTable, OutcomeChain, ParameterVector, SimulationConfig,
                    StatisticsVector, change_statistics, exact_log_likelihood, exact_moments,
                    simulate_outcomes, statistics)
from .estimation import EstimationConfig, EstimationResult, conditional_estimate, estimate
from .sampling import SnowballConfig, SnowballSample, random_node_sample, snowball
from .ergm import ErgmParams, ergm_simulate, ergm_statistics
from .inference import bca_interval, rmse, type1_indicator, type2_indicator, wilson_interval
from .experiment import (ExperimentConfig, ExperimentSummary, NetworkSource, Sampling,
                         run_experiment, sweep)

__all__ = [
    "AlaamError", "DataFormatError", "DegenerateDataError", "InputError",
    "Graph", "GraphStats", "components", "from_edge_list", "graph_stats", "induced_subgraph",
    "EFFECTS", "AttributeTable", "OutcomeChain", "ParameterVector", "SimulationConfig",
    "StatisticsVector", "change_statistics", "exact_log_likelihood", "exact_moments",
    "simulate_outcomes", "statistics",
    "EstimationConfig", "EstimationResult", "conditional_estimate", "estimate",
    "SnowballConfig", "SnowballSample", "random_node_sample", "snowball",
    "ErgmParams", "ergm_simulate", "ergm_statistics",
    "bca_interval", "rmse", "type1_indicator", "type2_indicator", "wilson_interval",
    "ExperimentConfig", "ExperimentSummary", "NetworkSource", "Sampling", "run_experiment", "sweep",
]
