"""Command-line interface.

Exit status: 0 success, 1 usage error, 2 data error, 3 non-convergence
(``estimate --strict`` only).
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .errors import AlaamError, InputError
from .ergm import STUDY_NETWORK, ErgmParams, ergm_simulate
from .estimation import EstimationConfig, conditional_estimate, estimate
from .experiment import (config_from_dict, config_to_dict, draw_covariates, prepare_study,
                         run_cell, sweep)
from .graph import graph_stats
from .model import EFFECTS, ParameterVector, SimulationConfig, simulate_outcomes
from .sampling import UNBOUNDED, SnowballConfig, SnowballSample, random_node_sample, snowball

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOT_CONVERGED = 0, 1, 2, 3

log = logging.getLogger("alaamsim")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _max_follow(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity", "none"):
        return UNBOUNDED
    try:
        m = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'inf', got {text!r}") from None
    if m < 1:
        raise argparse.ArgumentTypeError("max-follow must be >= 1")
    return m


def _emit(text: str, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        io.atomic_write_text(out, text)


def _read_graph(args):
    return io.read_edge_list(args.network, one_based=args.one_based)


def _theta_from_args(args) -> ParameterVector:
    if args.params is not None:
        return io.read_parameters(args.params)
    if args.theta is not None:
        return ParameterVector.from_array(args.theta)
    raise UsageError("give either --params FILE or --theta with five values")


def _estimation_config(args) -> EstimationConfig:
    kw = {}
    for name in ("phase1_samples", "phase2_subphases", "phase3_samples", "mcmc_spacing", "burn_in",
                 "max_runs"):
        value = getattr(args, name, None)
        if value is not None:
            kw[name] = value
    return EstimationConfig(rng_seed=args.seed, **kw)


# --- subcommands ----------------------------------------------------------------

def cmd_gen_net(args) -> int:
    p = ErgmParams(edge=args.edge, alt_k_star=args.alt_k_star, alt_k_triangle=args.alt_k_triangle,
                   alt_two_path=args.alt_two_path, lam=args.lam, n=args.nodes)
    g = ergm_simulate(p, args.burn_in, args.seed)
    _emit(io.format_edge_list(g), args.output)
    return EXIT_OK


def cmd_gen_attrs(args) -> int:
    if args.network is not None:
        n = _read_graph(args).node_count
    elif args.nodes is not None:
        n = args.nodes
    else:
        raise UsageError("give --network or --nodes")
    attrs = draw_covariates(n, args.binary_fraction, np.random.default_rng(args.seed))
    _emit(io.format_attributes(attrs, include_outcome=False), args.output)
    return EXIT_OK


def cmd_sim_alaam(args) -> int:
    g = _read_graph(args)
    attrs, _ = io.read_attributes(args.attrs, g.node_count)
    theta = _theta_from_args(args)
    cfg = SimulationConfig(burn_in=args.burn_in, spacing=args.spacing, sample_count=args.samples,
                           rng_seed=args.seed)
    y = simulate_outcomes(g, attrs, theta, cfg)
    io.write_outcomes(args.output, y)
    if args.attrs_out is not None:
        io.write_attributes(args.attrs_out, attrs.with_outcome(y[0]))
    return EXIT_OK


def cmd_sample(args) -> int:
    g = _read_graph(args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    if args.scheme == "random":
        if args.size is None:
            raise UsageError("random sampling needs --size")
        sub, origin = random_node_sample(g, args.size, args.seed)
        wave_of = np.zeros(sub.node_count, dtype=np.int64)
    else:
        smp = snowball(g, SnowballConfig(seeds=args.seeds, waves=args.waves,
                                         max_follow=args.max_follow, rng_seed=args.seed))
        sub, origin, wave_of = smp.graph, smp.origin_ids, smp.wave_of
    io.write_edge_list(out / "sample_edges.txt", sub)
    io.write_waves(out / "waves.csv", wave_of, origin)
    if args.attrs is not None:
        attrs, has_y = io.read_attributes(args.attrs, g.node_count)
        io.write_attributes(out / "sample_attrs.csv", attrs.subset(origin), include_outcome=has_y)
    return EXIT_OK


def cmd_estimate(args) -> int:
    g = _read_graph(args)
    attrs, has_y = io.read_attributes(args.attrs, g.node_count)
    if not has_y:
        raise InputError(f"{args.attrs}: attribute file has no outcome column")
    cfg = _estimation_config(args)
    if args.conditional is not None:
        waves = io.read_waves(args.conditional, g.node_count)
        smp = SnowballSample(graph=g, wave_of=waves, origin_ids=np.arange(g.node_count),
                             waves=int(waves.max()))
        res = conditional_estimate(smp, attrs, cfg)
    else:
        res = estimate(g, attrs, cfg)
    _emit(io.format_estimate(res), args.output)
    if not res.converged:
        print(f"warning: estimation did not converge ({res.error or 'max |t| >= 0.1'})", file=sys.stderr)
        if args.strict:
            return EXIT_NOT_CONVERGED
    return EXIT_OK


def _load_config(args):
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise io.DataFormatError(f"invalid JSON: {exc.msg}", args.config, exc.lineno) from None
    cfg = config_from_dict(data)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.replicates is not None:
        cfg = replace(cfg, replicates=args.replicates)
    return cfg


def _write_run(out: Path, cfg, summaries, study, extra=None):
    summary_path = out / "summary.csv"
    records_path = out / "replicates.csv"
    io.atomic_write_text(summary_path, io.format_summary(summaries))
    io.atomic_write_text(records_path, io.format_records(summaries))
    io.write_manifest(out / "manifest.json", config_to_dict(cfg), cfg.seed,
                      [summary_path, records_path],
                      extra={"outcome_sha256": study.outcome_hash(),
                             "network_nodes": study.graph.node_count,
                             "network_edges": study.graph.edge_count,
                             "ergm_lambda": cfg.network.ergm.lam if cfg.network.ergm else None,
                             "covariates_per_replicate": cfg.covariates_per_replicate,
                             **(extra or {})})


def cmd_experiment(args) -> int:
    cfg = _load_config(args)
    cells = cfg.sampling.cells()
    if len(cells) != 1:
        raise UsageError(f"experiment needs exactly one sampling cell, got {len(cells)}; use sweep")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    study = prepare_study(cfg)
    summary = run_cell(study, cfg, cells[0], args.workers)
    _write_run(out, cfg, [summary], study)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    study = prepare_study(cfg)
    result = sweep(cfg, study, args.workers)
    # per-cell parts first, then one atomic assembly of the summary
    parts = out / ".cells"
    parts.mkdir(exist_ok=True)
    ordered = [result.summaries[c] for c in result.cells if c in result.summaries]
    for k, s in enumerate(ordered):
        io.atomic_write_text(parts / f"cell_{k:04d}.csv", io.format_summary([s]))
    body = [p.read_text().split("\n", 1)[1] for p in sorted(parts.glob("cell_*.csv"))]
    io.atomic_write_text(out / "summary.csv", ",".join(io.SUMMARY_COLUMNS) + "\n" + "".join(body))
    shutil.rmtree(parts)
    failures = {c.label(): msg for c, msg in result.failures.items()}
    io.atomic_write_text(out / "replicates.csv", io.format_records(ordered))
    io.write_manifest(out / "manifest.json", config_to_dict(cfg), cfg.seed,
                      [out / "summary.csv", out / "replicates.csv"],
                      extra={"outcome_sha256": result.outcome_hash, "failed_cells": failures,
                             "ergm_lambda": cfg.network.ergm.lam if cfg.network.ergm else None,
                             "covariates_per_replicate": cfg.covariates_per_replicate})
    for label, msg in failures.items():
        print(f"warning: cell {label} failed: {msg}", file=sys.stderr)
    return EXIT_OK


def cmd_stats(args) -> int:
    s = graph_stats(_read_graph(args))
    header = "n,components,mean_degree,max_degree,density,clustering\n"
    row = (f"{s.n},{s.component_count},{io.fmt_float(s.mean_degree)},{s.max_degree},"
           f"{io.fmt_float(s.density)},{io.fmt_float(s.global_clustering)}\n")
    _emit(header + row, args.output)
    return EXIT_OK


# --- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="alaamsim", description="ALAAM simulation, estimation and sampling studies.")
    p.add_argument("--version", action="version", version=f"alaamsim {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def network_args(sp, required=True):
        sp.add_argument("--network", required=required, help="edge-list file")
        sp.add_argument("--one-based", action="store_true", help="edge-list node ids start at 1")

    def output_arg(sp, required=False, what="output file (default stdout)"):
        sp.add_argument("-o", "--output", required=required, help=what)

    sp = sub.add_parser("gen-net", help="simulate a network from an ERGM")
    sp.add_argument("--nodes", type=int, default=STUDY_NETWORK.n)
    sp.add_argument("--edge", type=float, default=STUDY_NETWORK.edge)
    sp.add_argument("--alt-k-star", type=float, default=STUDY_NETWORK.alt_k_star)
    sp.add_argument("--alt-k-triangle", type=float, default=STUDY_NETWORK.alt_k_triangle)
    sp.add_argument("--alt-two-path", type=float, default=STUDY_NETWORK.alt_two_path)
    sp.add_argument("--lam", type=float, default=STUDY_NETWORK.lam)
    sp.add_argument("--burn-in", type=int, default=10_000_000)
    sp.add_argument("--seed", type=int, default=0)
    output_arg(sp)
    sp.set_defaults(func=cmd_gen_net)

    sp = sub.add_parser("gen-attrs", help="draw binary and continuous covariates")
    network_args(sp, required=False)
    sp.add_argument("--nodes", type=int)
    sp.add_argument("--binary-fraction", type=float, default=0.5)
    sp.add_argument("--seed", type=int, default=0)
    output_arg(sp)
    sp.set_defaults(func=cmd_gen_attrs)

    sp = sub.add_parser("sim-alaam", help="simulate outcome vectors")
    network_args(sp)
    sp.add_argument("--attrs", required=True)
    sp.add_argument("--params", help="parameter CSV (effect,value)")
    sp.add_argument("--theta", type=float, nargs=len(EFFECTS), metavar="X",
                    help="values for " + ", ".join(EFFECTS))
    sp.add_argument("--burn-in", type=int, default=1_000_000)
    sp.add_argument("--spacing", type=int, default=100_000)
    sp.add_argument("--samples", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--attrs-out", help="also write the attributes with the first outcome")
    output_arg(sp, required=True, what="outcome CSV")
    sp.set_defaults(func=cmd_sim_alaam)

    sp = sub.add_parser("sample", help="draw a random-node or snowball sample")
    network_args(sp)
    sp.add_argument("--scheme", choices=("random", "snowball"), required=True)
    sp.add_argument("--size", type=int)
    sp.add_argument("--seeds", type=int, default=1)
    sp.add_argument("--waves", type=int, default=1)
    sp.add_argument("--max-follow", type=_max_follow, default=UNBOUNDED)
    sp.add_argument("--attrs", help="attribute file to subset alongside")
    sp.add_argument("--seed", type=int, default=0)
    output_arg(sp, required=True, what="output directory")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("estimate", help="estimate ALAAM parameters")
    network_args(sp)
    sp.add_argument("--attrs", required=True, help="attribute file with an outcome column")
    sp.add_argument("--conditional", metavar="WAVES", help="wave file; hold the outermost wave fixed")
    sp.add_argument("--strict", action="store_true", help="exit 3 if not converged")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--phase1-samples", type=int)
    sp.add_argument("--phase2-subphases", type=int)
    sp.add_argument("--phase3-samples", type=int)
    sp.add_argument("--mcmc-spacing", type=int)
    sp.add_argument("--burn-in", type=int)
    sp.add_argument("--max-runs", type=int)
    output_arg(sp)
    sp.set_defaults(func=cmd_estimate)

    for name, func, helptext in (("experiment", cmd_experiment, "run a single-cell experiment"),
                                 ("sweep", cmd_sweep, "run every cell of a sampling grid")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, help="experiment config (JSON)")
        sp.add_argument("--seed", type=int, help="override the master seed")
        sp.add_argument("--replicates", type=int, help="override the replicate count")
        sp.add_argument("--workers", type=int, default=1)
        output_arg(sp, required=True, what="output directory")
        sp.set_defaults(func=func)

    sp = sub.add_parser("stats", help="descriptive statistics of a network")
    network_args(sp)
    output_arg(sp)
    sp.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"alaamsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AlaamError, OSError) as exc:
        print(f"alaamsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
