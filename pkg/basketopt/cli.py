#!/usr/bin/env python3
"""
Command-line interface for BasketOptimizer
Subcommands oc, optimize, benchmark, study, boundary and toer-curve
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from .analyses import BOUNDARY_COLUMNS, TOER_COLUMNS, boundary_curve, catalog_designs, toer_curve
from .config import COMMANDS, RunConfig, parse_config
from .design import Design
from .distributions import DivergenceKind
from .errors import EXIT_OK, BasketOptError, exit_code_for
from .experiment_runner import run_part1, run_part2_3
from .logging_config import get_study_logger, write_envelope
from .monitor import ResourceMonitor
from .optimizers import run_optimizer, write_trace_csv
from .tables import write_table
from .utility import OCEvaluator, UtilityObjective

OC_COLUMNS = ["scenario", "stratum", "active", "reject_prob", "mcse", "fwer", "ewp", "ecd"]

COMMAND_HELP = {
    "oc": "operating characteristics of one tuning-parameter vector",
    "optimize": "optimize one utility function",
    "benchmark": "compare optimizers on the benchmark test problems",
    "study": "optimize every utility and compare with fixed tuning parameters",
    "boundary": "extreme borrowing boundary per tau",
    "toer-curve": "type-I error of a stable stratum against a moving neighbour",
}


def _phi_arg(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"phi must be three comma-separated numbers, got '{text}'")
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"phi must be three comma-separated numbers, got '{text}'")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (name in configs/ or path)")
    common.add_argument("--set", dest="set_id", help="scenario set id (1-7)")
    common.add_argument("--phi", type=_phi_arg, help="lambda,epsilon,tau")
    common.add_argument("--backend", choices=["exact", "mc", "auto"], help="operating-characteristics engine")
    common.add_argument("--seed", type=int, help="optimizer seed, first benchmark seed or Monte Carlo base seed")
    common.add_argument("--n-mc", type=int, dest="n_mc", help="Monte Carlo trials per evaluation")
    common.add_argument("--budget", type=int, help="objective evaluations per optimizer run")
    common.add_argument("--workers", type=int, help="worker threads (default: available parallelism)")
    common.add_argument("--out-dir", dest="out_dir", help="directory for CSV tables and JSON envelopes")
    common.add_argument("--log-dir", dest="log_dir", default="logs", help="log directory")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="basketopt", description="Basket trial design optimization")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name, parents=[common], help=COMMAND_HELP[name])
        if name == "oc":
            sub.add_argument("--scenario", help="scenario label (default: every scenario of the set)")
    return parser


def overrides_from(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "command": args.command,
        "set": args.set_id,
        "phi": args.phi,
        "backend": args.backend,
        "seed": args.seed,
        "n_mc": args.n_mc,
        "budget": args.budget,
        "workers": args.workers,
        "out_dir": args.out_dir,
        "scenario": getattr(args, "scenario", None),
    }


def run_oc(config: RunConfig) -> Dict[str, Any]:
    scenario_set = config.build_scenario_set()
    phi = config.oc.phi.to_params()
    evaluator = OCEvaluator(scenario_set, config.backend.resolve(scenario_set.design, config.workers))
    if config.oc.scenario:
        scenarios = [scenario_set.scenario(config.oc.scenario)]
    else:
        scenarios = list(scenario_set.scenarios)

    rows, results = [], {}
    for scenario in scenarios:
        oc = evaluator.evaluate(phi, scenario)
        results[scenario.label] = oc.to_dict()
        for i, (rate, active) in enumerate(zip(oc.reject_prob, scenario.active)):
            rows.append({
                "scenario": scenario.label, "stratum": i + 1, "active": int(active),
                "reject_prob": float(rate),
                "mcse": float(oc.mcse.reject_prob[i]) if oc.mcse else None,
            })
        rows.append({"scenario": scenario.label, "stratum": "all", "fwer": oc.fwer, "ewp": oc.ewp,
                     "ecd": oc.ecd})
        print(f"📊 Scenario {scenario.label}: FWER {oc.fwer:.4f}, EWP {oc.ewp:.4f}, ECD {oc.ecd:.4f}")

    out_dir = Path(config.out_dir)
    return {
        "csv": write_table(rows, OC_COLUMNS, out_dir / "oc.csv"),
        "json": write_envelope(
            out_dir / "oc.json",
            {"phi": phi.to_dict(), "scenario_set": scenario_set.to_dict(), "results": results},
            kind="oc", extra={"config": config.echo()},
        ),
    }


def run_optimize(config: RunConfig) -> Dict[str, Any]:
    scenario_set = config.build_scenario_set()
    command = config.optimize
    spec = command.utility.to_spec(scenario_set, config.utility_params.to_params())
    evaluator = OCEvaluator(scenario_set, config.backend.resolve(scenario_set.design, config.workers))
    objective = UtilityObjective(spec, evaluator)
    optimizer = command.optimizer.build(config.workers)

    print(f"🔥 Optimizing {spec.name} on set {scenario_set.id} with {optimizer.algorithm}")
    with ResourceMonitor().measure() as usage:
        result = run_optimizer(optimizer, objective)
    phi = ", ".join(f"{v:.6g}" for v in result.phi_star)
    print(f"✅ phi* = ({phi}), u* = {result.u_star:.6f} after {result.n_evals} evaluations")

    out_dir = Path(config.out_dir)
    artifacts = {}
    if command.write_trace:
        artifacts["trace"] = write_trace_csv(result, out_dir / "optimize_trace.csv")
    artifacts["json"] = write_envelope(
        out_dir / "optimize.json",
        {
            "utility": spec.name,
            "scenario_set": scenario_set.id,
            "optimizer": optimizer.to_dict(),
            "result": result.to_dict(),
            "utility_calls": objective.calls,
            "oc_evaluations": objective.oc_evaluations,
            "usage": usage.to_dict(),
        },
        kind="optimize", extra={"config": config.echo()},
    )
    return artifacts


def run_boundary(config: RunConfig) -> Dict[str, Any]:
    command = config.boundary
    divergence = DivergenceKind(config.divergence)
    if command.designs is None:
        designs = catalog_designs(divergence)
    else:
        designs = {d.label: Design.equal(d.strata, d.n, d.target_rate, divergence) for d in command.designs}
    rows = boundary_curve(designs, command.tau_grid)
    out_dir = Path(config.out_dir)
    return {
        "csv": write_table(rows, BOUNDARY_COLUMNS, out_dir / "boundary.csv"),
        "json": write_envelope(out_dir / "boundary.json", {"rows": rows}, kind="boundary",
                               extra={"config": config.echo()}),
    }


def run_toer_curve(config: RunConfig) -> Dict[str, Any]:
    command = config.toer_curve
    rows = toer_curve([phi.as_tuple() for phi in command.phis], command.p2_grid, command.n, command.p1,
                      config.workers, DivergenceKind(config.divergence))
    out_dir = Path(config.out_dir)
    return {
        "csv": write_table(rows, TOER_COLUMNS, out_dir / "toer_curve.csv"),
        "json": write_envelope(out_dir / "toer_curve.json", {"rows": rows}, kind="toer-curve",
                               extra={"config": config.echo()}),
    }


def dispatch(config: RunConfig) -> Dict[str, Any]:
    """Run the configured subcommand; returns the artifacts written"""
    handlers = {
        "oc": run_oc,
        "optimize": run_optimize,
        "benchmark": lambda c: {"report": run_part1(c)},
        "study": lambda c: {"results": run_part2_3(c)},
        "boundary": run_boundary,
        "toer-curve": run_toer_curve,
    }
    return handlers[config.command](config)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.INFO
    logger = get_study_logger(args.log_dir).get_logger("basketopt", "runs", level)

    try:
        config = parse_config(args.config, overrides_from(args))
        set_label = config.scenario_set if isinstance(config.scenario_set, str) else "inline"
        logger.info(f"Running {config.command} (set {set_label}, {config.workers} workers, output in {config.out_dir})")
        dispatch(config)
    except BasketOptError as e:
        code = exit_code_for(e)
        logger.error(f"{type(e).__name__}: {e}")
        print(f"❌ {e}", file=sys.stderr)
        return code

    logger.info(f"{config.command} finished")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
