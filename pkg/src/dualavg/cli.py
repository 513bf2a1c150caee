"""Command line front end.

Subcommands: run, graph-stats, bounds, sweep. Exit codes: 0 on success, 2 on
configuration errors, 3 when a run aborts mid-round (partial trace flushed
with an `aborted` marker row).
"""
from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .allocation import AllocationError
from .engine import EngineError
from .estimation import ScenarioError
from .experiment import (
    ConfigError,
    ExperimentConfig,
    GRAPH_STATS_FAMILIES,
    RunAbort,
    bounds_report,
    config_for_preset,
    graph_stats_report,
    load_config,
    parse_axis_value,
    run,
    sweep,
    write_aborted_outputs,
    write_run_outputs,
)
from .graphs import GenerationError, GraphParameterError
from .metrics import MetricsError
from .schedules import ScheduleError
from .stochastic import StochasticityError, StructureError

CONFIG_ERRORS = (
    ConfigError,
    GraphParameterError,
    GenerationError,
    ScheduleError,
    ScenarioError,
    MetricsError,
    AllocationError,
    EngineError,
    StochasticityError,
    StructureError,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file (key = value sections)")
    p.add_argument("--preset", choices=["fig2", "fig3", "fig4", "fig5"],
                   help="named preset used as the config base")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--dump-matrices", action="store_true",
                   help="write per-round mixing matrices and the observation table")
    p.add_argument("--dump-weights", action="store_true",
                   help="write per-round allocation distributions")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualavg",
        description="Distributed online estimation testbed: dual averaging "
                    "over directed networks with adaptive link re-weighting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one seeded experiment")
    _add_common(p_run)
    p_run.add_argument("--horizon", type=int, help="round count override")

    p_stats = sub.add_parser("graph-stats", help="connectivity and contraction diagnostics")
    _add_common(p_stats)
    p_stats.add_argument("--families", help="comma list of families (default: config family; "
                                            "preset fig5 compares the four standard families)")

    p_bounds = sub.add_parser("bounds", help="print guarantee values without simulating")
    _add_common(p_bounds)
    p_bounds.add_argument("--horizon", type=int, help="round count override")

    p_sweep = sub.add_parser("sweep", help="run one cell per axis value")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", required=True,
                         choices=["noise_family", "graph_family", "beta", "jam_count"])
    p_sweep.add_argument("--values", required=True, help="comma separated axis values")
    p_sweep.add_argument("--workers", type=int, default=1,
                         help="parallel processes across sweep cells (default 1)")
    p_sweep.add_argument("--horizon", type=int, help="round count override")
    return parser


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    base = config_for_preset(args.preset) if args.preset else ExperimentConfig()
    cfg = load_config(args.config, base) if args.config else base
    if args.seed is not None:
        import dataclasses

        cfg = dataclasses.replace(cfg, seed=args.seed)
    if getattr(args, "horizon", None) is not None:
        import dataclasses

        cfg = dataclasses.replace(cfg, horizon=args.horizon)
    cfg.validate()
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "run":
        try:
            result = run(cfg, record_histories=args.dump_matrices,
                         record_weights=args.dump_weights)
        except RunAbort as abort:
            write_aborted_outputs(abort, cfg, args.out)
            print(f"aborted: {abort}", file=sys.stderr)
            return 3
        except CONFIG_ERRORS as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        write_run_outputs(result, args.out, dump_matrices=args.dump_matrices,
                          dump_weights=args.dump_weights)
        print(f"run complete: T={cfg.horizon} n={cfg.n} adaptive={cfg.adaptive} "
              f"gamma={result.gamma:.6g} nu={result.nu} theta_star={result.theta_star:.6g}")
        print(f"outputs in {args.out}")
        return 0

    if args.command == "graph-stats":
        if args.families:
            families = [f.strip() for f in args.families.split(",") if f.strip()]
        elif args.preset == "fig5":
            families = list(GRAPH_STATS_FAMILIES)
        else:
            families = None
        try:
            rows = graph_stats_report(cfg, families)
        except CONFIG_ERRORS as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        for row in rows:
            note = " (vacuous)" if row["gamma_closed_form_vacuous"] else ""
            print(
                f"family={row['family']} n={row['n']} edges={row['edges']} "
                f"strongly_connected={row['strongly_connected']} nu={row['nu']} "
                f"gamma={row['gamma']:.6g} "
                f"gamma_closed_form={row['gamma_closed_form']:.6g}{note} "
                f"second_eigenvalue_modulus={row['second_eigenvalue_modulus']:.6g}"
            )
        if len(rows) > 1:
            order = sorted(rows, key=lambda r: -float(r["gamma"]))
            print("gamma order: " + " >= ".join(str(r["family"]) for r in order))
        return 0

    if args.command == "bounds":
        try:
            report = bounds_report(cfg, getattr(args, "horizon", None))
        except CONFIG_ERRORS as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        for key, value in report.items():
            print(f"{key} = {value!r}")
        return 0

    if args.command == "sweep":
        try:
            values = [parse_axis_value(args.axis, v) for v in args.values.split(",") if v.strip()]
            path = sweep(cfg, args.axis, values, args.out, workers=args.workers,
                         dump_matrices=args.dump_matrices, dump_weights=args.dump_weights)
        except RunAbort as abort:
            print(f"aborted: {abort}", file=sys.stderr)
            return 3
        except CONFIG_ERRORS as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        print(f"sweep complete: {path}")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
