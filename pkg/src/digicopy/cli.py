"""Command-line front end.

Exit codes: 0 success, 1 validation failure or infeasible plan, 2 usage
error, 3 I/O error. Machine output goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import __version__
from .bench import benchmark_point, format_report
from .compare import compare_modes, parse_series, render_report, render_series, verify_paper_table
from .errors import DigicopyError, InfeasibleError
from .indicator import THREADS_ENV, EngineConfig, indicator_series
from .panel import dump_meta, dump_panel, load_panel, validate_panel
from .strategy import (
    CoverageRule,
    StrategyModel,
    check_budget,
    load_model,
    model_to_dict,
    optimize_assignment,
)
from .synth import generate_panel, load_spec

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _emit(data: bytes):
    sys.stdout.buffer.write(data)
    sys.stdout.buffer.flush()


def _int_at_least(lo: int):
    def parse(text: str) -> int:
        value = int(text)
        if value < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}")
        return value

    return parse


def _engine_args(p: argparse.ArgumentParser):
    p.add_argument("--k", type=_int_at_least(2), default=6, help="window length in periods (default: 6)")
    p.add_argument("--aggregate", choices=("sum", "mean"), default="sum", help="per-time reduction of G_i(t) (default: sum)")
    p.add_argument("--block", type=_int_at_least(1), default=256, help="tile edge length in columns (default: 256)")
    p.add_argument(
        "--threads",
        type=_int_at_least(1),
        default=None,
        help=f"worker threads (default: ${THREADS_ENV} or the CPU count)",
    )
    p.add_argument("--no-forecast", action="store_true", help="omit the point t=T past the last period")


def _engine(args) -> EngineConfig:
    kw = dict(block=args.block, aggregate=args.aggregate, forecast_point=not args.no_forecast)
    if args.threads is not None:
        kw["threads"] = args.threads
    return EngineConfig(**kw)


def _load(path: str, meta: str | None = None):
    return load_panel(_read(path), _read(meta) if meta else None)


def cmd_indicator(args) -> int:
    panel = _load(args.panel, args.meta)
    series = indicator_series(panel, args.k, _engine(args), args.label)
    _emit(render_series(series, args.format))
    return EXIT_OK


def _series_or_panel(path: str, args, label: str):
    data = _read(path)
    if data.lstrip(b"\xef\xbb\xbf").startswith(b"t,period,v"):
        return parse_series(data, label)
    panel = load_panel(data)
    return indicator_series(panel, args.k, _engine(args), label)


def cmd_compare(args) -> int:
    base = _series_or_panel(args.base, args, "basic_mode")
    ctrl = _series_or_panel(args.ctrl, args, "strat_plan")
    cmp = compare_modes(base, ctrl)
    if args.svg:
        with open(args.svg, "wb") as fh:
            fh.write(render_report(cmp, "svg"))
    _emit(render_report(cmp, args.format))
    return EXIT_OK


def cmd_strategy(args) -> int:
    config = _read(args.config) if args.config else None
    mdl, rule = load_model(_read(args.model), config)
    if args.rule:
        rule = CoverageRule(args.rule)
    budget = args.budget if args.budget is not None else mdl.budget
    out = {"rule": rule.value}
    if args.optimize or not mdl.assign.any():
        # the budget covers the base cost plus the plan overhead
        plan_budget = None if budget is None else budget - args.base_cost
        try:
            plan = optimize_assignment(
                mdl.costs, rule, plan_budget, strategies=mdl.strategies, processes=mdl.processes
            )
        except InfeasibleError as exc:
            out.update(feasible=False, unconstrained_min=exc.unconstrained_min, budget=budget, base_cost=args.base_cost)
            _emit((json.dumps(out, indent=2) + "\n").encode())
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INVALID
        mdl = StrategyModel(plan.strategies, plan.processes, plan.assign, plan.costs, budget)
        out["optimized"] = True
    else:
        out["optimized"] = False
    out.update(model_to_dict(mdl))
    status = EXIT_OK
    if budget is not None:
        rep = check_budget(mdl, args.base_cost, budget)
        out.update(base_cost=args.base_cost, total=rep.total, feasible=rep.feasible, slack=rep.slack)
        if not rep.feasible:
            print(f"infeasible: total {rep.total!r} exceeds budget {budget!r}", file=sys.stderr)
            status = EXIT_INVALID
    _emit((json.dumps(out, indent=2) + "\n").encode())
    return status


def cmd_synth(args) -> int:
    spec = load_spec(_read(args.spec))
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    panel = generate_panel(spec)
    if args.meta_out:
        with open(args.meta_out, "wb") as fh:
            fh.write(dump_meta(panel))
    _emit(dump_panel(panel))
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify_paper_table()
    if args.format == "json":
        _emit((json.dumps(report.to_dict(), indent=2) + "\n").encode())
    else:
        _emit(report.to_text().encode())
    return EXIT_OK if report.passed else EXIT_INVALID


def cmd_validate(args) -> int:
    # structural problems surface as load errors; findings cover the rest
    panel = _load(args.panel, args.meta)
    report = validate_panel(panel)
    for f in report.findings:
        _emit((str(f) + "\n").encode())
    _emit(f"{len(report.errors)} error(s), {len(report.warnings)} warning(s)\n".encode())
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_bench(args) -> int:
    cfg = EngineConfig(block=args.block, threads=args.threads or EngineConfig().threads)
    r = benchmark_point(args.n, args.k, cfg, repeats=args.repeats)
    if args.format == "json":
        _emit((json.dumps(r, indent=2) + "\n").encode())
    else:
        _emit(format_report(r).encode())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="digicopy", description="Integral indicators for enterprise digital copies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("indicator", help="panel CSV -> indicator series")
    p.add_argument("panel", help="wide panel CSV ('-' for stdin)")
    p.add_argument("--meta", help="sidecar param_id,process_id,kind CSV")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--label", default="basic_mode", help="mode label recorded in the series")
    _engine_args(p)
    p.set_defaults(func=cmd_indicator)

    p = sub.add_parser("compare", help="two panels or two series -> mode comparison")
    p.add_argument("base", help="basic-mode panel or series CSV")
    p.add_argument("ctrl", help="controlled-mode panel or series CSV")
    p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    p.add_argument("--svg", help="also write the chart to this path")
    _engine_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("strategy", help="evaluate or optimize a strategy assignment")
    p.add_argument("model", help="strategy,process,cost[,assigned] CSV")
    p.add_argument("--config", help='JSON {"budget": number, "rule": string}')
    p.add_argument("--optimize", action="store_true", help="ignore the assigned column and optimize")
    p.add_argument("--rule", choices=[r.value for r in CoverageRule])
    p.add_argument("--budget", type=float, help="overrides the config budget")
    p.add_argument("--base-cost", type=float, default=0.0, help="enterprise cost outside the plan")
    p.set_defaults(func=cmd_strategy)

    p = sub.add_parser("synth", help="synthetic panel from a JSON spec")
    p.add_argument("--spec", required=True, help="SynthSpec JSON")
    p.add_argument("--seed", type=int, help="overrides the spec seed")
    p.add_argument("--meta-out", help="write the sidecar metadata CSV here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify-paper", help="check the embedded published table")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("validate", help="report panel findings")
    p.add_argument("panel")
    p.add_argument("--meta")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="time one evaluation point")
    p.add_argument("--n", type=_int_at_least(1), default=10_000)
    p.add_argument("--k", type=_int_at_least(2), default=6)
    p.add_argument("--block", type=_int_at_least(1), default=256)
    p.add_argument("--threads", type=_int_at_least(1))
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_bench)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DigicopyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
