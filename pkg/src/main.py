import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from src.helpers.Census import (
    char3_experiment,
    char3_root_pair_ratio,
    pencil_census,
    pencil_sweep,
)
from src.helpers.FiniteField import field_new
from src.helpers.PairCensus import exhaustive_pair_census, monte_carlo_census, tau_table
from src.helpers.Pencil import DicksonClass, DicksonTag, c_alpha
from src.helpers.PonceletChain import trace_chain
from src.helpers.ProjectivePlane import PPoint
from src.helpers.ReportWriter import render, report_write
from src.helpers.WorkedExample import verify_worked_example
from src.helpers.config import Config, RunConfig
from src.helpers.datadog_instrumentation import Metrics, get_statsd, get_tracer
from src.helpers.setup_logger import clear_run_context, get_logger, set_run_context

logger = logging.getLogger(__name__)
tracer = get_tracer()
statsd = get_statsd()

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poncelet", description="Poncelet closure experiments over finite fields"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-example", help="replay the q = 43 triangle example")
    p.add_argument("--b-alpha", type=int, default=36)

    p = sub.add_parser("pencil-census", help="closure counts inside Dickson pencils")
    p.add_argument("--class", dest="cls", required=True, choices=[t.value for t in DicksonTag])
    _field_args(p)
    p.add_argument("--n", type=int, default=3)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--params", type=int, nargs="+")
    mode.add_argument("--sweep", action="store_true")
    mode.add_argument("--sample", type=int)
    p.add_argument("--seed", type=int)
    _output_args(p, default_format="csv")

    p = sub.add_parser("pair-census", help="closure ratio over all pairs of conics")
    _field_args(p)
    p.add_argument("--n", type=int, default=3)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exhaustive", action="store_true")
    mode.add_argument("--mc", type=int, metavar="SAMPLES")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    _output_args(p, default_format="json")

    p = sub.add_parser("tau-table", help="Monte-Carlo estimates of tau_n")
    p.add_argument("--p-list", required=True, help="comma separated primes")
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=9)
    p.add_argument("--mc", type=int, required=True, metavar="SAMPLES")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    _output_args(p, default_format="csv")

    p = sub.add_parser("trace", help="print a Poncelet chain on the pencil C_alpha")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--class", dest="cls", default="3", choices=["3"])
    p.add_argument("--A", dest="a", type=int, required=True)
    p.add_argument("--B", dest="b", type=int, required=True)
    p.add_argument("--start", required=True, help="x,y,z")
    p.add_argument("--branch", type=int, default=1, choices=[1, 2])
    p.add_argument("--max-steps", type=int)

    p = sub.add_parser("char3", help="class (3) triangle census in characteristic 3")
    p.add_argument("--q", type=int, required=True, choices=[9, 27, 81])
    _output_args(p, default_format="csv")
    return parser


def _field_args(p: argparse.ArgumentParser):
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--r", type=int, default=1)


def _output_args(p: argparse.ArgumentParser, default_format: str):
    p.add_argument("--out")
    p.add_argument("--format", dest="fmt", default=default_format, choices=["csv", "json"])


def _emit(report, run: RunConfig, config: Config) -> int:
    if run.out is None:
        sys.stdout.write(render(report, run.fmt))
        return EXIT_OK
    # relative paths land under REPORT_DIR
    path = Path(config.report_dir) / run.out
    return EXIT_OK if report_write(report, run.fmt, path) else EXIT_FAILED


def cmd_verify_example(args, config: Config) -> int:
    report = verify_worked_example(args.b_alpha)
    for line in report.trace:
        print(line)
    for line in report.table():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_pencil_census(args, config: Config) -> int:
    run = RunConfig.from_config(
        config, p=args.p, r=args.r, n_min=args.n, n_max=args.n,
        class_tags=(args.cls,), param_budget=args.sample, seed=args.seed,
        out=args.out, fmt=args.fmt,
    )
    ctx = field_new(run.p, run.r)
    if args.sweep or args.sample is not None:
        rows = pencil_sweep(args.cls, ctx, args.n, sample=run.param_budget, seed=run.seed)
    else:
        rows = [pencil_census(DicksonClass.of(ctx, args.cls, *(args.params or ())), ctx, args.n)]

    status = _emit(rows, run, config)
    violations = [row for row in rows if not row.gamma_in_bounds()]
    for row in violations:
        logger.error(f"Bound violated: {row.tag}({row.params}) q={row.q} gamma={row.gamma}")
    if (args.sweep or args.sample is not None) and violations:
        statsd.increment(Metrics.CHECK_FAIL, tags=["check:pencil_bounds"])
        return EXIT_FAILED
    return status


def cmd_pair_census(args, config: Config) -> int:
    run = RunConfig.from_config(
        config, p=args.p, r=args.r, n_min=args.n, n_max=args.n,
        samples=args.mc or 0, seed=args.seed, workers=args.workers,
        shard_size=None, out=args.out, fmt=args.fmt,
    )
    ctx = field_new(run.p, run.r)
    if args.exhaustive:
        census = exhaustive_pair_census(
            ctx, args.n, workers=run.workers, max_q=config.exhaustive_max_q
        )
    else:
        census = monte_carlo_census(
            ctx, args.n, run.samples, run.seed, workers=run.workers, shard_size=run.shard_size
        )
    return _emit(census, run, config)


def cmd_tau_table(args, config: Config) -> int:
    primes = [int(p) for p in args.p_list.split(",") if p.strip()]
    if not primes:
        raise ValueError("--p-list names no primes")
    run = RunConfig.from_config(
        config, p=primes[0], n_min=args.n_min, n_max=args.n_max, samples=args.mc,
        seed=args.seed, workers=args.workers, shard_size=None, out=args.out, fmt=args.fmt,
    )
    ctxs = [field_new(p) for p in primes]
    table = tau_table(ctxs, run.n_values, run.samples, run.seed, run.workers, run.shard_size)
    return _emit(table, run, config)


def cmd_trace(args, config: Config) -> int:
    ctx = field_new(args.p)
    A, B = c_alpha(ctx, args.a), c_alpha(ctx, args.b)
    coords = [int(c) for c in args.start.split(",")]
    if len(coords) != 3:
        raise ValueError(f"--start needs three coordinates, got {args.start!r}")
    start = PPoint.of(ctx, *coords)
    kwargs = {"max_steps": args.max_steps} if args.max_steps else {}
    outcome = trace_chain(start, args.branch, A, B, **kwargs)
    print(f"A = {A}")
    print(f"B = {B}")
    for line in outcome.trace_lines():
        print(line)
    print(outcome)
    return EXIT_OK


def cmd_char3(args, config: Config) -> int:
    r = {9: 2, 27: 3, 81: 4}[args.q]
    run = RunConfig(p=3, r=r, out=args.out, fmt=args.fmt)
    census = char3_experiment(field_new(3, r))
    status = _emit(census, run, config)
    print(
        f"gamma={census.gamma} root_pairs={census.root_pairs} psi={census.psi} "
        f"root_pair_ratio={char3_root_pair_ratio(census):.6f} 2/q={2 / args.q:.6f}",
        file=sys.stderr,
    )
    return status


COMMANDS = {
    "verify-example": cmd_verify_example,
    "pencil-census": cmd_pencil_census,
    "pair-census": cmd_pair_census,
    "tau-table": cmd_tau_table,
    "trace": cmd_trace,
    "char3": cmd_char3,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    statsd.increment(Metrics.SERVICE_STARTUP, tags=[f"command:{args.command}"])

    try:
        config = Config()
    except ValueError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        statsd.increment(Metrics.SERVICE_STARTUP_FAILURE)
        return EXIT_USAGE

    get_logger(config)
    clear_run_context()
    set_run_context(
        command=args.command,
        p=getattr(args, "p", None),
        r=getattr(args, "r", None),
        n=getattr(args, "n", None),
        seed=getattr(args, "seed", None),
    )
    logger.debug(f"Running {args.command} with {vars(args)}")

    with tracer.trace("poncelet.command", resource=args.command):
        try:
            return COMMANDS[args.command](args, config)
        except ValueError as e:
            # every domain error subclasses ValueError
            logger.error(f"{args.command}: {e}")
            statsd.increment(Metrics.CENSUS_FAILURE, tags=[f"command:{args.command}"])
            return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
