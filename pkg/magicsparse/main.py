import argparse
import json
import logging
import math
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from magicsparse.core.config import settings
from magicsparse.core.exceptions import MagicSparseError
from magicsparse.core.orchestrator import Orchestrator
from magicsparse.schemas import BenchConfig, CheckStatus, RunReport, SamplerConfig, SamplingMode

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ASSERTION = 4

REPORT_ROWS = [
    ("t", "t"), ("mode", "mode"), ("phi", "phi"), ("delta", "delta"), ("runs", "runs"), ("k", "k"),
    ("gamma", "gamma"), ("mean_sq_error", "mean ||D-psi||^2"), ("stderr", "stderr"),
    ("claimed_bound", "(xi^t - gamma)/k"), ("claim_status", "mean <= delta^2 + 3 stderr"),
    ("mean_norm_gap", "mean <psi|psi> - 1"), ("norm_gap_stderr", "stderr"),
    ("expected_norm", "exact E<psi|psi>"), ("oracle_status", "MC vs exact ensemble"),
    ("mean_target_overlap", "mean Re<D|psi>"), ("target_overlap_stderr", "stderr"),
    ("implied_gamma", "implied gamma"), ("tail_fraction", "tail event fraction"),
    ("tail_bound_value", "tail bound"), ("tail_status", "tail check"),
]


class CliParser(argparse.ArgumentParser):
    """Usage errors print one line and exit 2."""

    def error(self, message: str):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_mode(parser: argparse.ArgumentParser, default: Optional[str] = None):
    parser.add_argument("--mode", choices=[SamplingMode.IID.value, SamplingMode.CORRELATED.value],
                        default=default, required=default is None)


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="magicsparse", description="Sparsified stabilizer decompositions of magic states.")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    p = sub.add_parser("extent", help="stabilizer extent and L1 norm")
    p.add_argument("--phi", type=float, default=math.pi / 4)
    p.add_argument("--t", type=int, required=True)

    p = sub.add_parser("sparsify", help="sample a k-term decomposition")
    p.add_argument("--phi", type=float, default=math.pi / 4)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    _add_mode(p, SamplingMode.IID.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--postselect", action="store_true")
    p.add_argument("--factor", type=float, default=settings.POSTSELECT_FACTOR)
    p.add_argument("--max-attempts", type=int, default=settings.POSTSELECT_MAX_ATTEMPTS)
    p.add_argument("--norm-method", choices=["exact", "fastnorm"], default="exact")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--pfail", type=float, default=0.1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("norm", help="norm of a decomposition file")
    p.add_argument("--in", dest="path", required=True)
    p.add_argument("--method", choices=["exact", "fastnorm"], default="exact")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--pfail", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--median-of-means", action="store_true")
    p.add_argument("--backend", choices=["gauss", "dense"], default="gauss")

    for name, help_text in (("validate", "Monte Carlo expected-error report"),
                            ("tailcheck", "Monte Carlo tail-bound report")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--t", type=int, required=True)
        p.add_argument("--delta", type=float, required=True)
        _add_mode(p)
        p.add_argument("--runs", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--phi", type=float, default=math.pi / 4)
        p.add_argument("--workers", type=int, default=settings.MAX_WORKERS)
        p.add_argument("--out", default=None)
        p.add_argument("--json", action="store_true", help="print the report as JSON instead of a table")

    p = sub.add_parser("bench", help="FASTNORM runtime sweep, iid vs correlated")
    p.add_argument("--t-min", type=int, required=True)
    p.add_argument("--t-max", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--L", type=int, default=settings.BENCH_DEFAULT_L)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--out-dir", required=True)
    return parser


def format_report(report: RunReport) -> str:
    data = report.model_dump(mode="json")
    width = max(len(label) for _, label in REPORT_ROWS)
    lines = []
    for key, label in REPORT_ROWS:
        value = data[key]
        if isinstance(value, float):
            value = f"{value:.9g}"
        elif value is None:
            value = "n/a"
        lines.append(f"{label:<{width}}  {value}")
    for warning in report.warnings:
        lines.append(f"{'warning':<{width}}  {warning}")
    for note in report.notes:
        lines.append(f"{'note':<{width}}  {note}")
    return "\n".join(lines)


def _print_json(data) -> None:
    print(json.dumps(data, indent=2))


def _describe_validation(error: ValidationError) -> str:
    item = error.errors()[0]
    location = ".".join(str(p) for p in item.get("loc", ())) or "input"
    return f"invalid {location}: {item.get('msg', 'invalid value')}"


def run(args: argparse.Namespace) -> int:
    logger.debug(f"Running command: {args.command}")
    orchestrator = Orchestrator(workers=getattr(args, "workers", None))

    if args.command == "extent":
        _print_json(orchestrator.handle_extent(args.phi, args.t))
        return EXIT_OK

    if args.command == "sparsify":
        cfg = SamplerConfig(
            phi=args.phi, t=args.t, delta=args.delta, mode=args.mode, seed=args.seed,
            postselect=args.postselect, postselect_factor=args.factor, max_attempts=args.max_attempts,
        )
        _print_json(orchestrator.handle_sparsify(cfg, args.out, args.norm_method, args.epsilon, args.pfail))
        return EXIT_OK

    if args.command == "norm":
        estimate = orchestrator.handle_norm(
            args.path, args.method, args.epsilon, args.pfail, args.seed,
            samples=args.samples, median_of_means=args.median_of_means, backend=args.backend,
        )
        _print_json(estimate.model_dump(mode="json"))
        return EXIT_OK

    if args.command in ("validate", "tailcheck"):
        handler = orchestrator.handle_validate if args.command == "validate" else orchestrator.handle_tailcheck
        report = handler(args.t, args.delta, SamplingMode(args.mode), args.runs, args.seed,
                         phi=args.phi, out=args.out)
        if args.json:
            _print_json(report.model_dump(mode="json"))
        else:
            print(format_report(report))
        failed = report.assertion_failed() if args.command == "validate" else report.tail_status == CheckStatus.FAIL
        return EXIT_ASSERTION if failed else EXIT_OK

    if args.command == "bench":
        cfg = BenchConfig(t_min=args.t_min, t_max=args.t_max, delta=args.delta, runs=args.runs,
                          L=args.L, seed=args.seed, warmup=args.warmup)
        _print_json(orchestrator.handle_bench(cfg, args.out_dir, parallel=args.parallel))
        return EXIT_OK

    raise ValueError(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    logger.info(f"Starting {settings.PROJECT_NAME} {args.command}")

    try:
        return run(args)
    except MagicSparseError as e:
        print(f"magicsparse: error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"magicsparse: error: {_describe_validation(e)}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, ArithmeticError) as e:
        print(f"magicsparse: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
