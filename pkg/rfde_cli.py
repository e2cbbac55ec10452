"""
Command line for Λ-versal unfoldings of linear delay equations.

Commands:
    analyze FILE      Jordan structure and normalized bases
    check FILE        versality criterion for the file's family
    synthesize FILE   mini-versal unfolding (--real, --scalar-simplify, --out)
    validate FILE     oracle suite on the synthesized family
    hopf              locate a double Hopf point of ẋ = A1 x(t−τ1) + A2 x(t−τ2)

Exit codes: 0 success, 2 criterion inconclusive, 1 error.
"""

import argparse
import sys
from typing import Any, Dict, List, Optional

import structlog
from rich.console import Console
from rich.table import Table

from pipeline_builder import PipelineBuilder
from rfde_unfold.errors import UnfoldingError
from rfde_unfold.oracles import find_double_hopf
from rfde_unfold.problem_io import dumps, encode_complex, encode_problem, parse_problem, write_problem
from rfde_unfold.settings import UnfoldSettings, configure_logging

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2

logger = structlog.get_logger()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rank-tol", type=float, default=None, help="Relative singular-value threshold")
    common.add_argument("--grid", type=int, default=None, help="Delay grid size on [-tau, 0]")
    common.add_argument("--format", choices=["json", "table"], default="json", help="Output format")
    common.add_argument("--log-level", default=None, help="structlog level (DEBUG, INFO, WARNING, ...)")

    parser = argparse.ArgumentParser(prog="rfde-unfold", description="Λ-versal unfoldings of linear RFDEs")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("analyze", "Jordan structure and normalized bases"),
        ("check", "Versality criterion for the file's family"),
        ("synthesize", "Mini-versal unfolding"),
        ("validate", "Oracle suite on the synthesized family"),
    ):
        sub = commands.add_parser(name, parents=[common], help=help_text)
        sub.add_argument("problem", help="Problem file (JSON, format 1)")
        if name in ("synthesize", "validate"):
            sub.add_argument("--real", action="store_true", help="Decomplexify over a conjugation-closed Λ")
        if name == "synthesize":
            sub.add_argument("--scalar-simplify", action="store_true", help="β-form for scalar equations")
            sub.add_argument("--out", default=None, help="Write a problem file carrying the synthesized family")
        if name == "validate":
            sub.add_argument("--trials", type=int, default=3, help="Random directions for the spectrum check")
            sub.add_argument("--eps", type=float, default=1e-3, help="Initial perturbation size")
            sub.add_argument("--seed", type=int, default=0, help="Random seed")

    hopf = commands.add_parser("hopf", parents=[common], help="Locate a double Hopf point")
    hopf.add_argument("--tau1", type=float, default=1.0)
    hopf.add_argument("--tau2", type=float, default=2.0)
    hopf.add_argument("--out", default=None, help="Write a problem file for the point found")
    return parser


def _settings(args: argparse.Namespace, tolerances: Optional[Dict[str, Any]] = None) -> UnfoldSettings:
    """defaults < environment < problem file < flags."""
    return (
        UnfoldSettings()
        .merged(tolerances)
        .merged({"rank_tol": args.rank_tol, "grid_size": args.grid, "log_level": args.log_level})
    )


def _render_table(console: Console, command: str, result: Dict[str, Any]) -> None:
    table = Table(title=f"rfde-unfold {command}")
    table.add_column("quantity")
    table.add_column("value", overflow="fold")
    for key, value in _flatten(result):
        table.add_row(key, str(value))
    console.print(table)


def _flatten(value: Any, prefix: str = "") -> List[Any]:
    if isinstance(value, dict) and not set(value) <= {"re", "im"}:
        rows = []
        for key in sorted(value):
            rows.extend(_flatten(value[key], f"{prefix}.{key}" if prefix else str(key)))
        return rows
    return [(prefix, value)]


def emit(args: argparse.Namespace, result: Dict[str, Any]) -> None:
    if args.format == "table":
        _render_table(Console(), args.command, result)
    else:
        sys.stdout.write(dumps({"command": args.command, "result": result}))


def run_hopf(args: argparse.Namespace) -> int:
    point = find_double_hopf(args.tau1, args.tau2)
    result = {
        "A1": point.A1,
        "A2": point.A2,
        "tau1": point.tau1,
        "tau2": point.tau2,
        "omega1": point.omega1,
        "omega2": point.omega2,
        "residual": point.residual,
        "lambda_set": [encode_complex(lam) for lam in point.lambdas()],
    }
    if args.out:
        write_problem(args.out, encode_problem(point.to_rfde(), point.lambdas(), name="double-hopf"))
    emit(args, result)
    return EXIT_OK


def run_pipeline(args: argparse.Namespace, builder: Optional[PipelineBuilder] = None) -> int:
    problem = parse_problem(args.problem)
    settings = _settings(args, problem.tolerances)
    options = {
        "settings": settings,
        "real": getattr(args, "real", False),
        "scalar_simplify": getattr(args, "scalar_simplify", False),
        "trials": getattr(args, "trials", None),
        "eps": getattr(args, "eps", None),
        "seed": getattr(args, "seed", None),
    }
    builder = builder or PipelineBuilder(settings=settings)
    state = builder.execute(args.command, problem, options)

    if state["errors"]:
        for error in state["errors"]:
            print(f"error: {error['step_id']}: {error['error_type']}: {error['error']}", file=sys.stderr)
        return EXIT_ERROR

    results = state["results"]
    if args.command == "analyze":
        emit(args, results["analysis"]["summary"])
        return EXIT_OK
    if args.command == "check":
        report = results["versality"]["report"]
        emit(args, results["versality"]["summary"])
        return EXIT_OK if report.versal else EXIT_INCONCLUSIVE
    if args.command == "synthesize":
        synthesis = results["synthesis"]
        if args.out:
            write_problem(args.out, synthesis["problem_out"])
        emit(args, synthesis["summary"])
        return EXIT_OK

    validation = results["validation"]
    emit(args, validation["summary"])
    return EXIT_OK if validation["passed"] else EXIT_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or UnfoldSettings().log_level)
    try:
        if args.command == "hopf":
            return run_hopf(args)
        return run_pipeline(args)
    except (UnfoldingError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        logger.error("Unexpected failure", error=str(e), error_type=type(e).__name__)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
