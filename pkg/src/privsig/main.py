"""Command-line front end for privsig."""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from privsig import __version__
from privsig.config import DEFAULTS
from privsig.models.requests import (
    IBRequest,
    QuantizeRequest,
    SimulateRequest,
    SolveRequest,
    SweepSpec,
    VerifyRequest,
    table_preset,
)
from privsig.models.responses import CSV_COLUMNS, SweepResponse, SweepRow, VerifyResponse
from privsig.services.solver_manager import SolverManager, get_solver_manager
from privsig.utils.formatting import render_csv, render_json
from privsig.utils.logging_config import get_run_logger, setup_logging

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_VERIFICATION = 3

SOLVE_MODES = ["nash", "stackelberg", "scalar", "ib", "awgn", "discrete"]
SWEEP_MODES = ["nash", "stackelberg", "ib", "awgn", "discrete"]

# argparse dest -> SolveRequest field
REQUEST_FIELDS = {
    "sx2": "sigma_x2",
    "sy2": "sigma_y2",
    "rho": "rho",
    "delta": "delta",
    "seed": "seed",
    "nx": "n_x",
    "p": "p",
    "sigma_w2": "sigma_w2",
    "levels": "levels",
    "bins": "bins",
    "beta": "beta",
    "alpha": "alpha",
    "alphas": "alphas",
    "mc": "mc",
    "n_encoders": "n_encoders",
    "n_nonlinear": "n_nonlinear",
}

logger = logging.getLogger(__name__)
run_logger = get_run_logger()


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("source and game")
    group.add_argument("--sx2", type=float, help="Variance of X (default 1)")
    group.add_argument("--sy2", type=float, help="Variance of Y (default 1)")
    group.add_argument("--rho", type=float, help="Covariance of X and Y")
    group.add_argument("--delta", type=float, help="Privacy ratio")
    group.add_argument("--sigma-file", type=Path, help="Plain-text covariance matrix, X block first")
    group.add_argument("--nx", type=int, help="Dimension of X in --sigma-file")
    group.add_argument("--seed", type=int, default=DEFAULTS.default_seed, help="Seed (default 42)")

    group = common.add_argument_group("channels and solvers")
    group.add_argument("--p", type=float, help="AWGN power constraint (default 1)")
    group.add_argument("--sigma-w2", type=float, help="AWGN noise variance")
    group.add_argument("--levels", type=int, help="Discrete channel alphabet size")
    group.add_argument("--bins", type=int, help="Quantizer cells used on the discrete channel")
    group.add_argument("--beta", type=float, help="Mutual-information bottleneck tradeoff")
    group.add_argument("--alpha", type=float, help="Trace budget of the constrained bottleneck")
    group.add_argument("--alphas", type=_float_list, help="Nash encoder scalings, comma separated")
    group.add_argument("--mc", type=int, help="Monte Carlo sample count")
    group.add_argument("--n-encoders", type=int, help="Linear deviation candidates (default 200)")
    group.add_argument("--n-nonlinear", type=int, help="Nonlinear deviation candidates (default 30)")

    group = common.add_argument_group("output and logging")
    group.add_argument("--out", type=Path, help="Write output to this file instead of stdout")
    group.add_argument("--format", choices=["json", "csv", "text"], help="Output format")
    group.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper,
                       help="Log level (default WARNING)")
    group.add_argument("--log-dir", type=Path, help="Directory for daily rotating log files")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="privsig",
        description="Equilibria of the Gaussian privacy-signaling game",
    )
    parser.add_argument("--version", action="version", version=f"privsig {__version__}")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")

    solve = commands.add_parser("solve", parents=[common], help="Solve one instance (JSON)")
    solve.add_argument("--mode", choices=SOLVE_MODES, required=True)
    solve.add_argument("--verify", action="store_true", help="Attach numerical certificates")

    sweep = commands.add_parser("sweep", parents=[common], help="Parameter sweep (CSV)")
    sweep.add_argument("--mode", choices=SWEEP_MODES, default="nash")
    sweep.add_argument("--axis", choices=["delta", "rho", "sigma_w2", "levels"])
    grid = sweep.add_mutually_exclusive_group()
    grid.add_argument("--grid", type=_float_list, help="Axis values, comma separated")
    grid.add_argument("--linspace", type=float, nargs=3, metavar=("START", "STOP", "NUM"))
    grid.add_argument("--logspace", type=float, nargs=3, metavar=("START", "STOP", "NUM"))
    grid.add_argument("--preset", choices=["ratios"], help="Encoder ratio table rows")
    sweep.add_argument("--workers", type=int, default=1, help="Rows computed concurrently")

    commands.add_parser("ib", parents=[common], help="Information bottleneck (JSON)")

    quantize = commands.add_parser("quantize", parents=[common], help="Lloyd-Max quantizer (JSON)")
    quantize.add_argument("--tol", type=float)
    quantize.add_argument("--max-iter", type=int)
    quantize.add_argument("--no-oracle", action="store_true", help="Skip the quadrature distortion")

    verify = commands.add_parser("verify", parents=[common], help="Certify equilibria (text verdicts)")
    verify.add_argument("--mode", choices=SOLVE_MODES, help="Instance to certify (default: ratio table)")
    verify.add_argument("--tol", type=float)
    verify.add_argument("--corrupt", choices=["encoder"], help=argparse.SUPPRESS)

    simulate = commands.add_parser("simulate", parents=[common], help="Analytic vs Monte Carlo (JSON)")
    simulate.add_argument("--mode", choices=SOLVE_MODES, required=True)
    return parser


def read_sigma(path: Path) -> List[List[float]]:
    """Square covariance from whitespace-separated rows."""
    sigma = np.loadtxt(path, ndmin=2)
    if sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"{path}: covariance must be square, got shape {sigma.shape}")
    return sigma.tolist()


def request_fields(args: argparse.Namespace, exclude: tuple = ()) -> Dict[str, Any]:
    """SolveRequest fields set on the command line."""
    fields = {
        name: getattr(args, dest)
        for dest, name in REQUEST_FIELDS.items()
        if getattr(args, dest, None) is not None and name not in exclude
    }
    if args.sigma_file is not None:
        fields["sigma"] = read_sigma(args.sigma_file)
    return fields


def emit(text: str, out: Optional[Path]):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def verdict_text(response: VerifyResponse) -> str:
    lines = []
    for outcome in response.checks:
        report = outcome.report
        label = outcome.check
        if hasattr(report, "rho"):
            label += f" rho={report.rho:g} delta={report.delta:g}"
            report = report.report
        verdict = "PASS" if outcome.passed else "FAIL"
        details = getattr(report, "details", None)
        lines.append(f"{verdict} {label}" + (f": {'; '.join(details)}" if details else ""))
    lines.append(response.message or "")
    return "\n".join(lines) + "\n"


def cmd_solve(args: argparse.Namespace, manager: SolverManager) -> int:
    request = SolveRequest(mode=args.mode, verify=args.verify, **request_fields(args))
    response = manager.solve(request)
    if args.format == "csv":
        row = SweepRow.from_report(request, response.report, response.b_over_a)
        emit(render_csv([row], CSV_COLUMNS), args.out)
    else:
        emit(render_json(response), args.out)
    return EXIT_OK if response.success else EXIT_VERIFICATION


def cmd_ib(args: argparse.Namespace, manager: SolverManager) -> int:
    request = IBRequest(**request_fields(args))
    emit(render_json(manager.solve(request, command="ib")), args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, manager: SolverManager) -> int:
    if args.preset is not None:
        points = table_preset(args.mode, **request_fields(args, exclude=("rho", "delta", "sigma_x2", "sigma_y2")))
        axis = None
    else:
        if args.axis is None:
            raise ValueError("sweep needs --axis with --grid, --linspace or --logspace (or --preset)")
        fixed = request_fields(args)
        if args.grid is not None:
            spec = SweepSpec(axis=args.axis, grid=args.grid, mode=args.mode, fixed=fixed)
        elif args.linspace is not None or args.logspace is not None:
            spacing = "log" if args.logspace is not None else "linear"
            start, stop, num = args.logspace or args.linspace
            spec = SweepSpec.spaced(args.axis, start, stop, int(num), spacing, mode=args.mode, fixed=fixed)
        else:
            raise ValueError("sweep needs --grid, --linspace or --logspace")
        points = spec.points()
        axis = spec.axis

    rows = asyncio.run(manager.sweep(points, workers=args.workers))
    if args.format == "json":
        emit(render_json(SweepResponse(command="sweep", mode=args.mode, axis=axis, rows=rows)), args.out)
    else:
        emit(render_csv(rows, CSV_COLUMNS), args.out)
    return EXIT_OK


def cmd_quantize(args: argparse.Namespace, manager: SolverManager) -> int:
    if args.levels is None:
        raise ValueError("quantize needs --levels")
    request = QuantizeRequest(levels=args.levels, tol=args.tol, max_iter=args.max_iter, oracle=not args.no_oracle)
    emit(render_json(manager.quantize(request)), args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, manager: SolverManager) -> int:
    target = None
    if args.mode is not None:
        target = SolveRequest(mode=args.mode, **request_fields(args))
    response = manager.verify(VerifyRequest(target=target, corrupt=args.corrupt, tol=args.tol))
    if args.format == "json":
        emit(render_json(response), args.out)
    else:
        emit(verdict_text(response), args.out)
    return EXIT_OK if response.success else EXIT_VERIFICATION


def cmd_simulate(args: argparse.Namespace, manager: SolverManager) -> int:
    target = SolveRequest(mode=args.mode, **request_fields(args, exclude=("mc",)))
    n = args.mc if args.mc is not None else DEFAULTS.mc_fit_samples
    response = manager.simulate(SimulateRequest(target=target, n=n))
    emit(render_json(response), args.out)
    return EXIT_OK if response.success else EXIT_VERIFICATION


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "ib": cmd_ib,
    "quantize": cmd_quantize,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
}


def main(argv: Optional[List[str]] = None, manager: Optional[SolverManager] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 2 on invalid input, 3 on a failed certificate,
        1 on any other error
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INVALID

    setup_logging(args.log_level, log_dir=args.log_dir)
    manager = get_solver_manager(manager)
    command = args.command.upper()

    run_logger.info(f"=== {command} START ===")
    run_logger.info(f"Arguments: {sorted((k, v) for k, v in vars(args).items() if v is not None)}")
    try:
        code = COMMANDS[args.command](args, manager)
        run_logger.info(f"Exit code: {code}")
        run_logger.info(f"=== {command} END ===")
        return code
    except ValueError as e:
        run_logger.error(f"Invalid input: {e}")
        run_logger.info(f"=== {command} END (ERROR) ===")
        print(f"privsig {args.command}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:
        logger.exception(f"{args.command} failed")
        run_logger.info(f"=== {command} END (ERROR) ===")
        print(f"privsig {args.command}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
