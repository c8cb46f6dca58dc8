"""command line front end: relspec model | sweep | asympt | verify | kernel"""

import argparse
import json
import logging
import math
import sys
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from .asymptotics import c0_coefficient_b, c1_coefficient_b, d0_coefficient_f, d1_coefficient_f
from .bogolyubov import HEAT_QUADRATURE_CONTROL, BetaSweep, Flavor, Route, V_b, V_f, run_sweep
from .checks import CheckLevel
from .config import ROUTES_BY_NAME, SWEEP_ROUTES, default_config, load_config
from .errors import (
    AccuracyError,
    ConfigError,
    DomainError,
    FitError,
    NumericError,
    SpectralFormatError,
    UnsupportedError,
)
from .specfun import KernelKind, eval_h
from .spectral import OperatorPair, load_pair, save_pair, validate
from .verification import VerificationSuite, VerificationSuiteError


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_USAGE = 2

UNSUPPORTED = "unsupported"


class UsageError(Exception):
    """Raised for bad command line input that argparse cannot catch itself"""

    pass


def _parse_betas(raw: str) -> List[float]:
    try:
        return [float(b) for b in raw.split(",") if b.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(
            f"betas must be comma separated numbers; got '{raw}'"
        ) from e


def build_parser() -> argparse.ArgumentParser:
    """The argument parser of the `relspec` command"""
    parser = argparse.ArgumentParser(
        prog="relspec",
        description="Bogolyubov invariants of operator pairs from truncated spectral data",
    )
    parser.add_argument(
        "--print-config",
        action="store_true",
        help="print every default setting as JSON and exit",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="logging level (default: WARNING)",
    )
    commands = parser.add_subparsers(dest="command")

    model = commands.add_parser("model", help="build an operator pair and write its pair file")
    model.add_argument("--config", required=True, help="JSON run config")
    model.add_argument("--out", required=True, help="path of the pair file to write")

    sweep = commands.add_parser("sweep", help="evaluate an invariant over a list of beta")
    sweep.add_argument("pair_file", help="pair file written by 'relspec model'")
    sweep.add_argument("--config", help="JSON run config supplying sweep defaults and controls")
    sweep.add_argument("--betas", type=_parse_betas, help="comma separated beta values")
    sweep.add_argument("--route", choices=SWEEP_ROUTES, help="evaluation route")
    sweep.add_argument("--flavor", choices=[f.value for f in Flavor], help="invariant flavor")
    sweep.add_argument("--out", required=True, help="output table (.csv or .json)")

    asympt = commands.add_parser("asympt", help="leading small-beta coefficients of a model")
    asympt.add_argument("--config", required=True, help="JSON run config")
    asympt.add_argument("--out", help="write the coefficient report here instead of stdout")

    verify = commands.add_parser("verify", help="run the verification suite")
    verify.add_argument("--level", choices=[lv.value for lv in CheckLevel], default="quick")
    verify.add_argument("--suite", help="JSON suite file to run instead of the default suite")
    verify.add_argument("--out", help="write the machine-readable summary (.json or .csv) here")

    kernel = commands.add_parser("kernel", help="table of the kernels h_b, h_f, h_0")
    kernel.add_argument("--out", required=True, help="output CSV")
    kernel.add_argument("--t-min", type=float, default=0.01, dest="t_min")
    kernel.add_argument("--t-max", type=float, default=100.0, dest="t_max")
    kernel.add_argument("--num", type=int, default=200, help="number of log-spaced points")
    return parser


def cmd_model(args: argparse.Namespace) -> int:
    """Build the configured pair, write it and print its validation report"""
    config = load_config(args.config)
    pair = config.build_pair()
    save_pair(pair, args.out)
    report = validate(pair)
    print(report.get_report_string())
    return EXIT_OK if report.passed else EXIT_NUMERIC


def _sweep_settings(args: argparse.Namespace, pair: OperatorPair):
    config = load_config(args.config) if args.config else None
    defaults = default_config()["sweep"]
    betas = args.betas or (config.betas if config else defaults["betas"])
    route = args.route or (config.route if config else defaults["route"])
    if args.flavor is not None:
        flavor = Flavor(args.flavor)
    elif config is not None:
        flavor = config.flavor_for(pair)
    else:
        flavor = Flavor.FERMI if pair.is_dirac else Flavor.BOSE
    ctl = config.quadrature if config else HEAT_QUADRATURE_CONTROL
    if not betas or any(not (b > 0 and math.isfinite(b)) for b in betas):
        raise UsageError("betas must be a nonempty list of positive numbers")
    return betas, route, flavor, ctl


def _discrepancy_frame(spectral: BetaSweep, heat: BetaSweep) -> pd.DataFrame:
    """Both routes side by side with their relative discrepancy"""
    rows: Dict[str, List[Any]] = {
        "beta": [],
        "spectral": [],
        "heat": [],
        "heat_error": [],
        "discrepancy": [],
        "issue": [],
    }
    for s, h in zip(spectral, heat):
        scale = abs(s.value) if s.value != 0 else 1.0
        rows["beta"].append(s.beta)
        rows["spectral"].append(s.value)
        rows["heat"].append(h.value)
        rows["heat_error"].append(h.error_estimate)
        rows["discrepancy"].append(abs(s.value - h.value) / scale)
        rows["issue"].append(h.issue or s.issue or "")
    return pd.DataFrame(rows, columns=list(rows))


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run a beta sweep of a pair file and write the table"""
    pair = load_pair(args.pair_file)
    betas, route, flavor, ctl = _sweep_settings(args, pair)
    is_json = str(args.out).endswith(".json")

    if route == "both":
        spectral = run_sweep(pair, betas, flavor, Route.SPECTRAL, ctl)
        heat = run_sweep(pair, betas, flavor, Route.HEAT_INTEGRAL, ctl)
        frame = _discrepancy_frame(spectral, heat)
        if is_json:
            with open(args.out, "w") as f:
                records = frame.to_dict("records")
                json.dump({"flavor": flavor.value, "records": records}, f, indent=4)
        else:
            frame.to_csv(args.out, index=False)
        failed = len(spectral.flagged) + len(heat.flagged)
        print(frame.to_string(index=False))
    else:
        sweep = run_sweep(pair, betas, flavor, ROUTES_BY_NAME[route][0], ctl)
        if is_json:
            sweep.save_as_json(args.out)
        else:
            sweep.save_as_csv(args.out)
        failed = len(sweep.flagged)
        print(sweep.get_report_string())

    if failed:
        logger.error("%d sweep rows failed", failed)
        return EXIT_NUMERIC
    return EXIT_OK


def _or_unsupported(compute: Callable[[], float]) -> Any:
    try:
        return compute()
    except UnsupportedError as e:
        logger.info("coefficient unsupported: %s", e)
        return UNSUPPORTED


def _relative_gap(first: Any, second: Any) -> Any:
    if UNSUPPORTED in (first, second):
        return UNSUPPORTED
    if first == 0 and second == 0:
        return 0.0
    return abs(first - second) / max(abs(first), abs(second))


def cmd_asympt(args: argparse.Namespace) -> int:
    """Leading coefficients of the configured model as a JSON report"""
    config = load_config(args.config)
    pair = config.build_pair()
    geometry = config.geometry or pair.geometry
    if geometry is None:
        raise ConfigError("geometry", "the model has no leading symbol; add a geometry section")
    flavor = config.flavor_for(pair)

    if flavor is Flavor.BOSE:
        kernel = c0_coefficient_b(geometry, config.quadrature)
        momentum = _or_unsupported(lambda: V_b(geometry, config.quadrature))
        coefficients = {
            "c0": kernel,
            "V_b": momentum,
            "c0_V_b_relative_gap": _relative_gap(kernel, momentum),
            "c1": _or_unsupported(lambda: c1_coefficient_b(pair, config.quadrature)),
        }
    else:
        kernel = d0_coefficient_f(geometry, config.quadrature)
        momentum = _or_unsupported(lambda: V_f(geometry, config.quadrature))
        coefficients = {
            "d0": kernel,
            "V_f": momentum,
            "d0_V_f_relative_gap": _relative_gap(kernel, momentum),
            "d1": _or_unsupported(lambda: d1_coefficient_f(pair, config.quadrature)),
        }

    report = {
        "family": config.family,
        "flavor": flavor.value,
        "n": geometry.n,
        "geometry": geometry.to_json_dict(),
        "coefficients": coefficients,
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Run the verification suite and print its report"""
    if args.suite:
        suite = VerificationSuite.load(args.suite)
    else:
        suite = VerificationSuite.default_suite(args.level)
    report = suite.run()
    print(report.get_report_string())
    if args.out:
        if str(args.out).endswith(".csv"):
            report.save_as_csv(args.out)
        else:
            report.save_as_json(args.out)
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_kernel(args: argparse.Namespace) -> int:
    """Write (t, h_b, h_f, h_0) plot data"""
    if not (0 < args.t_min < args.t_max) or args.num < 2:
        raise UsageError("need 0 < t-min < t-max and at least 2 points")
    ts = np.geomspace(args.t_min, args.t_max, args.num)
    frame = pd.DataFrame(
        {
            "t": ts,
            "h_b": [eval_h(KernelKind.BOSE, t) for t in ts],
            "h_f": [eval_h(KernelKind.FERMI, t) for t in ts],
            "h_0": [eval_h(KernelKind.ZERO, t) for t in ts],
        }
    )
    frame.to_csv(args.out, index=False)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "model": cmd_model,
    "sweep": cmd_sweep,
    "asympt": cmd_asympt,
    "verify": cmd_verify,
    "kernel": cmd_kernel,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the `relspec` command

    Returns
    -------
    int
        0 on success, 1 on a numeric failure, 2 on a usage error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    if args.print_config:
        print(json.dumps(default_config(), indent=2, sort_keys=True))
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        return COMMANDS[args.command](args)
    except (
        ConfigError,
        SpectralFormatError,
        VerificationSuiteError,
        UsageError,
        DomainError,
        UnsupportedError,
    ) as e:
        print(f"relspec {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (AccuracyError, NumericError, FitError) as e:
        print(f"relspec {args.command}: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"relspec {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
