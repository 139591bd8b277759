"""
Command-line entry point: sphereplate {force,gradient,compare,converge,theta}.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure.
"""

import os
import sys
import logging
import argparse

from pydantic import ValidationError

from app.cli.commands import COMMANDS
from app.cli.config_loader import load_config
from app.cli.output import write_table
from app.utils.errors import CasimirError, NumericalError

# Setup logging
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


def _add_run_options(parser):
    parser.add_argument("--config", help="key = value settings file; flags override it")
    geometry = parser.add_argument_group("geometry")
    geometry.add_argument("--radius-um", dest="radius_um", type=float)
    geometry.add_argument("--a-um", dest="a_um", type=float, help="single separation")
    geometry.add_argument("--a-min-um", dest="a_min_um", type=float)
    geometry.add_argument("--a-max-um", dest="a_max_um", type=float)
    geometry.add_argument("--a-points", dest="a_points", type=int)
    geometry.add_argument("--a-step-um", dest="a_step_um", type=float)
    geometry.add_argument("--a-grid", dest="a_grid", choices=["linear", "log"])
    geometry.add_argument("--temperature-k", dest="temperature_k", type=float)

    material = parser.add_argument_group("material")
    material.add_argument("--material", choices=["drude", "plasma", "tabulated", "lorentz_drude"])
    material.add_argument("--plasma-ev", dest="plasma_ev", type=float)
    material.add_argument("--gamma-ev", dest="gamma_ev", type=float)
    material.add_argument("--optical-data", dest="optical_data", help="ω_eV ε'' file for --material tabulated")
    material.add_argument("--theta-table", dest="theta_table")

    oracle = parser.add_argument_group("scattering oracle")
    oracle.add_argument("--oracle", action="store_const", const=True, default=None,
                        help="add the oracle column to force tables")
    oracle.add_argument("--l-max", dest="l_max", type=int)
    oracle.add_argument("--m-max", dest="m_max", type=int)
    oracle.add_argument("--n-max", dest="n_max", type=int)
    oracle.add_argument("--schedule", help="ascending l_max values, e.g. 30,60")
    oracle.add_argument("--target-delta", dest="target_delta", type=float)

    out = parser.add_argument_group("output")
    out.add_argument("--format", choices=["csv", "json"])
    out.add_argument("--output", help="output file; stdout when omitted")
    out.add_argument("--threads", type=int, help="worker threads (SPHEREPLATE_THREADS)")
    out.add_argument("--log-level", dest="log_level", default="WARNING",
                     choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def build_parser():
    parser = argparse.ArgumentParser(prog="sphereplate",
                                     description="Thermal Casimir force between a metallic sphere and plate")
    subparsers = parser.add_subparsers(dest="command", required=True)
    helps = {
        "force": "approximate force per separation",
        "gradient": "approximate force gradient, F'/2πR in mPa",
        "compare": "approximate formula and PFA against the scattering oracle",
        "converge": "oracle convergence along an l_max schedule",
        "theta": "curvature coefficients θ, θ̃ (whole table or interpolated)",
    }
    for name, text in helps.items():
        _add_run_options(subparsers.add_parser(name, help=text))
    return parser


_NOT_CONFIG = {"command", "config", "log_level"}


def main(argv=None, stdout=None):
    """Run one subcommand and return its exit code"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    stdout = stdout or sys.stdout

    try:
        overrides = {key: value for key, value in vars(args).items() if key not in _NOT_CONFIG}
        config = load_config(args.config, overrides)
        if config.threads:
            os.environ["SPHEREPLATE_THREADS"] = str(config.threads)
        table = COMMANDS[args.command](config)
        write_table(table, config.format.value, config.output, stdout)
        return EXIT_OK
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationError as e:
        print(f"error: invalid configuration:\n{e}", file=sys.stderr)
        return EXIT_INVALID
    except (CasimirError, EnvironmentError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
