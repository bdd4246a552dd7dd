"""``acbdf2 {converge,bubble,coarsen,run}``: experiment driver.

Settings are resolved as command defaults, then ``--config`` file, then flags.
Every config key is also a flag (``--epsilon 0.02``, ``--mode perturbed``).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, RunConfig, defaults, load_config
from .experiments import COMMANDS, MBPViolation
from .linsolve import SolverError
from .stepper import ConstraintViolation


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acbdf2", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value file")
        p.add_argument("--paper-scale", action="store_true", help="use the published grid sizes and horizons")
        p.add_argument("-v", "--verbose", action="store_true")
        for key in RunConfig.keys():
            kwargs = {"dest": f"cfg_{key}", "default": None, "metavar": key.upper()}
            if key == "mbp":
                kwargs["choices"] = ["guaranteed", "free"]
                kwargs.pop("metavar")
            p.add_argument(f"--{key.replace('_', '-')}", **kwargs)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = defaults(args.command, args.paper_scale)
    if args.config:
        cfg = load_config(args.config, cfg)
    flags = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    return cfg.update(flags)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except (ConfigError, ConstraintViolation) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except MBPViolation as exc:
        print(f"error: bound violated: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
