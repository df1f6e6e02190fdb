"""Command-line entry point: ``d2dcap {analytic,sweep,simulate,optrate}``."""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, DomainError
from .experiments import (ExperimentConfig, emit, evaluate, load_config, parse_config_text,
                          run_optrate, run_sweep)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("d2dcap")


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a single config key (repeatable)")
    common.add_argument("--seed", type=int, help="master seed (overrides config 'seed')")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--scenario", choices=("overlay", "underlay"))
    common.add_argument("--paper-literal-threshold", action="store_true",
                        help="use 2^(r/B)-1 for the cellular link too")
    common.add_argument("--workers", type=int, help="worker processes for sweep points")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="d2dcap", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("analytic", parents=[common], help="closed-form EC at one operating point, per theta")
    sub.add_parser("sweep", parents=[common], help="sweep sigma_t / theta / rate / p_e1 (config 'sweep.*')")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo EC at one operating point, per theta")
    sub.add_parser("optrate", parents=[common], help="EC over the rate grid and the maximising rate")
    return p


def _config_from_args(args) -> ExperimentConfig:
    overrides = {}
    if args.config:
        overrides.update(load_config(args.config).values)
    if args.set:
        overrides.update(parse_config_text("\n".join(args.set)))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.scenario:
        overrides["scenario.kind"] = args.scenario
    if args.paper_literal_threshold:
        overrides["scenario.paper_literal_threshold"] = True
    if args.workers is not None:
        overrides["run.workers"] = args.workers
    return ExperimentConfig.from_overrides(overrides)


def run(args) -> list:
    cfg = _config_from_args(args)
    if args.command == "analytic":
        rows = evaluate(cfg, "theta", cfg["qos.theta"])
    elif args.command == "simulate":
        cfg = cfg.replace(mc__enabled=True)
        rows = evaluate(cfg, "theta", cfg["qos.theta"])
    elif args.command == "optrate":
        rows = run_optrate(cfg)
    else:
        rows = run_sweep(cfg)
    text = emit(rows, cfg, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return rows


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        run(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DomainError, ArithmeticError, RuntimeError) as exc:
        log.error("numeric error: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    return EXIT_OK
