"""Command-line entry point: ``tikcurve <subcommand> [--config FILE] [--seed N] [--out DIR]``.

Exit codes: 0 on success, 2 for invalid configuration or a failed schedule
validation, 3 when a solver fails.
"""

import argparse
import json
import logging
import sys

from .errors import ConfigError, SolverError, TikcurveError
from .experiments import (
    ExperimentConfig,
    default_config,
    run_experiment,
    validate_schedule,
    write_outputs,
)

log = logging.getLogger("tikcurve")

SUBCOMMANDS = {
    "denoise-rates": "denoising_rates",
    "magnetize": "magnetization",
    "seminorm-compare": "seminorm_compare",
    "direct-inverse": "direct_inverse",
}

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tikcurve", description="Run Tikhonov reconstruction experiments on curves.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, kind in SUBCOMMANDS.items():
        s = sub.add_parser(name, help=f"run the {kind.replace('_', ' ')} study")
        s.add_argument("--config", help="JSON experiment config (defaults to the built-in schedule)")
        s.add_argument("--seed", type=int, help="override the config's rng_seed")
        s.add_argument("--out", default=f"out-{name}", help="output directory")
    s = sub.add_parser("validate-schedule", help="check the parameter-choice rule of a schedule")
    s.add_argument("--config", required=True,
                   help="JSON with a 'levels' list of {alpha, delta, gamma, gamma2, rho}")
    s.add_argument("--seed", type=int, help="ignored; accepted for symmetry")
    s.add_argument("--out", help="optional path for the diagnostics report")
    return p


def _load_config(args, kind: str) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_file(args.config)
        if config.kind != kind:
            raise ConfigError(f"config kind {config.kind!r} does not match {kind!r}")
    else:
        config = default_config(kind)
    if args.seed is not None:
        config.rng_seed = args.seed
        config.validate()
    config.output_dir = args.out
    return config


def _validate(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        try:
            levels = json.load(fh)["levels"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"{args.config}: {exc}") from exc
    diag = validate_schedule(levels)
    lines = []
    for k, lv in enumerate(diag.levels, 1):
        terms = " ".join(f"{key}={lv[key]:.6g}" for key in
                         ("alpha", "rho^2/alpha", "gamma2^2/alpha", "delta^2/alpha", "gamma1"))
        lines.append(f"level {k}: {terms} dominant={lv['dominant']}")
    lines += [f"FLAG {f}" for f in diag.flags] or ["schedule ok"]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK if diag.ok else EXIT_VALIDATION


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "validate-schedule":
            return _validate(args)
        config = _load_config(args, SUBCOMMANDS[args.command])
        log.info("running %s with seed %d", config.kind, config.rng_seed)
        report = run_experiment(config)
        write_outputs(report, args.out, config)
        log.info("wrote %s", args.out)
    except (ConfigError, OSError) as exc:
        print(f"tikcurve: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"tikcurve: solver failed: {exc}", file=sys.stderr)
        for key, val in exc.diagnostics.items():
            print(f"  {key} = {val}", file=sys.stderr)
        return EXIT_SOLVER
    except TikcurveError as exc:
        print(f"tikcurve: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
