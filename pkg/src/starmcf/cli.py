"""Command line entry point: ``starmcf {simulate,verify,convergence}``.

Exit codes: 0 all verdicts pass, 1 at least one verdict fails,
2 configuration or runtime error.
"""

import argparse
import dataclasses
import logging
import os
import sys

from .harness import (
    OUT_ENV, ConfigError, emit_outputs, load_config, residual_study, run_experiment,
)


def _parser():
    p = argparse.ArgumentParser(prog="starmcf", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "run an experiment and write its outputs"),
                        ("verify", "run the full verification suite"),
                        ("convergence", "residual refinement study only")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="YAML experiment file")
        sp.add_argument("--grids", help="comma separated grid sizes, overrides the config")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        if name == "simulate":
            sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or config)")
    return p


def _config(args):
    cfg = load_config(args.config)
    over = {}
    if args.grids:
        try:
            grids = tuple(int(g) for g in args.grids.split(","))
        except ValueError:
            raise ConfigError(f"--grids: not a list of integers: {args.grids!r}") from None
        if any(b <= a for a, b in zip(grids, grids[1:])):
            raise ConfigError("--grids: sizes must be strictly ascending")
        over["grids"] = grids
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed: must be non-negative")
        over["seed"] = args.seed
    return dataclasses.replace(cfg, **over)


def _print_verdicts(report):
    for name, v in report.verdicts.items():
        print(f"{v['status']:>15}  {name:<24} {v['anchor']}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command == "convergence":
            study = residual_study(cfg)
            table = study["table"]
            print("N  " + "  ".join(k for k in table if k != "N"))
            for i, N in enumerate(table["N"]):
                print(N, *(table[k][i] for k in table if k != "N"))
            print("orders:", study["orders"])
            orders = [p for p in study["orders"].values() if p is not None]
            return 0 if all(p >= study["target"] for p in orders) else 1
        report = run_experiment(cfg)
        if args.command == "simulate":
            out = args.out or os.environ.get(OUT_ENV) or cfg.out_dir or "starmcf-out"
            paths = emit_outputs(report, out)
            print(f"wrote {', '.join(str(p) for p in paths.values())}")
            print(f"wall clock {report.wall_clock:.1f} s", file=sys.stderr)
            return 0
        _print_verdicts(report)
        print(f"wall clock {report.wall_clock:.1f} s", file=sys.stderr)
        return 0 if report.passed else 1
    except (ConfigError, OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
