"""Command-line front end: check-field, run, verify and export."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .experiment import (EXIT_IO, EXIT_OK, EXIT_VALIDATION, ConfigError, exit_code_for, export_bundle,
                         field_check, flipped_spin, load_config, run_experiment, verify_suite)

log = logging.getLogger("magdirac")


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--N", type=int, help="grid points per axis")
    p.add_argument("--L", type=float, help="box side length")
    p.add_argument("--T", type=float, help="time horizon")
    p.add_argument("--tau", type=float, help="output time step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magdirac", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-field", help="field constants and admissibility verdict")
    p.add_argument("config")
    p.add_argument("--mass", type=float)

    p = sub.add_parser("run", help="run an experiment and write CSV reports")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory (overrides the config)")
    _add_overrides(p)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--level", choices=("fast", "full"), default="fast")
    p.add_argument("--inject-spin-flip", action="store_true", help="negate S to exercise the suite")

    p = sub.add_parser("export", help="pack a run directory into a tar archive")
    p.add_argument("run_dir")
    p.add_argument("-o", "--archive")
    return parser


def _cmd_check_field(args) -> int:
    cfg = load_config(args.config)
    if args.mass is not None:
        cfg = cfg.with_overrides(mass=args.mass)
    spec, consts, adm = field_check(cfg)
    out = {"field": spec.field_id if spec else "none", **consts.as_row(), "verdict": adm.verdict,
           "margin": adm.margin, "reasons": list(adm.reasons)}
    print(json.dumps(out, indent=2, default=str))
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = load_config(args.config).with_overrides(N=args.N, L=args.L, T=args.T, tau=args.tau, output=args.output)
    manifest = run_experiment(cfg)
    print(f"verdict {manifest.verdict}; wrote {len(manifest.files)} reports to {cfg['output']}")
    for k, v in manifest.summaries.items():
        print(f"  {k} = {v}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    summary = verify_suite(args.level, spin=flipped_spin() if args.inject_spin_flip else None)
    for line in summary.lines():
        print(line)
    print(f"{'all checks passed' if summary.passed else 'FAILURES'} ({summary.runtime:.1f} s)")
    return summary.exit_code


def _cmd_export(args) -> int:
    archive, sums = export_bundle(args.run_dir, args.archive)
    print(f"{archive}  sha256 {sums['archive']}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"check-field": _cmd_check_field, "run": _cmd_run, "verify": _cmd_verify,
               "export": _cmd_export}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
