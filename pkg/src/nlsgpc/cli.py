"""Command line entry point: ``nlsgpc <kind> [--preset P] [--config F] [--set s.k=v]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import KINDS, PRESETS, ConfigError, load_config
from .errors import NumericalError, ValidationError
from .experiments import run_experiment

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _overrides(pairs) -> dict[str, str]:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlsgpc", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="kind", required=True)
    sub.add_parser("presets", help="list the bundled presets")
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", help="INI file with run settings")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one setting (repeatable)")
        p.add_argument("--out", help="output directory (output.directory)")
        p.add_argument("--workers", type=int, help="process count (run.workers)")
        p.add_argument("--trajectory", action="store_true",
                       help="dump (t, x, |u|^2) at every checkpoint")
    return ap


def _emit_error(exc: BaseException, code: int) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
          file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.kind == "presets":
        for name in sorted(PRESETS):
            print(name)
        return EXIT_OK
    try:
        overrides = _overrides(args.set)
        if args.out:
            overrides["output.directory"] = args.out
        if args.workers is not None:
            overrides["run.workers"] = str(args.workers)
        if args.trajectory:
            overrides["output.trajectory"] = "true"
        cfg = load_config(args.config, preset=args.preset, overrides=overrides, kind=args.kind)
        summary, files = run_experiment(cfg)
    except ValidationError as exc:
        return _emit_error(exc, EXIT_VALIDATION)
    except (NumericalError, ArithmeticError) as exc:
        return _emit_error(exc, EXIT_NUMERICAL)
    print(json.dumps({"kind": cfg.kind, "directory": cfg.output.directory, "files": files,
                      "summary": summary}, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
