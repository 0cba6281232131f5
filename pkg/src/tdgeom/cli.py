"""Command line entry point.

    tdgeom run SCENARIO [SCENARIO ...] [--output-dir DIR] [--jobs N] [--quiet]
    tdgeom validate MODEL [--samples N] [--seed S] [--output FILE]
    tdgeom list-models

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import scenario as scn
from .errors import InputError, NumericalError, ScenarioError
from .models import list_models
from .validation import validate

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("tdgeom")


def _run_one(path, output_dir):
    """Worker body; returns (path, exit code, message, summary)."""
    try:
        _, summary = scn.run(path, output_dir)
    except InputError as exc:
        return path, EXIT_INPUT, f"input error: {exc}", None
    except NumericalError as exc:
        return path, EXIT_NUMERICAL, f"numerical failure: {type(exc).__name__}: {exc}", None
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return path, EXIT_NUMERICAL, f"numerical failure: {type(exc).__name__}: {exc}", None
    return path, EXIT_OK, "ok", summary


def _check_names(paths):
    seen = {}
    for p in paths:
        try:
            name = scn.load(p).name
        except InputError:
            continue  # reported when the scenario itself runs
        if name in seen:
            raise ScenarioError(f"scenario name {name!r} also used by {seen[name]}; outputs would collide", "name")
        seen[name] = p


def cmd_run(args):
    try:
        _check_names(args.scenarios)
    except ScenarioError as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    if args.jobs > 1 and len(args.scenarios) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, args.scenarios, [args.output_dir] * len(args.scenarios)))
    else:
        results = [_run_one(p, args.output_dir) for p in args.scenarios]
    worst = EXIT_OK
    for path, code, message, _ in results:
        if code == EXIT_OK:
            log.info("%s: %s", path, message)
        else:
            log.error("%s: %s", path, message)
        worst = max(worst, code)
    return worst


def cmd_validate(args):
    try:
        report = validate(args.model, n_samples=args.samples, seed=args.seed)
    except InputError as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    text = json.dumps(scn._jsonable(report), indent=2, sort_keys=True)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    if not args.quiet:
        width = max(len(r["quantity"]) for r in report["rows"])
        print(f"model {report['model']}: {report['samples']} samples, flag threshold {report['threshold']:g}")
        for r in report["rows"]:
            mark = "FLAG" if r["flagged"] else "    "
            print(f"  {mark} {r['quantity']:<{width}}  {r['max_abs_diff']:.3e}  {r['comparison']}")
        if "adjudication" in report:
            print("adjudication:")
            for k, v in report["adjudication"].items():
                print(f"  {k}: {v}")
    return EXIT_OK


def cmd_list_models(args):
    for name, desc in list_models().items():
        print(f"{name:<16} {desc}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="tdgeom", description="Time-dependent Riemannian geometry toolkit.")
    parser.add_argument("--quiet", "-q", action="store_true", help="only report errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run scenario files")
    p.add_argument("scenarios", nargs="+", help="YAML or JSON scenario files")
    p.add_argument("--output-dir", "-o", default=".", help="directory for output files (default: .)")
    p.add_argument("--jobs", "-j", type=int, default=1, help="scenarios to run in parallel")
    p.add_argument("--quiet", "-q", action="store_true", default=argparse.SUPPRESS, help="only report errors")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="closed form vs autodiff table for a model")
    p.add_argument("model")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="also write the report as JSON")
    p.add_argument("--quiet", "-q", action="store_true", default=argparse.SUPPRESS, help="only report errors")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("list-models", help="list built-in models")
    p.set_defaults(func=cmd_list_models)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s: %(message)s",
                        stream=sys.stderr, force=True)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
