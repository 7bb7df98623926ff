"""germdeform command line: analyze | family | dis | fiber | classify | check.

JSON goes to standard output, tagged progress lines to standard error.
"""
import argparse
import logging
import sys

from logic.checks import format_table, run_checks
from logic.classify import DeformationPath, integrate_path, verify_pullback
from logic.config import DEFAULTS, cli_log_level, get_logger, set_level
from logic.errors import GermDeformError, InputError
from logic.family import build_family, fiber_classification
from logic.germ import germ_from_json
from logic.io_json import dumps, load, parse_complex, parse_vector

logger = get_logger(__name__)

COMMANDS = ("analyze", "family", "dis", "fiber", "classify", "check")


def parse_args(argv=None):
    parser = argparse.ArgumentParser(prog="germdeform",
                                     description="Deformations of plane-curve germs and their classifying maps.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("file", nargs="?", help="input JSON (not needed for check)")
    parser.add_argument("--order", type=int, help="truncation order N of the series arithmetic")
    parser.add_argument("--nodes", type=int, help="contour nodes M, a power of two")
    parser.add_argument("--steps", type=int, help="RK4 steps for classify")
    parser.add_argument("--seed", type=int, help="seed for random directions and sampling")
    parser.add_argument("--residual-tol", type=float, help="on-curve residual certificate for classify")
    parser.add_argument("--only", action="append", help="run only the named check (repeatable)")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser.parse_args(argv)


def _settings(args, job=None):
    job = job or {}
    settings = DEFAULTS.with_overrides(order=job.get("order"), nodes=job.get("nodes"), steps=job.get("steps"))
    return settings.with_overrides(order=args.order, nodes=args.nodes, steps=args.steps, seed=args.seed,
                                   residual_tol=args.residual_tol)


def _read(args):
    if not args.file:
        raise InputError(f"{args.command} needs an input file")
    obj = load(args.file)
    if not isinstance(obj, dict):
        raise InputError("the input file must hold a JSON object")
    return obj


def _germ(obj):
    return germ_from_json(obj.get("germ", obj))


def cmd_analyze(args):
    obj = _read(args)
    settings = _settings(args, obj)
    fam = build_family(_germ(obj), settings)
    summary = fam.to_json()
    return {key: summary[key] for key in ("d", "r", "basis", "dual_certificate", "divisor_orders", "delta1",
                                          "delta2", "x_scale", "notes", "seed")}


def cmd_family(args):
    obj = _read(args)
    return build_family(_germ(obj), _settings(args, obj)).to_json()


def _point(obj, fam):
    if "t" not in obj:
        return [0j] * fam.r
    return parse_vector(obj["t"])


def cmd_fiber(args):
    """FiberReport at t (default 0) with the basis that fixes the dis coordinates."""
    obj = _read(args)
    settings = _settings(args, obj)
    fam = build_family(_germ(obj), settings)
    report = fiber_classification(fam, _point(obj, fam)).to_json()
    report["basis"] = fam.basis_names
    report["seed"] = settings.seed
    return report


cmd_dis = cmd_fiber


def _path_terms(rows):
    if not isinstance(rows, list) or not rows:
        raise InputError("F_terms must be a non-empty list of [a, b, k, re, im]")
    out = []
    for row in rows:
        if not isinstance(row, list) or len(row) not in (4, 5):
            raise InputError(f"bad F_terms entry {row!r}")
        if any(isinstance(e, bool) or not isinstance(e, int) for e in row[:3]):
            raise InputError(f"exponents in F_terms must be integers, got {row!r}")
        value = parse_complex(row[3:5] if len(row) == 5 else row[3])
        out.append((row[0], row[1], row[2], value))
    return out


def cmd_classify(args):
    obj = _read(args)
    settings = _settings(args, obj)
    if "germ" not in obj:
        raise InputError("classify input needs a 'germ' object")
    s_max = obj.get("s_max", 1.0)
    if isinstance(s_max, bool) or not isinstance(s_max, (int, float)) or not s_max > 0:
        raise InputError(f"s_max must be a positive number, got {s_max!r}")
    terms = _path_terms(obj.get("F_terms"))
    fam = build_family(_germ(obj), settings)
    path = DeformationPath.from_terms(terms, fam.germ, s_max=float(s_max), label="F_terms")
    result = integrate_path(path, fam, settings=settings)
    out = result.to_json()
    out["verify"] = verify_pullback(path, result, fam, settings).to_json()
    out["seed"] = settings.seed
    return out


def cmd_check(args):
    settings = _settings(args)
    results = run_checks(settings, set(args.only) if args.only else None)
    logger.info("\n" + format_table(results))
    return {"checks": [r.to_json() for r in results], "passed": all(r.passed for r in results),
            "seed": settings.seed}


HANDLERS = {
    "analyze": cmd_analyze,
    "family": cmd_family,
    "dis": cmd_dis,
    "fiber": cmd_fiber,
    "classify": cmd_classify,
    "check": cmd_check,
}


def main(argv=None):
    args = parse_args(argv)
    set_level(logging.DEBUG if args.verbose else cli_log_level)
    try:
        out = HANDLERS[args.command](args)
    except GermDeformError as e:
        logger.error(f"{e.code}: {e.message}")
        print(dumps(e.to_json()))
        return 2
    print(dumps(out))
    if args.command == "check" and not out["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
