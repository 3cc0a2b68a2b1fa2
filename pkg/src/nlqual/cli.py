"""``nlqual`` command line.

Exit codes: 2 for unreadable or malformed input, 3 for precondition and
evaluation failures, 0 otherwise. A condition that fails is a result, not
an error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__, instances
from . import report as R
from .errors import INPUT_ERRORS, NLQualError, ParseError
from .model import load_problem, load_problem_dict
from .rational import parse_point

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION = 0, 2, 3

BUILTIN = {
    **{name: (lambda n=name: instances.example_dict(n)) for name in instances.EXAMPLES},
    "bridge_union": instances.bridge_union_dict,
    "square_canary": instances.square_canary_dict,
    "prox_line": instances.prox_line_dict,
    "sqrt_ray": instances.sqrt_ray_dict,
    "linear_eq": instances.linear_eq_dict,
}


def resolve_problem(ref: str):
    """A path to a problem JSON file, or the name of a bundled instance."""
    if not Path(ref).exists() and ref in BUILTIN:
        return load_problem_dict(BUILTIN[ref]())
    return load_problem(ref)


def _point(P, text):
    if text is None:
        if P.point is None:
            raise ParseError("no --point given and the problem has no reference point")
        return P.point
    x = parse_point(text)
    return x


def _rho(text):
    if text == "auto":
        return "auto"
    try:
        v = float(text)
    except ValueError as exc:
        raise ParseError(f"bad --rho {text!r}") from exc
    if not v > 0:
        raise ParseError("--rho must be positive")
    return v


def _common(p: argparse.ArgumentParser, point=True):
    p.add_argument("problem", help="problem JSON file or bundled instance name")
    if point:
        p.add_argument("--point", help="comma separated rationals; defaults to the problem's reference point")


def _check_flags(p):
    p.add_argument("--conditions", default=",".join(R.ALL_CONDITIONS))
    p.add_argument("--radius-ladder", default="1e-1:1e-8")
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--delta", type=float, default=1e-2)
    p.add_argument("--probes", type=int, default=64)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="nlqual", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=f"nlqual {__version__}")
    glob = argparse.ArgumentParser(add_help=False)
    glob.add_argument("--seed", type=int, default=42)
    glob.add_argument("--out", help="write the JSON report here")
    glob.add_argument("--json", action="store_true", help="print the full JSON report to stdout")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("subdiff", parents=[glob], help="subdifferential bundle at a point")
    _common(p)
    p.add_argument("--term", type=int)

    p = sub.add_parser("check", parents=[glob], help="qualification conditions")
    _common(p)
    _check_flags(p)

    p = sub.add_parser("kkt", parents=[glob], help="verify or search KKT multipliers")
    _common(p)
    p.add_argument("--multipliers", help="lambda_1..lambda_n,mu_1..mu_m")

    p = sub.add_parser("penalize", parents=[glob], help="exact penalty parameter and validation")
    _common(p)
    p.add_argument("--rho", default="auto")
    p.add_argument("--norm", choices=("l1", "l2", "linf"))
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=10_000)

    p = sub.add_parser("solve", parents=[glob], help="proximal gradient on the penalized problem")
    _common(p, point=False)
    p.add_argument("--rho", default="auto")
    p.add_argument("--norm", choices=("l1", "l2", "linf"))
    p.add_argument("--start", default="auto", help="comma separated start point or 'auto'")
    p.add_argument("--max-iters", type=int, default=5000)

    p = sub.add_parser("report", parents=[glob], help="full pipeline in one report")
    _common(p)
    _check_flags(p)
    p.add_argument("--penalize", action="store_true", help="also search and validate rho0")
    p.add_argument("--pen-samples", type=int, default=10_000)
    p.add_argument("--radius", type=float, default=0.1)
    return top


def _dispatch(args, P):
    c = args.command
    if c == "subdiff":
        x = _point(P, args.point)
        return {"point": list(x)}, R.run_subdiff(P, x, args.term)
    if c in ("check", "report"):
        x = _point(P, args.point)
        conds = tuple(s.strip() for s in args.conditions.split(",") if s.strip())
        radii = R.parse_ladder(args.radius_ladder)
        argd = {"point": list(x), "conditions": list(conds), "radii": list(radii), "samples": args.samples, "delta": args.delta, "probes": args.probes}
        if c == "check":
            return argd, R.run_checks(P, x, conds, radii, args.samples, args.delta, args.probes, args.seed)
        argd.update(penalize=args.penalize, pen_samples=args.pen_samples, radius=args.radius)
        return argd, R.run_full(P, x, conds, radii, args.samples, args.delta, args.probes, args.seed, args.penalize, args.pen_samples, args.radius)
    if c == "kkt":
        x = _point(P, args.point)
        return {"point": list(x), "multipliers": args.multipliers}, R.run_kkt(P, x, args.multipliers)
    if c == "penalize":
        x = _point(P, args.point)
        rho = _rho(args.rho)
        argd = {"point": list(x), "rho": rho, "norm": args.norm, "radius": args.radius, "samples": args.samples}
        return argd, R.run_penalize(P, x, rho, args.norm, args.radius, args.samples, args.seed)
    if c == "solve":
        rho = _rho(args.rho)
        start = None if args.start == "auto" else [float(v) for v in parse_point(args.start)]
        if start is not None and len(start) != P.dim:
            raise ParseError(f"start has length {len(start)}, problem dimension is {P.dim}")
        argd = {"rho": rho, "start": args.start, "max_iters": args.max_iters, "norm": args.norm}
        return argd, R.run_solve(P, rho, start, args.max_iters, args.seed, args.norm)
    raise ParseError(f"unknown command {c}")


def _summary(command, results) -> str:
    if command == "check":
        return "\n".join(f"{k:15s} {v['verdict']}" for k, v in results.items())
    if command == "report":
        return "\n".join(f"{k:15s} {v}" for k, v in results["summary"].items())
    if command == "kkt":
        k = results["kkt"]
        return f"KKT {k['status']} multipliers={json.dumps(R.jsonable(k['multipliers']))} residual={k['residual']}"
    if command == "solve":
        s = results["solve"]
        return f"{s['status']} objective={s['objective']:.12g} x={s['x']} KKT={results['kkt']['status']}"
    if command == "penalize":
        r0 = results.get("rho0")
        head = f"rho0={r0['rho0']} ({r0['status']})" if r0 else "fixed rho"
        val = ", ".join(f"{k}: {'pass' if v['passed'] else 'fail'}" for k, v in results.get("validation", {}).items())
        return f"{head}; {val}"
    return json.dumps(R.jsonable(results), sort_keys=True, indent=2)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        P = resolve_problem(args.problem)
        argd, results = _dispatch(args, P)
    except NLQualError as exc:
        print(json.dumps({"error": exc.to_dict()}, sort_keys=True, default=str), file=sys.stderr)
        return EXIT_INPUT if isinstance(exc, INPUT_ERRORS) else EXIT_PRECONDITION
    rep = R.RunReport(args.command, P.source_hash, args.seed, argd, results, round(time.perf_counter() - t0, 6))
    text = rep.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text if args.json else _summary(args.command, rep.to_dict()["results"]))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
