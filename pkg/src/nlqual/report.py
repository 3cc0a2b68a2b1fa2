"""Operation runners and the aggregated run report.

Every runner returns a plain JSON-ready dict. ``RunReport.to_json`` is
byte-identical for equal (problem, command, arguments, seed) apart from the
``wall_time`` field.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from . import kkt as _kkt
from . import penalty as _pen
from . import proxsolve as _ps
from . import qualify as _q
from .errors import HypothesisViolated, InfeasiblePoint, NLQualError, ParseError, Unsupported
from .model import ProblemSpec
from .rational import fmt
from .subdiff import phi_bundle, term_bundle

ALL_CONDITIONS = ("nnamcq", "qn", "rcpld", "dqn", "bq", "cond13", "impl28")


def jsonable(obj):
    if isinstance(obj, Fraction):
        return fmt(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


@dataclass
class RunReport:
    command: str
    problem_hash: str
    seed: int
    arguments: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    wall_time: float = 0.0
    version: str = __version__

    def to_dict(self) -> dict:
        return jsonable(
            {
                "tool": "nlqual",
                "version": self.version,
                "command": self.command,
                "problem_hash": self.problem_hash,
                "seed": self.seed,
                "arguments": self.arguments,
                "results": self.results,
                "wall_time": self.wall_time,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def parse_ladder(text: str) -> tuple:
    """``"1e-1:1e-8"`` -> decades from 1e-1 down to 1e-8; a comma list is taken as is."""
    try:
        if ":" in text:
            hi, lo = (float(s) for s in text.split(":"))
            if not (hi > 0 and lo > 0):
                raise ValueError
            a, b = round(np.log10(hi)), round(np.log10(lo))
            step = -1 if b <= a else 1
            return tuple(10.0**k for k in range(a, b + step, step))
        vals = tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise ParseError(f"bad radius ladder {text!r}") from exc
    if not vals or any(v <= 0 for v in vals):
        raise ParseError(f"bad radius ladder {text!r}")
    return vals


def run_subdiff(P: ProblemSpec, x, term=None) -> dict:
    if term is None:
        return {"bundle": phi_bundle(P, x).to_dict()}
    if not 0 <= term < len(P.phi):
        raise ParseError(f"term index {term} out of range (problem has {len(P.phi)} terms)")
    tb = term_bundle(P.phi[term], x, P.dim)
    return {"term": term, "inner_value": tb.t, "bundle": tb.bundle.to_dict()}


def run_checks(P, x, conditions=ALL_CONDITIONS, radii=_q.DEFAULT_RADII, samples=512, delta=1e-2, probes=64, seed=42) -> dict:
    out = {}
    for name in conditions:
        if name not in _q.CONDITION_ALIASES and name not in _q.CONDITION_ALIASES.values():
            raise ParseError(f"unknown condition {name!r}; choose from {', '.join(ALL_CONDITIONS)}")
        rep = _q.run_check(P, x, name, radii, samples, delta, probes, seed)
        out[rep.condition] = rep.to_dict()
    return out


def run_kkt(P, x, multipliers: str | None = None) -> dict:
    if multipliers is not None:
        rep = _kkt.verify_kkt(P, x, _kkt.parse_multipliers(P, multipliers))
        return {"mode": "verify", "kkt": rep.to_dict()}
    rep = _kkt.find_kkt_multipliers(P, x)
    return {"mode": "search", "kkt": rep.to_dict(), "fritz_john": _kkt.fritz_john(P, x).to_dict()}


def _kappa_tables(P, x) -> dict:
    out = {}
    try:
        out["feasible_set"] = _pen.estimate_error_bound(P, x).to_dict()
    except (Unsupported, HypothesisViolated) as exc:
        out["feasible_set"] = {"error": exc.to_dict()}
    try:
        out["restricted_system"] = _pen.estimate_error_bound(_pen.build_restricted_system(P, x)).to_dict()
    except (Unsupported, HypothesisViolated) as exc:
        out["restricted_system"] = {"error": exc.to_dict()}
    return out


def run_penalize(P, x, rho="auto", norm=None, radius=0.1, samples=10_000, seed=42) -> dict:
    out = {"norm": norm or P.norm}
    if rho == "auto":
        r0 = _pen.find_rho0(P, x, radius, samples, seed, norm=norm)
        out["rho0"] = r0.to_dict()
        if r0.rho0 is not None:
            out["validation"] = {
                "at_rho0": r0.records[-1].to_dict(),
                "at_2rho0": _pen.validate_exactness(_pen.build_penalty(P, 2 * r0.rho0, norm), x, radius, samples, seed).to_dict(),
            }
    else:
        PP = _pen.build_penalty(P, rho, norm)
        out["validation"] = {"at_rho": _pen.validate_exactness(PP, x, radius, samples, seed).to_dict()}
    out["kappa"] = _kappa_tables(P, x)
    return out


def run_solve(P, rho, start=None, max_iters=5000, seed=42, norm=None) -> dict:
    out = {}
    if rho == "auto":
        if P.point is None:
            raise ParseError("--rho auto needs a reference point in the problem file")
        r0 = _pen.find_rho0(P, P.point, seed=seed, norm=norm)
        if r0.rho0 is None:
            raise HypothesisViolated("no exact penalty parameter found up to the cap")
        rho = r0.rho0
        out["rho0"] = r0.to_dict()
    cfg = _ps.SolverConfig(max_iters=max_iters, seed=seed)
    res = _ps.solve(_pen.build_penalty(P, rho, norm), start, cfg)
    out["rho"] = float(rho)
    out["solve"] = res.to_dict()
    try:
        out["kkt"] = _kkt.find_kkt_multipliers(P, [float(v) for v in res.x]).to_dict()
    except InfeasiblePoint as exc:
        out["kkt"] = {"status": "INFEASIBLE_OUTPUT", "error": exc.to_dict()}
    return out


def run_full(P, x, conditions=ALL_CONDITIONS, radii=_q.DEFAULT_RADII, samples=512, delta=1e-2, probes=64, seed=42, penalize=False, pen_samples=10_000, radius=0.1) -> dict:
    out = {
        "subdiff": run_subdiff(P, x),
        "checks": run_checks(P, x, conditions, radii, samples, delta, probes, seed),
        "kkt": run_kkt(P, x),
    }
    if penalize:
        try:
            out["penalty"] = run_penalize(P, x, "auto", None, radius, pen_samples, seed)
        except NLQualError as exc:
            out["penalty"] = {"error": exc.to_dict()}
    out["summary"] = {name: rep["verdict"] for name, rep in out["checks"].items()}
    out["summary"]["KKT"] = out["kkt"]["kkt"]["status"]
    return out


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    res = fn(*args, **kw)
    return res, time.perf_counter() - t0
