"""Problem representation, evaluation, active sets and problem-file ingestion.

A problem is ``min f(x) + Phi(x)`` subject to ``g(x) <= 0``, ``h(x) = 0``
where ``Phi(x) = sum_i phi_i(omega_i(x)) + delta_Omega(x)``. Indices in the
public :class:`ActiveSet` are 1-based; everything else is 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import expr as _expr
from .errors import DimMismatch, DomainError, EvalError, ParseError, SchemaError
from .rational import dot, frac, is_rational_vec, vec
from .setalg.polyset import PolySet, from_setspec

NORMS = ("l1", "l2", "linf")
SMOOTH_ACT_TOL = 1e-9

POW_ABS = "pow_abs"
POW_PLUS = "pow_plus"
LINEAR = "linear"
CUSTOM = "custom"


def exact_point(x) -> tuple | None:
    """``x`` as Fractions if every entry is an int or Fraction, else None."""
    if is_rational_vec(x):
        return tuple(Fraction(v) for v in x)
    return None


def _rational_pow(t: Fraction, p: Fraction) -> Fraction | None:
    """``t ** p`` for ``t >= 0`` when the result is rational."""
    if t == 0:
        return Fraction(0)
    if p.denominator == 1:
        return t ** p.numerator
    q = p.denominator
    roots = []
    for part in (t.numerator, t.denominator):
        try:
            r = math.isqrt(part) if q == 2 else round(part ** (1.0 / q))
        except OverflowError:
            return None
        hit = next((c for c in (r - 1, r, r + 1) if c >= 0 and c**q == part), None)
        if hit is None:
            return None
        roots.append(hit)
    return Fraction(roots[0], roots[1]) ** p.numerator


@dataclass(frozen=True)
class Breakpoint:
    t: Fraction
    regular: PolySet
    limiting: PolySet
    horizon: PolySet
    coderiv0: PolySet


@dataclass(frozen=True, eq=False)
class OuterFn:
    """Scalar outer function ``phi``."""

    kind: str
    p: Fraction | None = None
    c: Fraction | None = None
    value_expr: Any = None
    deriv_expr: Any = None
    lo: Fraction | None = None
    hi: Fraction | None = None
    breakpoints: tuple = ()

    @staticmethod
    def pow_abs(p) -> "OuterFn":
        return OuterFn(POW_ABS, p=frac(p))

    @staticmethod
    def sqrt_abs() -> "OuterFn":
        return OuterFn(POW_ABS, p=Fraction(1, 2))

    @staticmethod
    def pow_plus(p) -> "OuterFn":
        return OuterFn(POW_PLUS, p=frac(p))

    @staticmethod
    def linear(c) -> "OuterFn":
        return OuterFn(LINEAR, c=frac(c))

    def in_domain(self, t) -> bool:
        if self.kind != CUSTOM:
            return True
        if self.lo is not None and t < self.lo:
            return False
        if self.hi is not None and t > self.hi:
            return False
        return True

    def breakpoint_at(self, t) -> Breakpoint | None:
        return next((b for b in self.breakpoints if b.t == t), None)

    def value_exact(self, t: Fraction) -> Fraction | None:
        """Exact value, or None when irrational (``inf`` raises DomainError)."""
        if self.kind == POW_ABS:
            return _rational_pow(abs(t), self.p)
        if self.kind == POW_PLUS:
            return _rational_pow(max(t, Fraction(0)), self.p)
        if self.kind == LINEAR:
            return self.c * t
        if not self.in_domain(t):
            raise DomainError(f"t = {t} outside the domain of the custom outer function")
        try:
            return self.value_expr.exact([t])
        except _expr.Inexact:
            return None

    def __call__(self, t):
        """Float value, vectorized; ``inf`` outside a custom domain."""
        t = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            if self.kind == POW_ABS:
                out = np.abs(t) ** float(self.p)
            elif self.kind == POW_PLUS:
                out = np.maximum(t, 0.0) ** float(self.p)
            elif self.kind == LINEAR:
                out = float(self.c) * t
            else:
                out = np.asarray(self.value_expr(t[..., None] if t.ndim else [float(t)]), dtype=float)
                mask = np.zeros(t.shape, dtype=bool)
                if self.lo is not None:
                    mask |= t < float(self.lo)
                if self.hi is not None:
                    mask |= t > float(self.hi)
                out = np.where(mask, np.inf, out)
        return out if out.ndim else float(out)

    def derivative(self, t: Fraction):
        """Derivative at a point of differentiability: ``(value, exact)``."""
        if self.kind == LINEAR:
            return self.c, True
        if self.kind == CUSTOM:
            if self.deriv_expr is None:
                raise SchemaError("custom outer function needs a derivative expression")
            try:
                return self.deriv_expr.exact([t]), True
            except _expr.Inexact:
                return self.deriv_expr([float(t)]), False
        if t == 0:
            raise DomainError("derivative requested at the kink t = 0")
        p = self.p
        if self.kind == POW_PLUS and t < 0:
            return Fraction(0), True
        mag = _rational_pow(abs(t), p - 1) if abs(t) != 0 else None
        sign = 1 if t > 0 else -1
        if mag is not None:
            return sign * p * mag, True
        return sign * float(p) * abs(float(t)) ** float(p - 1), False

    def is_lipschitz_at(self, t: Fraction) -> bool:
        if self.kind == LINEAR:
            return True
        if self.kind in (POW_ABS, POW_PLUS):
            return t != 0 or self.p == 1
        bp = self.breakpoint_at(t)
        return bp is None or bp.horizon.is_zero

    def to_dict(self) -> dict:
        if self.kind in (POW_ABS, POW_PLUS):
            return {"kind": self.kind, "p": str(self.p)}
        if self.kind == LINEAR:
            return {"kind": LINEAR, "c": str(self.c)}
        out = {"kind": CUSTOM, "value": self.value_expr.text}
        if self.deriv_expr is not None:
            out["derivative"] = self.deriv_expr.text
        out["domain"] = [None if self.lo is None else str(self.lo), None if self.hi is None else str(self.hi)]
        out["breakpoints"] = [
            {
                "t": str(b.t),
                "regular": b.regular.to_setspec(),
                "limiting": b.limiting.to_setspec(),
                "horizon": b.horizon.to_setspec(),
                "coderiv0": b.coderiv0.to_setspec(),
            }
            for b in self.breakpoints
        ]
        return out


@dataclass(frozen=True, eq=False)
class InnerFn:
    """Inner map ``omega``: AFFINE ``a.x + b`` or SMOOTH expression."""

    kind: str
    a: tuple = ()
    b: Fraction = Fraction(0)
    expr: Any = None

    @property
    def is_affine(self) -> bool:
        return self.kind == "affine"

    def value_exact(self, x) -> Fraction | None:
        if self.is_affine:
            return dot(self.a, x) + self.b
        try:
            return self.expr.exact(x)
        except _expr.Inexact:
            return None

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if self.is_affine:
            return X @ np.array([float(v) for v in self.a]) + float(self.b)
        return self.expr(X)

    def gradient(self, x):
        if self.is_affine:
            return self.a, True
        return self.expr.gradient(x)

    def to_dict(self) -> dict:
        if self.is_affine:
            return {"kind": "affine", "a": [str(v) for v in self.a], "b": str(self.b)}
        return {"kind": "smooth", "expr": self.expr.text}


@dataclass(frozen=True)
class CompositeTerm:
    outer: OuterFn
    inner: InnerFn


@dataclass(frozen=True, eq=False)
class ConstraintFn:
    """``g_i`` or ``h_j``: AFFINE ``a.x + b`` or SMOOTH expression."""

    kind: str
    a: tuple = ()
    b: Fraction = Fraction(0)
    expr: Any = None

    @property
    def is_affine(self) -> bool:
        return self.kind == "affine"

    def value(self, x):
        """``(value, exact)`` at a point."""
        ex = exact_point(x)
        if self.is_affine:
            if ex is not None:
                return dot(self.a, ex) + self.b, True
            return float(np.dot([float(v) for v in self.a], np.asarray(x, dtype=float)) + float(self.b)), False
        if ex is not None:
            try:
                return self.expr.exact(ex), True
            except _expr.Inexact:
                pass
        return self.expr([float(v) for v in x]), False

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if self.is_affine:
            return X @ np.array([float(v) for v in self.a]) + float(self.b)
        return self.expr(X)

    def gradient(self, x):
        """``(gradient, exact)``; exact for affine data and kink-free expressions."""
        if self.is_affine:
            return self.a, True
        ex = exact_point(x)
        if ex is not None:
            return self.expr.gradient(ex)
        return tuple(float(v) for v in self.expr.grad_fd([float(v) for v in x])), False

    def negated(self) -> "ConstraintFn":
        if self.is_affine:
            return ConstraintFn("affine", tuple(-v for v in self.a), -self.b)
        return ConstraintFn("smooth", expr=_expr.Expr(f"-({self.expr.text})", self.expr.variables))

    def scaled(self, s) -> "ConstraintFn":
        s = frac(s)
        if self.is_affine:
            return ConstraintFn("affine", tuple(s * v for v in self.a), s * self.b)
        return ConstraintFn("smooth", expr=_expr.Expr(f"({s})*({self.expr.text})", self.expr.variables))

    def to_dict(self) -> dict:
        if self.is_affine:
            return {"kind": "affine", "a": [str(v) for v in self.a], "b": str(self.b)}
        return {"kind": "smooth", "expr": self.expr.text}


@dataclass(frozen=True)
class HPiece:
    """Convex polyhedron ``{x : A x <= b}``."""

    A: tuple
    b: tuple

    def residual_exact(self, x) -> Fraction:
        return max((dot(r, x) - bi for r, bi in zip(self.A, self.b)), default=Fraction(0))

    def residuals(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if not self.A:
            return np.zeros(X.shape[:-1])
        A = np.array([[float(v) for v in r] for r in self.A])
        b = np.array([float(v) for v in self.b])
        return np.max(X @ A.T - b, axis=-1)

    def active_rows(self, x, tol=SMOOTH_ACT_TOL) -> list[int]:
        ex = exact_point(x)
        if ex is not None:
            return [k for k, (r, bi) in enumerate(zip(self.A, self.b)) if dot(r, ex) == bi]
        xf = np.asarray(x, dtype=float)
        return [k for k, (r, bi) in enumerate(zip(self.A, self.b)) if abs(float(np.dot([float(v) for v in r], xf) - float(bi))) <= tol]

    def normal_cone(self, x, dim: int) -> PolySet:
        rows = [self.A[k] for k in self.active_rows(x)]
        return PolySet.cone(dim, rows)

    def float_data(self):
        d = len(self.A[0]) if self.A else 0
        return (
            np.array([[float(v) for v in r] for r in self.A]).reshape(len(self.A), d),
            np.array([float(v) for v in self.b]),
        )


@dataclass(frozen=True)
class AbstractSet:
    """Omega: WHOLE (no pieces), a polyhedron (one piece) or a union."""

    kind: str = "whole"
    pieces: tuple = ()

    @property
    def is_whole(self) -> bool:
        return self.kind == "whole"

    def residual(self, x):
        """Smallest per-piece max violation; exact at rational points."""
        if self.is_whole:
            return Fraction(0)
        ex = exact_point(x)
        if ex is not None:
            return max(Fraction(0), min(p.residual_exact(ex) for p in self.pieces))
        return max(0.0, min(float(p.residuals(np.asarray(x, dtype=float))) for p in self.pieces))

    def member_mask(self, X, tol=1e-12) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.is_whole:
            return np.ones(X.shape[0], dtype=bool)
        m = np.zeros(X.shape[0], dtype=bool)
        for p in self.pieces:
            m |= p.residuals(X) <= tol
        return m

    def contains(self, x) -> bool:
        r = self.residual(x)
        return r == 0 if isinstance(r, Fraction) else r <= 1e-9

    def pieces_at(self, x) -> list[int]:
        """Indices of pieces that contain ``x``."""
        ex = exact_point(x)
        if ex is not None:
            return [k for k, p in enumerate(self.pieces) if p.residual_exact(ex) <= 0]
        xf = np.asarray(x, dtype=float)
        return [k for k, p in enumerate(self.pieces) if float(p.residuals(xf)) <= 1e-9]

    def to_dict(self) -> dict:
        if self.is_whole:
            return {"kind": "whole"}

        def piece(p):
            return {"kind": "polyhedron", "A": [[str(v) for v in r] for r in p.A], "b": [str(v) for v in p.b]}

        if self.kind == "polyhedron":
            return piece(self.pieces[0])
        return {"kind": "union", "pieces": [piece(p) for p in self.pieces]}


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    dim: int
    smooth: Any = None  # Expr or None for f = 0
    phi: tuple = ()
    omega: AbstractSet = field(default_factory=AbstractSet)
    ineq: tuple = ()
    eq: tuple = ()
    norm: str = "l1"
    name: str = ""
    point: tuple | None = None

    @property
    def n(self) -> int:
        return len(self.ineq)

    @property
    def m(self) -> int:
        return len(self.eq)

    @property
    def constraints_affine(self) -> bool:
        return all(c.is_affine for c in self.ineq + self.eq)

    @cached_property
    def source_hash(self) -> str:
        import hashlib

        blob = json.dumps(problem_to_dict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    # -- scalar evaluation --------------------------------------------

    def _check(self, x):
        if len(x) != self.dim:
            raise DimMismatch(f"point has length {len(x)}, problem dimension is {self.dim}")

    def f_value(self, x):
        self._check(x)
        if self.smooth is None:
            return Fraction(0) if exact_point(x) is not None else 0.0
        ex = exact_point(x)
        if ex is not None:
            try:
                return self.smooth.exact(ex)
            except _expr.Inexact:
                pass
        return self.smooth([float(v) for v in x])

    def f_gradient(self, x):
        """``(gradient, exact)``."""
        self._check(x)
        if self.smooth is None:
            return tuple(Fraction(0) for _ in range(self.dim)), True
        ex = exact_point(x)
        if ex is not None:
            return self.smooth.gradient(ex)
        return tuple(float(v) for v in self.smooth.grad_fd([float(v) for v in x])), False

    def psi_value(self, x) -> float:
        """Float value of the continuous part ``sum_i phi_i(omega_i(x))``."""
        self._check(x)
        xf = np.asarray([float(v) for v in x])
        total = 0.0
        for term in self.phi:
            total += float(term.outer(term.inner(xf)))
        return total

    def g_values(self, x):
        self._check(x)
        return [c.value(x)[0] for c in self.ineq]

    def h_values(self, x):
        self._check(x)
        return [c.value(x)[0] for c in self.eq]

    # -- batch evaluation ---------------------------------------------

    def batch_f(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.smooth is None:
            return np.zeros(X.shape[0])
        return self.smooth(X)

    def batch_psi(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        total = np.zeros(X.shape[0])
        for term in self.phi:
            total = total + term.outer(term.inner(X))
        return total

    def batch_phi(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = self.batch_psi(X)
        if not self.omega.is_whole:
            out = np.where(self.omega.member_mask(X), out, np.inf)
        return out

    def batch_g(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([c(X) for c in self.ineq], axis=1) if self.ineq else np.zeros((X.shape[0], 0))

    def batch_h(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([c(X) for c in self.eq], axis=1) if self.eq else np.zeros((X.shape[0], 0))


@dataclass(frozen=True)
class ActiveSet:
    """Active inequality indices, 1-based as in the problem statement."""

    indices: frozenset

    @property
    def zero_based(self) -> list[int]:
        return sorted(i - 1 for i in self.indices)

    def __contains__(self, i):
        return i in self.indices

    def __len__(self):
        return len(self.indices)


def active_inequalities(P: ProblemSpec, x) -> ActiveSet:
    """``{i : |g_i(x)| <= act_tol}``; act_tol is 0 on exact evaluations, 1e-9 otherwise."""
    P._check(x)
    out = set()
    for i, c in enumerate(P.ineq):
        try:
            v, exact = c.value(x)
        except (ZeroDivisionError, ValueError) as exc:
            raise EvalError(f"cannot evaluate g_{i + 1}: {exc}") from exc
        if (v == 0) if exact else (abs(v) <= SMOOTH_ACT_TOL):
            out.add(i + 1)
    return ActiveSet(frozenset(out))


def active_index(P: ProblemSpec, x) -> list[int]:
    """0-based active inequality indices."""
    return active_inequalities(P, x).zero_based


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    max_residual: Any
    g_plus: tuple
    h_abs: tuple
    omega: Any

    def to_dict(self) -> dict:
        def s(v):
            return str(v) if isinstance(v, Fraction) else float(v)

        return {
            "feasible": self.feasible,
            "max_residual": s(self.max_residual),
            "g_plus": [s(v) for v in self.g_plus],
            "h_abs": [s(v) for v in self.h_abs],
            "omega": s(self.omega),
        }


def check_feasible(P: ProblemSpec, x, tol=0) -> FeasibilityReport:
    P._check(x)
    gp = tuple(max(v, 0 * v) for v in P.g_values(x))
    ha = tuple(abs(v) for v in P.h_values(x))
    om = P.omega.residual(x)
    worst = max((*gp, *ha, om), key=float)
    if isinstance(worst, Fraction) and not isinstance(tol, float):
        ok = worst <= frac(tol)
    else:
        ok = float(worst) <= float(tol)
    return FeasibilityReport(bool(ok), worst, gp, ha, om)


def require_feasible(P: ProblemSpec, x, tol=1e-9):
    """Raise PRECONDITION_VIOLATED unless ``x`` is feasible (exact when possible)."""
    from .errors import InfeasiblePoint

    exact = exact_point(x) is not None and P.constraints_affine
    rep = check_feasible(P, x, 0 if exact else tol)
    if not rep.feasible:
        raise InfeasiblePoint("point is not feasible", residuals=rep.to_dict())
    return rep


# -- problem files -------------------------------------------------------

_TOP_KEYS = {"dim", "smooth", "phi", "ineq", "eq", "omega", "norm", "name", "point", "description"}


def _rat(value, what):
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise SchemaError(f"{what}: expected a rational string, got {value!r}")
    try:
        return frac(value)
    except ParseError as exc:
        raise SchemaError(f"{what}: {exc}") from exc


def _ratvec(values, what, dim=None):
    if not isinstance(values, list):
        raise SchemaError(f"{what}: expected a list")
    out = tuple(_rat(v, what) for v in values)
    if dim is not None and len(out) != dim:
        raise DimMismatch(f"{what}: length {len(out)}, expected {dim}")
    return out


def _need(obj, key, what):
    if not isinstance(obj, dict):
        raise SchemaError(f"{what}: expected an object")
    if key not in obj:
        raise SchemaError(f"{what}: missing field {key!r}")
    return obj[key]


def _parse_expr(text, dim, what):
    if not isinstance(text, str):
        raise SchemaError(f"{what}: expression must be a string")
    return _expr.parse(text, dim)


def _load_outer(spec, what) -> OuterFn:
    kind = _need(spec, "kind", what)
    if kind in ("sqrt_abs", "sqrt"):
        return OuterFn.sqrt_abs()
    if kind in (POW_ABS, POW_PLUS):
        p = _rat(_need(spec, "p", what), f"{what}.p")
        if not (0 < p <= 1):
            raise SchemaError(f"{what}.p = {p} is outside (0, 1]")
        return OuterFn(kind, p=p)
    if kind == LINEAR:
        return OuterFn.linear(_rat(_need(spec, "c", what), f"{what}.c"))
    if kind == CUSTOM:
        value = _expr.parse_t(_need(spec, "value", what))
        deriv = _expr.parse_t(spec["derivative"]) if spec.get("derivative") is not None else None
        dom = spec.get("domain", [None, None])
        if not isinstance(dom, list) or len(dom) != 2:
            raise SchemaError(f"{what}.domain must be [lo, hi] with null for unbounded")
        lo = None if dom[0] is None else _rat(dom[0], f"{what}.domain")
        hi = None if dom[1] is None else _rat(dom[1], f"{what}.domain")
        bps = []
        for k, bp in enumerate(spec.get("breakpoints", [])):
            w = f"{what}.breakpoints[{k}]"
            t = _rat(_need(bp, "t", w), f"{w}.t")
            sets = {}
            for name in ("regular", "limiting", "horizon", "coderiv0"):
                sets[name] = from_setspec(_need(bp, name, w), 1)
            for name in ("horizon", "coderiv0"):
                if not sets[name].is_cone:
                    raise SchemaError(f"{w}.{name} must be a cone")
            bps.append(Breakpoint(t, **sets))
        return OuterFn(CUSTOM, value_expr=value, deriv_expr=deriv, lo=lo, hi=hi, breakpoints=tuple(bps))
    raise SchemaError(f"{what}: unknown outer kind {kind!r}")


def _load_inner(spec, dim, what) -> InnerFn:
    kind = _need(spec, "kind", what)
    if kind == "affine":
        a = _ratvec(_need(spec, "a", what), f"{what}.a", dim)
        b = _rat(spec.get("b", "0"), f"{what}.b")
        return InnerFn("affine", a, b)
    if kind == "smooth":
        return InnerFn("smooth", expr=_parse_expr(_need(spec, "expr", what), dim, what))
    raise SchemaError(f"{what}: unknown inner kind {kind!r}")


def _load_constraint(spec, dim, what, equality) -> ConstraintFn:
    kind = _need(spec, "kind", what)
    sense = spec.get("sense", "=" if equality else "<=")
    if equality and sense != "=":
        raise SchemaError(f"{what}: equality constraints must have sense '='")
    if not equality and sense not in ("<=", ">="):
        raise SchemaError(f"{what}: inequality sense must be '<=' or '>='")
    if kind == "affine":
        c = ConstraintFn("affine", _ratvec(_need(spec, "a", what), f"{what}.a", dim), _rat(spec.get("b", "0"), f"{what}.b"))
    elif kind == "smooth":
        c = ConstraintFn("smooth", expr=_parse_expr(_need(spec, "expr", what), dim, what))
    else:
        raise SchemaError(f"{what}: unknown constraint kind {kind!r}")
    return c.negated() if sense == ">=" else c


def _load_piece(spec, dim, what) -> HPiece:
    A = _need(spec, "A", what)
    b = _need(spec, "b", what)
    if not isinstance(A, list) or not isinstance(b, list) or len(A) != len(b):
        raise SchemaError(f"{what}: A and b must be lists of equal length")
    return HPiece(tuple(_ratvec(r, f"{what}.A", dim) for r in A), tuple(_rat(v, f"{what}.b") for v in b))


def _load_omega(spec, dim) -> AbstractSet:
    kind = _need(spec, "kind", "omega")
    if kind == "whole":
        return AbstractSet()
    if kind == "polyhedron":
        return AbstractSet("polyhedron", (_load_piece(spec, dim, "omega"),))
    if kind == "union":
        pieces = _need(spec, "pieces", "omega")
        if not isinstance(pieces, list) or not pieces:
            raise SchemaError("omega.pieces must be a nonempty list")
        return AbstractSet("union", tuple(_load_piece(p, dim, f"omega.pieces[{k}]") for k, p in enumerate(pieces)))
    raise SchemaError(f"omega: unknown kind {kind!r}")


def load_problem_dict(doc: dict) -> ProblemSpec:
    if not isinstance(doc, dict):
        raise SchemaError("problem must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise SchemaError(f"unknown top-level fields: {sorted(unknown)}")
    dim = _need(doc, "dim", "problem")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SchemaError("dim must be a positive integer")
    smooth_txt = doc.get("smooth", "0")
    smooth = None
    if str(smooth_txt).strip() not in ("0", ""):
        smooth = _parse_expr(smooth_txt, dim, "smooth")
    phi = []
    for k, t in enumerate(doc.get("phi", [])):
        w = f"phi[{k}]"
        phi.append(CompositeTerm(_load_outer(_need(t, "outer", w), f"{w}.outer"), _load_inner(_need(t, "inner", w), dim, f"{w}.inner")))
    ineq = tuple(_load_constraint(c, dim, f"ineq[{k}]", False) for k, c in enumerate(doc.get("ineq", [])))
    eq = tuple(_load_constraint(c, dim, f"eq[{k}]", True) for k, c in enumerate(doc.get("eq", [])))
    omega = _load_omega(doc.get("omega", {"kind": "whole"}), dim)
    norm = doc.get("norm", "l1")
    if norm not in NORMS:
        raise SchemaError(f"norm must be one of {NORMS}")
    point = None
    if doc.get("point") is not None:
        point = _ratvec(doc["point"], "point", dim)
    return ProblemSpec(dim, smooth, tuple(phi), omega, ineq, eq, norm, str(doc.get("name", "")), point)


def load_problem(path) -> ProblemSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return load_problem_dict(doc)


def problem_to_dict(P: ProblemSpec) -> dict:
    out = {
        "dim": P.dim,
        "smooth": P.smooth.text if P.smooth is not None else "0",
        "phi": [{"outer": t.outer.to_dict(), "inner": t.inner.to_dict()} for t in P.phi],
        "ineq": [c.to_dict() for c in P.ineq],
        "eq": [c.to_dict() for c in P.eq],
        "omega": P.omega.to_dict(),
        "norm": P.norm,
    }
    if P.name:
        out["name"] = P.name
    if P.point is not None:
        out["point"] = [str(v) for v in P.point]
    return out
