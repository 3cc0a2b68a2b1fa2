"""Regular, limiting and horizon subdifferentials of Phi and the coderivative
slice ``D*Psi(x)(0)`` for the structured function class.

Fields carry an exactness flag: EXACT, NUMERIC (an irrational derivative
rounded to a nearby rational) or OUTER_ESTIMATE (a superset obtained from
an inclusion-only calculus rule).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, PhiInfinite, Unsupported
from .model import CUSTOM, LINEAR, POW_ABS, POW_PLUS, CompositeTerm, OuterFn, ProblemSpec, exact_point
from .rational import frac, independent_subset, zeros
from .setalg.dd import cone_generators, cone_inequalities
from .setalg.polyset import Polyhedron, PolySet, minkowski_sum

EXACT = "EXACT"
NUMERIC = "NUMERIC"
OUTER_ESTIMATE = "OUTER_ESTIMATE"
_RANK = {EXACT: 0, NUMERIC: 1, OUTER_ESTIMATE: 2}
FIELDS = ("regular", "limiting", "horizon", "coderiv0")

DENOM_LIMIT = 10**12


def worst(*flags: str) -> str:
    return max(flags, key=_RANK.__getitem__, default=EXACT)


def rationalize(v) -> Fraction:
    if isinstance(v, (Fraction, int)):
        return Fraction(v)
    return Fraction(float(v)).limit_denominator(DENOM_LIMIT)


@dataclass(frozen=True)
class SubdiffBundle:
    regular: PolySet
    limiting: PolySet
    horizon: PolySet
    coderiv0: PolySet
    exactness: tuple = tuple((f, EXACT) for f in FIELDS)

    def __post_init__(self):
        object.__setattr__(self, "exactness", tuple(self.exactness))

    def flag(self, name: str) -> str:
        return dict(self.exactness)[name]

    def is_exact(self, *names: str) -> bool:
        return all(self.flag(n) == EXACT for n in (names or FIELDS))

    def field(self, name: str) -> PolySet:
        return getattr(self, name)

    def to_dict(self) -> dict:
        flags = dict(self.exactness)
        return {name: {"set": getattr(self, name).to_setspec(), "exactness": flags[name]} for name in FIELDS}


def _bundle(reg, lim, hor, cod, flags=None) -> SubdiffBundle:
    flags = flags or {}
    return SubdiffBundle(reg, lim, hor, cod, tuple((f, flags.get(f, EXACT)) for f in FIELDS))


def _reals1():
    return PolySet.whole(1)


def _nonneg1():
    return PolySet.cone(1, [(1,)])


def _pt1(v):
    return PolySet.point((v,))


def outer_table(outer: OuterFn, t) -> SubdiffBundle:
    """One-dimensional bundle of ``outer`` at ``t``."""
    t = frac(t)
    zero = PolySet.zero(1)
    if outer.kind == LINEAR:
        s = _pt1(outer.c)
        return _bundle(s, s, zero, zero)
    if outer.kind == CUSTOM:
        if not outer.in_domain(t):
            raise DomainError(f"t = {t} is outside the domain of the custom outer function")
        bp = outer.breakpoint_at(t)
        if bp is not None:
            return _bundle(bp.regular, bp.limiting, bp.horizon, bp.coderiv0)
        if (outer.lo is not None and t == outer.lo) or (outer.hi is not None and t == outer.hi):
            raise Unsupported(f"custom outer function needs a breakpoint table at the domain boundary t = {t}")
        d, exact = outer.derivative(t)
        s = _pt1(rationalize(d))
        f = EXACT if exact else NUMERIC
        return _bundle(s, s, zero, zero, {"regular": f, "limiting": f})
    p = outer.p
    if outer.kind == POW_ABS:
        if t == 0:
            if p == 1:
                seg = PolySet.of(1, [Polyhedron(((Fraction(-1),), (Fraction(1),)))])
                return _bundle(seg, seg, zero, zero)
            r = _reals1()
            return _bundle(r, r, r, r)
    elif outer.kind == POW_PLUS:
        if t < 0:
            return _bundle(_pt1(0), _pt1(0), zero, zero)
        if t == 0:
            if p == 1:
                seg = PolySet.of(1, [Polyhedron(((Fraction(0),), (Fraction(1),)))])
                return _bundle(seg, seg, zero, zero)
            # the graph turns vertical on the right, so D*(0)(0) is the whole line
            cone = _nonneg1()
            return _bundle(cone, cone, cone, _reals1(), {"limiting": OUTER_ESTIMATE, "coderiv0": OUTER_ESTIMATE})
    else:
        raise DomainError(f"unknown outer kind {outer.kind!r}")
    d, exact = outer.derivative(t)
    s = _pt1(rationalize(d))
    f = EXACT if exact else NUMERIC
    return _bundle(s, s, zero, zero, {"regular": f, "limiting": f})


def _is_smooth_at(outer: OuterFn, t: Fraction) -> bool:
    if outer.kind == LINEAR:
        return True
    if outer.kind in (POW_ABS, POW_PLUS):
        return t != 0
    return outer.breakpoint_at(t) is None


def _inner_value(term: CompositeTerm, x):
    v = term.inner.value_exact(x)
    if v is None:
        v = rationalize(term.inner([float(c) for c in x]))
        return v, False
    return v, True


@dataclass(frozen=True)
class TermBundle:
    bundle: SubdiffBundle
    t: Fraction
    smooth: bool
    row: tuple  # pullback row (affine a or inner gradient)


def term_bundle(term: CompositeTerm, x, dim: int) -> TermBundle:
    """Bundle of ``phi(omega(x))`` in R^d by pulling back the 1-D table."""
    t, t_exact = _inner_value(term, x)
    if not term.outer.in_domain(t):
        raise PhiInfinite(f"inner value {t} lies outside the outer domain")
    table = outer_table(term.outer, t)
    flags = dict(table.exactness)
    smooth = _is_smooth_at(term.outer, t)
    if term.inner.is_affine:
        row = term.inner.a
    else:
        if not term.outer.is_lipschitz_at(t):
            raise Unsupported("non-Lipschitz outer function composed with a smooth inner map at its kink")
        grad, g_exact = term.inner.gradient(x)
        row = tuple(rationalize(g) for g in grad)
        if not (g_exact and t_exact):
            flags = {k: worst(v, NUMERIC) if k in ("regular", "limiting") else v for k, v in flags.items()}
        if not smooth:
            # chain rule through a nonsmooth Lipschitz outer is an inclusion
            flags = {k: worst(v, OUTER_ESTIMATE) if k in ("regular", "limiting") else v for k, v in flags.items()}
    if all(a == 0 for a in row):
        z = PolySet.zero(dim)
        # constant term: the 1-D value only matters through its domain
        return TermBundle(_bundle(z, z, z, z), t, True, row)
    fields = {name: table.field(name).pullback_row(row) for name in FIELDS}
    return TermBundle(_bundle(*(fields[n] for n in FIELDS), flags), t, smooth, row)


def omega_normal(P: ProblemSpec, x):
    """``(regular, limiting, exactness)`` normal cones of Omega at ``x``."""
    d = P.dim
    if P.omega.is_whole:
        z = PolySet.zero(d)
        return z, z, EXACT
    if not P.omega.contains(x):
        raise PhiInfinite("point lies outside Omega")
    idx = P.omega.pieces_at(x)
    cones = [P.omega.pieces[k].normal_cone(x, d) for k in idx]
    if len(cones) == 1:
        return cones[0], cones[0], EXACT
    lim = cones[0]
    for c in cones[1:]:
        lim = lim.union(c)
    return intersect_cones(cones, d), lim, OUTER_ESTIMATE


def intersect_cones(cones, dim: int) -> PolySet:
    """Intersection of single-piece polyhedral cones, via H-form."""
    le, eq = [], []
    for c in cones:
        piece = c.pieces[0]
        a, e = cone_inequalities(piece.rays, piece.lines, dim)
        le.extend(a)
        eq.extend(e)
    rays, lines = cone_generators(le, eq, dim)
    return PolySet.cone(dim, rays, lines)


def phi_bundle(P: ProblemSpec, x) -> SubdiffBundle:
    """Bundle of ``Phi = sum_i phi_i(omega_i) + delta_Omega`` at ``x``.

    ``coderiv0`` covers the continuous part ``Psi`` only.
    """
    x = tuple(frac(v) for v in x)
    d = P.dim
    reg_n, lim_n, n_flag = omega_normal(P, x)
    terms = [term_bundle(t, x, d) for t in P.phi]

    acc = {name: PolySet.zero(d) for name in FIELDS}
    flags = {name: EXACT for name in FIELDS}
    for tb in terms:
        for name in FIELDS:
            acc[name] = minkowski_sum(acc[name], tb.bundle.field(name))
            flags[name] = worst(flags[name], tb.bundle.flag(name))

    kinks = [tb for tb in terms if not tb.smooth]
    if len(kinks) > 1 and len(independent_subset([tb.row for tb in kinks])) < len(kinks):
        for name in FIELDS:
            flags[name] = worst(flags[name], OUTER_ESTIMATE)

    if not (reg_n.is_zero and lim_n.is_zero):
        acc["regular"] = minkowski_sum(acc["regular"], reg_n)
        acc["limiting"] = minkowski_sum(acc["limiting"], lim_n)
        acc["horizon"] = minkowski_sum(acc["horizon"], lim_n)
        for name in ("limiting", "horizon"):
            flags[name] = worst(flags[name], n_flag)
        if kinks:
            # sum rule with the indicator is only an inclusion here
            for name in ("regular", "limiting", "horizon"):
                flags[name] = worst(flags[name], OUTER_ESTIMATE)
    return _bundle(acc["regular"], acc["limiting"], acc["horizon"], acc["coderiv0"], flags)


def coderiv0(P: ProblemSpec, x):
    """``(D*Psi(x)(0), exactness)`` for the continuous part of Phi."""
    x = tuple(frac(v) for v in x)
    d = P.dim
    out = PolySet.zero(d)
    flag = EXACT
    kinks = []
    for term in P.phi:
        tb = term_bundle(term, x, d)
        out = minkowski_sum(out, tb.bundle.coderiv0)
        flag = worst(flag, tb.bundle.flag("coderiv0"))
        if not tb.smooth:
            kinks.append(tb.row)
    if len(kinks) > 1 and len(independent_subset(kinks)) < len(kinks):
        flag = worst(flag, OUTER_ESTIMATE)
    return out, flag


SUPERLINEAR_M = 1e6


def superlinear_growth(outer: OuterFn, t) -> bool:
    """True iff the regular subdifferential of ``outer`` at ``t`` is all of R."""
    t = frac(t)
    if outer.kind == LINEAR:
        return False
    if outer.kind == POW_ABS:
        return t == 0 and outer.p < 1
    if outer.kind == POW_PLUS:
        return False
    if not outer.in_domain(t):
        raise DomainError(f"t = {t} is outside the domain")
    tf = float(t)
    base = float(outer(tf))
    hs = np.array([2.0**-k for k in range(1, 41)])
    with np.errstate(all="ignore"):
        up = (np.asarray(outer(tf + hs), dtype=float) - base) / hs
        down = (np.asarray(outer(tf - hs), dtype=float) - base) / hs
    ratio = np.minimum(up, down)
    tail = ratio[19:]
    return bool(np.all(np.nan_to_num(tail, nan=-np.inf) >= SUPERLINEAR_M))
