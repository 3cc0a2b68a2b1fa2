"""KKT verification, multiplier search and the Fritz John alternative.

The stationarity set is ``grad f + lim dPhi(x) + sum lam_i grad g_i +
sum mu_j grad h_j``. At rational points with exact data the inclusion
``0 in S`` is decided by an exact LP; otherwise a float residual (distance
from 0 to S) is compared against ``RESIDUAL_TOL``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DimMismatch
from .model import ProblemSpec, active_index, exact_point, require_feasible
from .rational import fmt, frac
from .setalg import lp as _lp
from .setalg.polyset import PolySet, contains, contains_zero, minkowski_sum, verify_membership
from .setalg.project import project
from .subdiff import EXACT, OUTER_ESTIMATE, phi_bundle, rationalize, worst

VERIFIED = "VERIFIED"
NOT_VERIFIED = "NOT_VERIFIED"
FOUND = "FOUND"
NOT_FOUND = "NOT_FOUND"
UNKNOWN = "UNKNOWN"

RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class Multipliers:
    lam: tuple
    mu: tuple

    def to_dict(self) -> dict:
        return {"lambda": [_s(v) for v in self.lam], "mu": [_s(v) for v in self.mu]}


def _s(v):
    return fmt(v) if isinstance(v, (Fraction, int)) else float(v)


@dataclass(frozen=True)
class KKTReport:
    status: str
    multipliers: Multipliers | None = None
    residual: float = 0.0
    exact: bool = True
    certificate: dict = field(default_factory=dict)
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "multipliers": self.multipliers.to_dict() if self.multipliers else None,
            "residual": float(self.residual),
            "exact": self.exact,
            "certificate": self.certificate,
            "notes": list(self.notes),
        }


@dataclass
class _Data:
    x: tuple
    active: list
    grad_f: tuple
    G: list  # all inequality gradients
    H: list
    limiting: PolySet
    flag: str
    exact: bool


def _data(P: ProblemSpec, x) -> _Data:
    if len(x) != P.dim:
        raise DimMismatch(f"point has length {len(x)}, problem dimension is {P.dim}")
    require_feasible(P, x)
    ex = exact_point(x)
    active = active_index(P, x)
    ok = ex is not None
    gf, e = P.f_gradient(x)
    ok = ok and e
    G, H = [], []
    for c in P.ineq:
        g, e = c.gradient(x)
        G.append(tuple(rationalize(v) for v in g))
        ok = ok and e
    for c in P.eq:
        g, e = c.gradient(x)
        H.append(tuple(rationalize(v) for v in g))
        ok = ok and e
    xq = ex if ex is not None else tuple(rationalize(v) for v in x)
    b = phi_bundle(P, xq)
    flag = b.flag("limiting")
    return _Data(xq, active, tuple(rationalize(v) for v in gf), G, H, b.limiting, flag, ok and flag == EXACT)


def _combination(D: _Data, lam, mu):
    v = list(D.grad_f)
    for i, g in enumerate(D.G):
        if lam[i]:
            v = [a + lam[i] * b for a, b in zip(v, g)]
    for j, h in enumerate(D.H):
        if mu[j]:
            v = [a + mu[j] * b for a, b in zip(v, h)]
    return v


def stationarity_set(P: ProblemSpec, x, mult: Multipliers) -> PolySet:
    """``S = grad f + lim dPhi + sum lam grad g + sum mu grad h`` as a PolySet."""
    D = _data(P, x)
    v = _combination(D, [frac(t) for t in mult.lam], [frac(t) for t in mult.mu])
    return minkowski_sum(PolySet.point(v), D.limiting)


def verify_kkt(P: ProblemSpec, x, mult: Multipliers) -> KKTReport:
    D = _data(P, x)
    if len(mult.lam) != P.n or len(mult.mu) != P.m:
        raise DimMismatch(f"expected {P.n} inequality and {P.m} equality multipliers")
    lam = [rationalize(t) if not isinstance(t, str) else frac(t) for t in mult.lam]
    mu = [rationalize(t) if not isinstance(t, str) else frac(t) for t in mult.mu]
    notes = []
    if any(t < 0 for t in lam):
        return KKTReport(NOT_VERIFIED, mult, float("inf"), D.exact, notes=("negative inequality multiplier",))
    if any(lam[i] != 0 for i in range(P.n) if i not in D.active):
        return KKTReport(NOT_VERIFIED, mult, float("inf"), D.exact, notes=("complementarity violated",))
    v = _combination(D, lam, mu)
    S = minkowski_sum(PolySet.point(v), D.limiting)
    if D.exact:
        m = contains_zero(S)
        cert = {"piece": m.piece, "replayed": verify_membership(S, [0] * P.dim, m)}
        return KKTReport(VERIFIED if m.member else NOT_VERIFIED, mult, 0.0 if m.member else float("nan"), True, cert)
    _, dist = project(S, np.zeros(P.dim))
    if dist > RESIDUAL_TOL:
        return KKTReport(NOT_VERIFIED, mult, dist, False)
    if D.flag == OUTER_ESTIMATE:
        notes.append("limiting subdifferential is an outer estimate; inclusion not conclusive")
        return KKTReport(UNKNOWN, mult, dist, False, notes=tuple(notes))
    return KKTReport(VERIFIED, mult, dist, False, {"tolerance": RESIDUAL_TOL})


def _kkt_lp(D: _Data, piece, dim, residual: bool):
    """Variables: lam (active), mu, sigma (points), rho (rays), tau (lines)[, r]."""
    na, nm = len(D.active), len(D.H)
    pts, R, L = list(piece.points), list(piece.rays), list(piece.lines)
    cols = [D.G[i] for i in D.active] + list(D.H) + pts + R + L
    n = len(cols) + (1 if residual else 0)
    nonneg = list(range(na)) + list(range(na + nm, na + nm + len(pts) + len(R)))
    A_eq, b_eq, A_le, b_le = [], [], [], []
    for k in range(dim):
        row = [c[k] for c in cols]
        if residual:
            A_le.append(row + [-1])
            b_le.append(-D.grad_f[k])
            A_le.append([-v for v in row] + [-1])
            b_le.append(D.grad_f[k])
        else:
            A_eq.append(row)
            b_eq.append(-D.grad_f[k])
    sig = [0] * (na + nm) + [1] * len(pts) + [0] * (len(R) + len(L))
    A_eq.append(sig + ([0] if residual else []))
    b_eq.append(1)
    if residual:
        nonneg.append(n - 1)
    c = [0] * n
    if residual:
        c[-1] = 1
    return _lp.make_lp(c, A_le, b_le, A_eq, b_eq, nonneg)


def find_kkt_multipliers(P: ProblemSpec, x) -> KKTReport:
    D = _data(P, x)
    d = P.dim
    na = len(D.active)

    def unpack(sol):
        lam = [Fraction(0)] * P.n
        for k, i in enumerate(D.active):
            lam[i] = sol[k]
        mu = list(sol[na : na + P.m])
        return Multipliers(tuple(lam), tuple(mu))

    if D.exact:
        farkas = []
        for k, piece in enumerate(D.limiting.pieces):
            lp = _kkt_lp(D, piece, d, False)
            res = _lp.solve(lp)
            if res.feasible:
                mult = unpack(res.x)
                check = verify_kkt(P, D.x, mult)
                return KKTReport(FOUND, mult, 0.0, True, {"piece": k, "lp_verified": _lp.verify(lp, res), "verify": check.status})
            farkas.append({"piece": k, "farkas": [[fmt(v) for v in part] for part in res.farkas], "lp_verified": _lp.verify(lp, res)})
        return KKTReport(NOT_FOUND, None, float("nan"), True, {"farkas": farkas})

    best = None
    for k, piece in enumerate(D.limiting.pieces):
        lp = _kkt_lp(D, piece, d, True)
        res = _lp.solve(lp)
        if res.status == _lp.OPTIMAL and (best is None or res.objective < best[0]):
            best = (res.objective, unpack(res.x), k)
    if best is None:
        return KKTReport(UNKNOWN, None, float("inf"), False, notes=("no residual LP solution",))
    r, mult, k = best
    r = float(r)
    mult = Multipliers(tuple(float(v) for v in mult.lam), tuple(float(v) for v in mult.mu))
    if r <= RESIDUAL_TOL:
        if D.flag == OUTER_ESTIMATE:
            return KKTReport(UNKNOWN, mult, r, False, {"piece": k}, ("limiting subdifferential is an outer estimate",))
        return KKTReport(FOUND, mult, r, False, {"piece": k, "tolerance": RESIDUAL_TOL})
    if D.flag == OUTER_ESTIMATE:
        # no multiplier even for the larger set
        return KKTReport(NOT_FOUND, None, r, False, {"piece": k})
    return KKTReport(UNKNOWN, mult, r, False, {"piece": k}, ("residual above tolerance",))


@dataclass(frozen=True)
class FritzJohnReport:
    case_i: bool
    case_ii: bool
    witnesses: dict

    def to_dict(self) -> dict:
        return {"case_i": self.case_i, "case_ii": self.case_ii, "witnesses": self.witnesses, "outer_estimate": True}


def fritz_john(P: ProblemSpec, x) -> FritzJohnReport:
    """Both alternatives; case (ii) uses ``grad f + lim dPhi`` for the joint subdifferential."""
    from . import qualify

    rep = qualify.check_nnamcq(P, x)
    case_i = rep.fails
    w = {}
    if case_i:
        w["abnormal"] = rep.to_dict()["certificate"]
    k = find_kkt_multipliers(P, x)
    case_ii = k.status == FOUND
    if case_ii:
        w["kkt"] = k.multipliers.to_dict()
    return FritzJohnReport(case_i, case_ii, w)


def parse_multipliers(P: ProblemSpec, text: str) -> Multipliers:
    """``lam_1,..,lam_n,mu_1,..,mu_m`` from a comma separated string."""
    from .errors import ParseError

    parts = [s for s in text.replace(";", ",").split(",") if s.strip()]
    if len(parts) != P.n + P.m:
        raise ParseError(f"expected {P.n + P.m} multipliers, got {len(parts)}")
    vals = [frac(s.strip()) for s in parts]
    return Multipliers(tuple(vals[: P.n]), tuple(vals[P.n :]))
