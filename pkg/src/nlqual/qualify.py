"""Graded checkers for the qualification conditions at a feasible point.

Multiplier systems are exact LPs over the conic-combination variables of
the relevant cone (horizon subdifferential, or coderivative slice plus the
normal cone of Omega). With affine constraints the sequence condition
reduces to a direction LP, so verdicts are CERTIFIED; otherwise the
sequence part is searched by sampling and verdicts are graded LIKELY.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DimensionTooLarge, InfeasiblePoint, NLQualError, Unsupported
from .model import ProblemSpec, active_index, check_feasible, exact_point
from .rational import dot, fmt, fmt_vec, frac, independent_subset, is_zero, nullspace, rank, unit
from .setalg import lp as _lp
from .setalg.dd import MAX_DIM, cone_generators
from .setalg.polyset import PolySet, cone_intersection_trivial, contains, minkowski_sum
from .subdiff import EXACT, OUTER_ESTIMATE, coderiv0 as _coderiv0, intersect_cones, omega_normal, phi_bundle, rationalize, worst

CERTIFIED_HOLDS = "CERTIFIED_HOLDS"
LIKELY_HOLDS = "LIKELY_HOLDS"
UNKNOWN = "UNKNOWN"
LIKELY_FAILS = "LIKELY_FAILS"
CERTIFIED_FAILS = "CERTIFIED_FAILS"
HOLDS = (CERTIFIED_HOLDS, LIKELY_HOLDS)
FAILS = (CERTIFIED_FAILS, LIKELY_FAILS)

AFFINE_EXACT = "AFFINE_EXACT"
SMOOTH_HEURISTIC = "SMOOTH_HEURISTIC"

NNAMCQ = "NNAMCQ"
QN_HORIZON = "QN_HORIZON"
RCPLD_HORIZON = "RCPLD_HORIZON"
QN_CODERIV = "QN_CODERIV"
BQ = "BQ"
COND13 = "COND13"
IMPLICATION28 = "IMPLICATION28"

PATTERN_CAP = 4096
LADDER_STEPS = 8
DEFAULT_RADII = tuple(10.0**-k for k in range(1, 9))
RANK_TOL = 1e-9


@dataclass(frozen=True)
class QualReport:
    condition: str
    verdict: str
    regime: str
    certificate: dict = field(default_factory=dict)
    notes: tuple = ()

    @property
    def holds(self) -> bool:
        return self.verdict in HOLDS

    @property
    def fails(self) -> bool:
        return self.verdict in FAILS

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "verdict": self.verdict,
            "regime": self.regime,
            "certificate": _jsonable(self.certificate),
            "notes": list(self.notes),
        }


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return fmt(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, PolySet):
        return obj.to_setspec()
    return obj


def _grade(regime: str, holds: bool) -> str:
    if regime == AFFINE_EXACT:
        return CERTIFIED_HOLDS if holds else CERTIFIED_FAILS
    return LIKELY_HOLDS if holds else LIKELY_FAILS


# -- context -------------------------------------------------------------------


@dataclass
class _Ctx:
    P: ProblemSpec
    x: tuple
    active: list  # 0-based active inequality indices
    G: dict  # i -> gradient (Fractions)
    H: list  # gradients of all equalities
    grads_exact: bool
    affine: bool

    @property
    def m(self) -> int:
        return len(self.H)


def _context(P: ProblemSpec, x) -> _Ctx:
    x = tuple(frac(v) for v in x)
    if len(x) != P.dim:
        from .errors import DimMismatch

        raise DimMismatch(f"point has length {len(x)}, problem dimension is {P.dim}")
    exact = P.constraints_affine
    rep = check_feasible(P, x, 0 if exact else 1e-9)
    if not rep.feasible:
        raise InfeasiblePoint("point is not feasible", residuals=rep.to_dict())
    active = active_index(P, x)
    G, ok = {}, True
    for i in active:
        g, e = P.ineq[i].gradient(x)
        G[i] = tuple(rationalize(v) for v in g)
        ok = ok and e
    H = []
    for c in P.eq:
        g, e = c.gradient(x)
        H.append(tuple(rationalize(v) for v in g))
        ok = ok and e
    return _Ctx(P, x, active, G, H, ok, exact)


def _regime(ctx: _Ctx, cone_flag: str) -> str:
    if ctx.affine and ctx.grads_exact and cone_flag == EXACT:
        return AFFINE_EXACT
    return SMOOTH_HEURISTIC


def horizon_cone(P: ProblemSpec, x):
    b = phi_bundle(P, x)
    return b.horizon, b.flag("horizon")


def coderiv_cone(P: ProblemSpec, x, which: str = "outer"):
    """``D*Psi(x)(0) + N_Omega(x)``; ``which`` picks the union estimate."""
    cd, flag = _coderiv0(P, x)
    reg, lim, nflag = omega_normal(P, x)
    n = lim if which == "outer" else reg
    return minkowski_sum(cd, n), worst(flag, nflag)


# -- multiplier LPs --------------------------------------------------------------


class _MultSystem:
    """``sum lam_i G_i + sum mu_j H_j + sum rho r + sum tau l = 0`` on one cone piece.

    Variables: lam (over ``lam_idx``), mu (over ``mu_idx``), rho, tau.
    """

    def __init__(self, ctx: _Ctx, piece, lam_idx, mu_idx):
        self.ctx = ctx
        self.lam_idx = list(lam_idx)
        self.mu_idx = list(mu_idx)
        self.R = list(piece.rays)
        self.L = list(piece.lines)
        self.nl, self.nm = len(self.lam_idx), len(self.mu_idx)
        self.n = self.nl + self.nm + len(self.R) + len(self.L)
        d = ctx.P.dim
        cols = [ctx.G[i] for i in self.lam_idx] + [ctx.H[j] for j in self.mu_idx] + self.R + self.L
        self.A_eq = [tuple(c[k] for c in cols) for k in range(d)]
        self.b_eq = [0] * d
        self.nonneg = list(range(self.nl)) + list(range(self.nl + self.nm, self.nl + self.nm + len(self.R)))

    def var_lam(self, i):
        return self.lam_idx.index(i)

    def var_mu(self, j):
        return self.nl + self.mu_idx.index(j)

    def row(self, entries):
        r = [Fraction(0)] * self.n
        for k, v in entries:
            r[k] = Fraction(v)
        return r

    def solve(self, c=None, A_le=(), b_le=(), maximize=False):
        c = c if c is not None else [0] * self.n
        return _lp.lp_solve(c, list(A_le), list(b_le), self.A_eq, self.b_eq, self.nonneg, maximize)

    def split(self, xv):
        """Full-length ``(lam, mu)`` from an LP solution."""
        lam = [Fraction(0)] * self.ctx.P.n
        mu = [Fraction(0)] * self.ctx.m
        for k, i in enumerate(self.lam_idx):
            lam[i] = xv[k]
        for k, j in enumerate(self.mu_idx):
            mu[j] = xv[self.nl + k]
        return tuple(lam), tuple(mu)


def _direction_probes(ctx: _Ctx, K: PolySet, lam_idx, mu_idx):
    """For each multiplier coordinate and sign, is it nonzero somewhere in the cone?

    Returns ``(allowed, witness)``: ``allowed`` maps ('lam', i) / ('mu+', j) /
    ('mu-', j) to a bool, ``witness`` is the first nonzero multiplier found.
    """
    allowed = {}
    witness = None
    probes = [("lam", i) for i in lam_idx] + [(s, j) for j in mu_idx for s in ("mu+", "mu-")]
    for key in probes:
        allowed[key] = False
        for piece in K.pieces:
            sysm = _MultSystem(ctx, piece, lam_idx, mu_idx)
            kind, idx = key
            if kind == "lam":
                var, sgn = sysm.var_lam(idx), 1
            else:
                var, sgn = sysm.var_mu(idx), 1 if kind == "mu+" else -1
            c = sysm.row([(var, sgn)])
            res = sysm.solve(c, [c], [1], maximize=True)
            if res.status == _lp.OPTIMAL and res.objective == 1:
                allowed[key] = True
                if witness is None:
                    witness = sysm.split(res.x)
                break
    return allowed, witness


def verify_abnormal(ctx: _Ctx, K: PolySet, lam, mu, lam_support=None) -> bool:
    """Exact re-check of ``-(sum lam G + sum mu H) in K`` with lam >= 0 and complementarity."""
    if any(v < 0 for v in lam):
        return False
    if any(lam[i] != 0 for i in range(len(lam)) if i not in ctx.G):
        return False
    d = ctx.P.dim
    v = [Fraction(0)] * d
    for i, g in ctx.G.items():
        for k in range(d):
            v[k] += lam[i] * g[k]
    for j, h in enumerate(ctx.H):
        for k in range(d):
            v[k] += mu[j] * h[k]
    return bool(contains(K, [-t for t in v]))


# -- NNAMCQ ------------------------------------------------------------------------


def _nnamcq_core(ctx: _Ctx, K: PolySet, flag: str, condition=NNAMCQ) -> QualReport:
    regime = _regime(ctx, flag)
    allowed, witness = _direction_probes(ctx, K, ctx.active, range(ctx.m))
    probes = {f"{k[0]}[{k[1] + 1}]": v for k, v in allowed.items()}
    if witness is None:
        return QualReport(condition, _grade(regime, True), regime, {"probes": probes})
    lam, mu = witness
    cert = {"lambda": lam, "mu": mu, "verified": verify_abnormal(ctx, K, lam, mu), "probes": probes}
    return QualReport(condition, _grade(regime, False), regime, cert)


def check_nnamcq(P: ProblemSpec, x) -> QualReport:
    ctx = _context(P, x)
    K, flag = horizon_cone(P, ctx.x)
    return _nnamcq_core(ctx, K, flag)


def abnormal_cone(P: ProblemSpec, x, cone: PolySet | None = None):
    """Abnormal multipliers ``(lam over active, mu)`` as a PolySet plus generators.

    Coordinates are ``lam_i`` for the active indices (in order) followed by
    ``mu_1..mu_m``.
    """
    ctx = _context(P, x)
    K = cone if cone is not None else horizon_cone(P, ctx.x)[0]
    a, m = len(ctx.active), ctx.m
    nm = a + m
    pieces = []
    gens = []
    for piece in K.pieces:
        sysm = _MultSystem(ctx, piece, ctx.active, range(m))
        if sysm.n > MAX_DIM:
            raise DimensionTooLarge(f"abnormal cone generator enumeration needs {sysm.n} variables")
        le = [sysm.row([(k, -1)]) for k in sysm.nonneg]
        rays, lines = cone_generators(le, sysm.A_eq, sysm.n)
        pr = [r[:nm] for r in rays if not is_zero(r[:nm])]
        pl = [l[:nm] for l in lines if not is_zero(l[:nm])]
        pieces.append(PolySet.cone(nm, pr, pl))
        gens.extend(pr + pl + [tuple(-v for v in l) for l in pl])
    out = PolySet.empty(nm)
    for p in pieces:
        out = out.union(p)
    return out, gens


# -- quasi-normality ----------------------------------------------------------


def _patterns(active, m, allowed):
    lam_ok = [i for i in active if allowed.get(("lam", i))]
    mu_signs = {j: [s for s, key in ((1, "mu+"), (-1, "mu-")) if allowed.get((key, j))] for j in range(m)}
    mu_ok = [j for j in range(m) if mu_signs[j]]
    for size in range(0, len(lam_ok) + len(mu_ok) + 1):
        for ni in range(0, size + 1):
            nj = size - ni
            if ni > len(lam_ok) or nj > len(mu_ok):
                continue
            for I in itertools.combinations(lam_ok, ni):
                for J in itertools.combinations(mu_ok, nj):
                    if not I and not J:
                        continue
                    for sig in itertools.product(*(mu_signs[j] for j in J)):
                        yield I, J, sig


def _count_patterns(active, m, allowed) -> int:
    a = sum(1 for i in active if allowed.get(("lam", i)))
    total = 2**a
    for j in range(m):
        total *= 1 + sum(1 for key in ("mu+", "mu-") if allowed.get((key, j)))
    return total - 1


def _pattern_multiplier(ctx: _Ctx, K: PolySet, I, J, sig):
    for piece in K.pieces:
        sysm = _MultSystem(ctx, piece, I, J)
        A, b = [], []
        for i in I:
            A.append(sysm.row([(sysm.var_lam(i), -1)]))
            b.append(-1)
        for j, s in zip(J, sig):
            A.append(sysm.row([(sysm.var_mu(j), -s)]))
            b.append(-1)
        res = sysm.solve(None, A, b)
        if res.feasible:
            return sysm.split(res.x)
    return None


def _pattern_direction(ctx: _Ctx, I, J, sig):
    d = ctx.P.dim
    A, b = [], []
    for i in I:
        A.append([-v for v in ctx.G[i]])
        b.append(-1)
    for j, s in zip(J, sig):
        A.append([-s * v for v in ctx.H[j]])
        b.append(-1)
    res = _lp.lp_solve([0] * d, A, b)
    return res.x if res.feasible else None


def _strict_signs(ctx: _Ctx, y, I, J, sig) -> bool:
    P = ctx.P
    for i in I:
        v, _ = P.ineq[i].value(y)
        if not v > 0:
            return False
    for j, s in zip(J, sig):
        v, _ = P.eq[j].value(y)
        if not s * v > 0:
            return False
    return True


def _affine_ladder(ctx: _Ctx, d, I, J, sig):
    pts = [tuple(xi + di / Fraction(2**k) for xi, di in zip(ctx.x, d)) for k in range(1, LADDER_STEPS + 1)]
    ok = all(_strict_signs(ctx, p, I, J, sig) for p in pts)
    return pts, ok


def _sample_ladder(ctx: _Ctx, I, J, sig, radii, samples, rng, direction=None):
    """Search each radius for a point with the strict signs; returns list of (r, point|None)."""
    P = ctx.P
    d = P.dim
    x = np.array([float(v) for v in ctx.x])
    sig = np.array(sig, dtype=float)
    out = []
    for r in radii:
        cand = []
        if direction is not None:
            u = np.array([float(v) for v in direction])
            u = u / np.linalg.norm(u)
            cand.append(x + r * u[None, :] * np.array([[1.0], [0.5], [0.25]]))
        z = rng.standard_normal((samples, d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        z *= r * rng.random((samples, 1)) ** (1.0 / d)
        cand.append(x + z)
        Y = np.vstack(cand)
        ok = np.ones(Y.shape[0], dtype=bool)
        if I:
            Gv = P.batch_g(Y)[:, list(I)]
            ok &= np.all(Gv > 0, axis=1)
        if J:
            Hv = P.batch_h(Y)[:, list(J)]
            ok &= np.all(Hv * sig[None, :] > 0, axis=1)
        hit = np.flatnonzero(ok)
        out.append((r, Y[hit[0]].tolist() if hit.size else None))
    return out


def _qn_core(ctx: _Ctx, K: PolySet, flag: str, condition: str, radii, samples, seed) -> QualReport:
    regime = _regime(ctx, flag)
    allowed, witness = _direction_probes(ctx, K, ctx.active, range(ctx.m))
    if witness is None:
        return QualReport(condition, _grade(regime, True), regime, {"reason": "no nonzero abnormal multiplier"})
    total = _count_patterns(ctx.active, ctx.m, allowed)
    pats = _patterns(ctx.active, ctx.m, allowed)
    capped = total > PATTERN_CAP
    if capped:
        rng = np.random.default_rng(seed)
        every = list(itertools.islice(pats, 0, None))
        pick = sorted(rng.choice(len(every), size=PATTERN_CAP, replace=False))
        pats = [every[k] for k in pick]
    rng = np.random.default_rng(seed)
    examined = 0
    partial = None
    for I, J, sig in pats:
        mult = _pattern_multiplier(ctx, K, I, J, sig)
        if mult is None:
            continue
        examined += 1
        lam, mu = mult
        d = _pattern_direction(ctx, I, J, sig)
        pattern = {"I": [i + 1 for i in I], "J": [j + 1 for j in J], "sigma": list(sig)}
        if ctx.affine:
            if d is None:
                continue
            pts, ok = _affine_ladder(ctx, d, I, J, sig)
            cert = {
                "pattern": pattern,
                "lambda": lam,
                "mu": mu,
                "direction": d,
                "ladder": pts,
                "verified": ok and verify_abnormal(ctx, K, lam, mu),
            }
            return QualReport(condition, _grade(regime, False), regime, cert)
        ladder = _sample_ladder(ctx, I, J, sig, radii, samples, rng, d)
        hits = [p for _, p in ladder if p is not None]
        if len(hits) == len(ladder):
            cert = {"pattern": pattern, "lambda": lam, "mu": mu, "radii": list(radii), "ladder": hits}
            return QualReport(condition, LIKELY_FAILS, regime, cert)
        if hits and partial is None:
            partial = {"pattern": pattern, "lambda": lam, "mu": mu, "found": [[r, p] for r, p in ladder if p is not None]}
    cert = {"patterns_total": total, "patterns_with_multiplier": examined, "capped": capped}
    if partial is not None:
        cert["partial_ladder"] = partial
        return QualReport(condition, UNKNOWN, regime, cert, ("witness search found only partial ladders",))
    if capped:
        return QualReport(condition, UNKNOWN, regime, cert, ("pattern budget exceeded",))
    if not ctx.affine:
        cert.update({"radii": list(radii), "samples": samples, "seed": seed})
    return QualReport(condition, _grade(regime, True), regime, cert)


def check_quasinormality_horizon(P, x, radii=DEFAULT_RADII, samples=512, seed=42, cone=None) -> QualReport:
    """``cone`` overrides the horizon subdifferential (``{0}`` gives standard quasi-normality)."""
    ctx = _context(P, x)
    if cone is None:
        K, flag = horizon_cone(P, ctx.x)
    else:
        K, flag = cone, EXACT
    return _qn_core(ctx, K, flag, QN_HORIZON, radii, samples, seed)


def check_quasinormality_coderiv(P, x, radii=DEFAULT_RADII, samples=512, seed=42) -> QualReport:
    ctx = _context(P, x)
    K_out, flag = coderiv_cone(P, ctx.x, "outer")
    multi = not P.omega.is_whole and len(P.omega.pieces_at(ctx.x)) > 1
    if not multi:
        return _qn_core(ctx, K_out, flag, QN_CODERIV, radii, samples, seed)
    # several pieces touch x: compare inner and outer normal cone estimates
    K_in, _ = coderiv_cone(P, ctx.x, "inner")
    cd, cflag = _coderiv0(P, ctx.x)
    flag = cflag
    r_out = _qn_core(ctx, K_out, flag, QN_CODERIV, radii, samples, seed)
    r_in = _qn_core(ctx, K_in, flag, QN_CODERIV, radii, samples, seed)
    if r_out.holds == r_in.holds and r_out.fails == r_in.fails:
        return r_out
    cert = {"outer": r_out.to_dict(), "inner": r_in.to_dict()}
    return QualReport(QN_CODERIV, UNKNOWN, SMOOTH_HEURISTIC, cert, ("NORMAL_CONE_AMBIGUOUS",))


# -- RCPLD ------------------------------------------------------------------------


def _probe_points(ctx: _Ctx, delta, probes, seed):
    rng = np.random.default_rng(seed)
    d = ctx.P.dim
    z = rng.standard_normal((probes, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z *= delta * rng.random((probes, 1)) ** (1.0 / d)
    return np.array([float(v) for v in ctx.x])[None, :] + z


def _float_grads(P: ProblemSpec, idx_g, idx_h, y):
    rows = []
    for i in idx_g:
        g, _ = P.ineq[i].gradient(list(map(float, y)))
        rows.append([float(v) for v in g])
    for j in idx_h:
        g, _ = P.eq[j].gradient(list(map(float, y)))
        rows.append([float(v) for v in g])
    return np.array(rows, dtype=float).reshape(len(rows), P.dim)


def _rcpld_core(ctx: _Ctx, K: PolySet, flag: str, delta, probes, seed, condition=RCPLD_HORIZON) -> QualReport:
    regime = _regime(ctx, flag)
    P = ctx.P
    basis = independent_subset(ctx.H)
    J = basis
    cert = {"basis_J": [j + 1 for j in J]}
    ys = None
    if not ctx.affine:
        ys = _probe_points(ctx, delta, probes, seed)
        r0 = rank(ctx.H) if ctx.H else 0
        for y in ys:
            Hy = _float_grads(P, [], range(ctx.m), y)
            ry = np.linalg.matrix_rank(Hy, tol=RANK_TOL) if ctx.m else 0
            if ry != r0:
                cert.update({"rank_drift": True, "probe": y.tolist(), "rank_at_x": r0, "rank_at_probe": int(ry)})
                return QualReport(condition, _grade(regime, False), regime, cert, ("RANK_DRIFT",))
    subsets = []
    for size in range(len(ctx.active) + 1):
        subsets.extend(itertools.combinations(ctx.active, size))
    if len(subsets) > PATTERN_CAP:
        return QualReport(condition, UNKNOWN, regime, cert, ("subset budget exceeded",))
    checked = []
    for S in subsets:
        if not S and not J:
            continue
        _, witness = _direction_probes(ctx, K, S, J)
        if witness is None:
            checked.append({"I": [i + 1 for i in S], "multiplier": False})
            continue
        lam, mu = witness
        if ctx.affine:
            rows = [ctx.G[i] for i in S] + [ctx.H[j] for j in J]
            dependent = rank(rows) < len(rows)
            if not dependent:
                cert.update({"I": [i + 1 for i in S], "lambda": lam, "mu": mu, "probe": ctx.x, "independent": True, "verified": verify_abnormal(ctx, K, lam, mu)})
                return QualReport(condition, _grade(regime, False), regime, cert)
        else:
            for y in ys:
                M = _float_grads(P, S, J, y)
                if np.linalg.matrix_rank(M, tol=RANK_TOL) == M.shape[0]:
                    cert.update({"I": [i + 1 for i in S], "lambda": lam, "mu": mu, "probe": y.tolist(), "independent": True})
                    return QualReport(condition, LIKELY_FAILS, regime, cert)
        checked.append({"I": [i + 1 for i in S], "multiplier": True, "dependent": True})
    cert["subsets"] = checked
    if ys is not None:
        cert.update({"delta": delta, "probes": probes, "seed": seed})
    return QualReport(condition, _grade(regime, True), regime, cert)


def check_rcpld_horizon(P, x, delta=1e-2, probes=64, seed=42, cone=None) -> QualReport:
    ctx = _context(P, x)
    if cone is None:
        K, flag = horizon_cone(P, ctx.x)
    else:
        K, flag = cone, EXACT
    return _rcpld_core(ctx, K, flag, delta, probes, seed)


# -- basic qualification and its coderivative variant ---------------------------


def feasible_normal_cone(ctx: _Ctx) -> PolySet:
    """``cone{grad g_i : i active} + span{grad h_j}`` for affine constraints."""
    return PolySet.cone(ctx.P.dim, [ctx.G[i] for i in ctx.active], ctx.H)


def _intersection_check(ctx, K, flag, NF, condition, extra_flag=EXACT):
    regime = _regime(ctx, worst(flag, extra_flag))
    trivial, w = cone_intersection_trivial(K.negate(), NF)
    cert = {"minus_cone": K.negate(), "normal_cone": NF}
    if not trivial:
        cert["witness"] = w
    return QualReport(condition, _grade(regime, trivial), regime, cert)


def _bq_precondition(P: ProblemSpec, condition):
    if not P.constraints_affine:
        return QualReport(condition, UNKNOWN, SMOOTH_HEURISTIC, {}, ("UNSUPPORTED_REGION: nonlinear constraints; quasi-normality implies this condition",))
    if P.omega.kind == "union":
        return QualReport(condition, UNKNOWN, SMOOTH_HEURISTIC, {}, ("UNSUPPORTED_REGION: Omega is a union; quasi-normality implies this condition",))
    return None


def check_bq(P: ProblemSpec, x) -> QualReport:
    early = _bq_precondition(P, BQ)
    if early:
        return early
    ctx = _context(P, x)
    K, flag = horizon_cone(P, ctx.x)
    return _intersection_check(ctx, K, flag, feasible_normal_cone(ctx), BQ)


def check_cond13(P: ProblemSpec, x) -> QualReport:
    early = _bq_precondition(P, COND13)
    if early:
        return early
    ctx = _context(P, x)
    cd, flag = _coderiv0(P, ctx.x)
    _, n_om, nflag = omega_normal(P, ctx.x)
    NF = minkowski_sum(feasible_normal_cone(ctx), n_om)
    return _intersection_check(ctx, cd, flag, NF, COND13, nflag)


# -- multiplier-support implication -------------------------------------------


def check_implication28(P: ProblemSpec, x) -> QualReport:
    if not P.constraints_affine:
        return QualReport(IMPLICATION28, UNKNOWN, SMOOTH_HEURISTIC, {}, ("UNSUPPORTED: constraints must be affine",))
    ctx = _context(P, x)
    K, flag = horizon_cone(P, ctx.x)
    regime = _regime(ctx, flag)
    d = P.dim
    for piece in K.pieces:
        sysm = _MultSystem(ctx, piece, ctx.active, range(ctx.m))
        # v = sum lam G + sum mu H as a linear form in the variables
        forms = [sysm.row([(k, sysm.A_eq[c][k]) for k in range(sysm.nl + sysm.nm)]) for c in range(d)]
        for c in range(d):
            for s in (1, -1):
                obj = [s * v for v in forms[c]]
                res = sysm.solve(obj, [obj], [1], maximize=True)
                if res.status == _lp.OPTIMAL and res.objective == 1:
                    lam, mu = sysm.split(res.x)
                    combo = [Fraction(0)] * d
                    for i, g in ctx.G.items():
                        combo = [a + lam[i] * b for a, b in zip(combo, g)]
                    for j, h in enumerate(ctx.H):
                        combo = [a + mu[j] * b for a, b in zip(combo, h)]
                    cert = {"lambda": lam, "mu": mu, "combination": combo, "verified": verify_abnormal(ctx, K, lam, mu)}
                    return QualReport(IMPLICATION28, _grade(regime, False), regime, cert)
    return QualReport(IMPLICATION28, _grade(regime, True), regime, {"reason": "every left-side multiplier gives a zero combination"})


# -- dispatch, persistence, verification --------------------------------------------------

CONDITION_ALIASES = {
    "nnamcq": NNAMCQ,
    "qn": QN_HORIZON,
    "rcpld": RCPLD_HORIZON,
    "dqn": QN_CODERIV,
    "bq": BQ,
    "cond13": COND13,
    "impl28": IMPLICATION28,
}


def run_check(P, x, condition, radii=DEFAULT_RADII, samples=512, delta=1e-2, probes=64, seed=42) -> QualReport:
    condition = CONDITION_ALIASES.get(condition, condition)
    if condition == NNAMCQ:
        return check_nnamcq(P, x)
    if condition == QN_HORIZON:
        return check_quasinormality_horizon(P, x, radii, samples, seed)
    if condition == RCPLD_HORIZON:
        return check_rcpld_horizon(P, x, delta, probes, seed)
    if condition == QN_CODERIV:
        return check_quasinormality_coderiv(P, x, radii, samples, seed)
    if condition == BQ:
        return check_bq(P, x)
    if condition == COND13:
        return check_cond13(P, x)
    if condition == IMPLICATION28:
        return check_implication28(P, x)
    raise Unsupported(f"unknown condition {condition!r}")


def sample_feasible(P: ProblemSpec, x, radius, count, seed, max_tries=200):
    """Feasible points within ``radius`` of ``x`` (rational for affine data)."""
    rng = np.random.default_rng(seed)
    x = tuple(frac(v) for v in x)
    d = P.dim
    out = []
    if radius == 0 or count == 0:
        return out
    if P.constraints_affine:
        N = nullspace([c.a for c in P.eq], d) if P.eq else [unit(d, k) for k in range(d)]
        if not N:
            # isolated feasible point: the neighbourhood is {x}
            return [x] if all(c.value(x)[0] <= 0 for c in P.ineq) and P.omega.contains(x) else out
        Nf = np.array([[float(v) for v in col] for col in N])
        for _ in range(count * max_tries):
            z = rng.standard_normal(len(N))
            step = z @ Nf
            nrm = np.linalg.norm(step)
            if nrm == 0:
                continue
            scale_ = radius * rng.random() / nrm
            zr = [Fraction(float(v * scale_)).limit_denominator(10**6) for v in z]
            y = tuple(xi + sum((zk * col[k] for zk, col in zip(zr, N)), Fraction(0)) for k, xi in enumerate(x))
            if sum(float(a - b) ** 2 for a, b in zip(y, x)) > radius**2:
                continue
            if all(c.value(y)[0] <= 0 for c in P.ineq) and P.omega.contains(y):
                out.append(y)
                if len(out) == count:
                    break
        return out
    xf = np.array([float(v) for v in x])
    for _ in range(count * max_tries):
        z = rng.standard_normal(d)
        y = xf + radius * rng.random() * z / np.linalg.norm(z)
        y = _gauss_newton_eq(P, y)
        if y is None or np.linalg.norm(y - xf) > radius:
            continue
        if np.all(P.batch_g(y[None, :])[0] <= 1e-10) and P.omega.contains(list(y)):
            out.append(tuple(Fraction(float(v)) for v in y))
            if len(out) == count:
                break
    return out


def _gauss_newton_eq(P: ProblemSpec, y, iters=50, tol=1e-12):
    if not P.eq:
        return y
    for _ in range(iters):
        hv = P.batch_h(y[None, :])[0]
        if np.max(np.abs(hv)) <= tol:
            return y
        J = _float_grads(P, [], range(P.m), y)
        step, *_ = np.linalg.lstsq(J, hv, rcond=None)
        y = y - step
    hv = P.batch_h(y[None, :])[0]
    return y if np.max(np.abs(hv)) <= 1e-9 else None


@dataclass(frozen=True)
class PersistenceReport:
    condition: str
    radius: float
    sampled: int
    failures: tuple
    verdicts: tuple

    @property
    def consistent(self) -> bool:
        return not self.failures

    def to_dict(self):
        return _jsonable(
            {
                "condition": self.condition,
                "radius": self.radius,
                "sampled": self.sampled,
                "failures": [{"point": p, "verdict": v} for p, v in self.failures],
                "verdict_counts": {v: self.verdicts.count(v) for v in sorted(set(self.verdicts))},
            }
        )


def persistence_probe(P, x, condition, radius=1e-3, samples=64, seed=42, **kw) -> PersistenceReport:
    condition = CONDITION_ALIASES.get(condition, condition)
    pts = sample_feasible(P, x, radius, samples, seed)
    failures, verdicts = [], []
    for k, y in enumerate(pts):
        rep = run_check(P, y, condition, seed=seed + k, **kw)
        verdicts.append(rep.verdict)
        if rep.fails:
            failures.append((y, rep.verdict))
    return PersistenceReport(condition, radius, len(pts), tuple(failures), tuple(verdicts))


def verify_certificate(P: ProblemSpec, x, rep: QualReport) -> bool:
    """Replay a FAILS certificate exactly (multiplier inclusion and ladder signs)."""
    if not rep.fails:
        return True
    ctx = _context(P, x)
    c = rep.certificate
    if rep.condition in (NNAMCQ, QN_HORIZON, RCPLD_HORIZON, IMPLICATION28):
        K, _ = horizon_cone(P, ctx.x)
    elif rep.condition == QN_CODERIV:
        K, _ = coderiv_cone(P, ctx.x)
    else:
        return "witness" in c
    if "lambda" not in c:
        return "rank_drift" in c
    lam = tuple(frac(v) for v in c["lambda"])
    mu = tuple(frac(v) for v in c["mu"])
    if all(v == 0 for v in lam + mu):
        return False
    if not verify_abnormal(ctx, K, lam, mu):
        return False
    if rep.condition in (QN_HORIZON, QN_CODERIV) and rep.regime == AFFINE_EXACT:
        pat = c["pattern"]
        I = [i - 1 for i in pat["I"]]
        J = [j - 1 for j in pat["J"]]
        return all(_strict_signs(ctx, tuple(frac(v) for v in p), I, J, pat["sigma"]) for p in c["ladder"])
    if rep.condition in (QN_HORIZON, QN_CODERIV):
        pat = c["pattern"]
        I = [i - 1 for i in pat["I"]]
        J = [j - 1 for j in pat["J"]]
        return all(_strict_signs(ctx, p, I, J, pat["sigma"]) for p in c["ladder"])
    return True
