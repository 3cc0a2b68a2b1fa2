"""Exact penalty problems, the lifted restricted system, error-bound
estimation and sampling-based validation of local exactness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import HypothesisViolated, NLQualError, ProjectionFailure, Unsupported
from .model import NORMS, POW_PLUS, ProblemSpec, exact_point, require_feasible
from .rational import fmt, frac
from .setalg.dd import polyhedron_generators
from .setalg.project import project_h
from .subdiff import outer_table, superlinear_growth

EXACTNESS_SLACK = 1e-9
BLOCK = 1024
DEFAULT_LADDER = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
GROWTH_FACTOR = 10.0
MIN_POSITIVE = 10

BOUNDED = "BOUNDED"
GROWING = "GROWING"
DEGENERATE = "DEGENERATE"


def _norm(v: np.ndarray, norm: str) -> np.ndarray:
    """Row-wise norm of a batch of residual vectors (zero-width gives 0)."""
    if v.shape[1] == 0:
        return np.zeros(v.shape[0])
    if norm == "l1":
        return np.sum(np.abs(v), axis=1)
    if norm == "l2":
        return np.sqrt(np.sum(v * v, axis=1))
    if norm == "linf":
        return np.max(np.abs(v), axis=1)
    raise Unsupported(f"unknown norm {norm!r}")


def ball_samples(rng, center, radius: float, n: int, inner: float = 0.0) -> np.ndarray:
    """``n`` uniform points in the shell ``inner <= |z - center| <= radius``."""
    c = np.asarray(center, dtype=float)
    d = c.size
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    lo = (inner / radius) ** d if radius > 0 else 0.0
    z *= radius * (lo + (1 - lo) * rng.random((n, 1))) ** (1.0 / d)
    return c[None, :] + z


# -- penalty problem -------------------------------------------------------------


@dataclass(frozen=True)
class PenaltyProblem:
    base: ProblemSpec
    rho: float
    norm: str = "l1"

    def residual(self, X) -> np.ndarray:
        """``||g(x)_+|| + ||h(x)||`` for a batch."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        P = self.base
        g = np.maximum(P.batch_g(X), 0.0)
        return _norm(g, self.norm) + _norm(P.batch_h(X), self.norm)

    def base_value(self, X) -> np.ndarray:
        """``f + Psi`` on Omega, ``inf`` outside."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        P = self.base
        with np.errstate(all="ignore"):
            return P.batch_f(X) + P.batch_phi(X)

    def __call__(self, X) -> np.ndarray:
        return self.base_value(X) + float(self.rho) * self.residual(X)

    def value(self, x):
        """``(value, exact)``; exact when f, Psi and the residuals are rational."""
        P = self.base
        ex = exact_point(x)
        if ex is not None and P.omega.contains(ex):
            try:
                total = P.f_value(ex)
                for term in P.phi:
                    t = term.inner.value_exact(ex)
                    v = None if t is None else term.outer.value_exact(t)
                    if v is None:
                        raise ValueError
                    total += v
                gp = [max(v, Fraction(0)) for v in P.g_values(ex)]
                ha = [abs(v) for v in P.h_values(ex)]
                if all(isinstance(v, Fraction) for v in [total, *gp, *ha]):
                    res = _exact_norm(gp, self.norm) + _exact_norm(ha, self.norm)
                    if res is not None:
                        return total + frac(self.rho) * res, True
            except (ValueError, NLQualError, TypeError):
                pass
        return float(self(np.asarray([float(v) for v in x])[None, :])[0]), False


def _exact_norm(v, norm):
    if not v:
        return Fraction(0)
    if norm == "l1":
        return sum(v, Fraction(0))
    if norm == "linf":
        return max(v)
    if all(t == 0 for t in v):
        return Fraction(0)
    return None


def build_penalty(P: ProblemSpec, rho, norm: str | None = None) -> PenaltyProblem:
    norm = norm or P.norm
    if norm not in NORMS:
        raise Unsupported(f"unknown norm {norm!r}")
    if not float(rho) > 0:
        raise Unsupported("rho must be positive")
    return PenaltyProblem(P, rho, norm)


# -- distance targets ------------------------------------------------------------


class PolyTarget:
    """Union of polyhedra ``{A z <= b, E z = e}`` with an L1 residual oracle."""

    def __init__(self, dim, pieces, residual, domain_mask=None):
        self.dim = dim
        self.pieces = pieces  # list of (A, b, E, e) float arrays
        self._residual = residual
        self._mask = domain_mask

    def residual(self, Z):
        return self._residual(np.atleast_2d(Z))

    def domain(self, Z):
        Z = np.atleast_2d(Z)
        return np.ones(Z.shape[0], dtype=bool) if self._mask is None else self._mask(Z)

    def distance(self, z) -> float:
        best = None
        for A, b, E, e in self.pieces:
            try:
                _, dist = project_h(A, b, E, e, z)
            except ProjectionFailure:
                continue
            best = dist if best is None else min(best, dist)
        if best is None:
            raise ProjectionFailure("target set is empty")
        return best


class SmoothTarget:
    """``{z : c_k(z) = 0 (eq), c_k(z) <= 0 (ineq)}``; distance by Gauss-Newton projection."""

    def __init__(self, dim, eq, ineq=(), domain_mask=None, iters=500, step_tol=1e-12, res_tol=1e-8):
        self.dim = dim
        self.eq = list(eq)  # callables z -> float on a batch
        self.ineq = list(ineq)
        self._mask = domain_mask
        self.iters, self.step_tol, self.res_tol = iters, step_tol, res_tol

    def _vals(self, Z):
        Z = np.atleast_2d(Z)
        e = np.stack([c(Z) for c in self.eq], axis=1) if self.eq else np.zeros((Z.shape[0], 0))
        g = np.stack([c(Z) for c in self.ineq], axis=1) if self.ineq else np.zeros((Z.shape[0], 0))
        return e, g

    def residual(self, Z):
        e, g = self._vals(Z)
        return np.sum(np.abs(e), axis=1) + np.sum(np.maximum(g, 0.0), axis=1)

    def domain(self, Z):
        Z = np.atleast_2d(Z)
        return np.ones(Z.shape[0], dtype=bool) if self._mask is None else self._mask(Z)

    def _jac(self, z, h=1e-7):
        base = np.concatenate(self._vals(z[None, :]), axis=1)[0]
        J = np.empty((base.size, z.size))
        for k in range(z.size):
            dz = np.zeros(z.size)
            dz[k] = h
            up = np.concatenate(self._vals((z + dz)[None, :]), axis=1)[0]
            dn = np.concatenate(self._vals((z - dz)[None, :]), axis=1)[0]
            J[:, k] = (up - dn) / (2 * h)
        return base, J

    def distance(self, z) -> float:
        z0 = np.asarray(z, dtype=float)
        y = z0.copy()
        ne = len(self.eq)
        for _ in range(self.iters):
            r, J = self._jac(y)
            keep = np.concatenate([np.ones(ne, dtype=bool), r[ne:] > 0])
            r, J = r[keep], J[keep]
            if r.size == 0:
                break
            step, *_ = np.linalg.lstsq(J, r, rcond=None)
            y = y - step
            if np.linalg.norm(step) <= self.step_tol:
                break
        if self.residual(y[None, :])[0] > self.res_tol:
            raise ProjectionFailure("Gauss-Newton projection did not reach the set")
        return float(np.linalg.norm(y - z0))


def _fl(rows):
    return [[float(v) for v in r] for r in rows]


def _omega_pieces_float(P: ProblemSpec, extra_cols=0):
    d = P.dim
    if P.omega.is_whole:
        return [(np.zeros((0, d + extra_cols)), np.zeros(0))]
    out = []
    for piece in P.omega.pieces:
        A, b = piece.float_data()
        out.append((np.hstack([A, np.zeros((A.shape[0], extra_cols))]), b))
    return out


def feasible_set_target(P: ProblemSpec):
    """Plain feasible set ``{g <= 0, h = 0, x in Omega}``."""
    d = P.dim
    res = lambda X: np.sum(np.maximum(P.batch_g(X), 0.0), axis=1) + np.sum(np.abs(P.batch_h(X)), axis=1)
    mask = None if P.omega.is_whole else (lambda X: P.omega.member_mask(X, 1e-12))
    if P.constraints_affine:
        G = np.array(_fl([c.a for c in P.ineq])).reshape(P.n, d)
        gb = -np.array([float(c.b) for c in P.ineq])
        H = np.array(_fl([c.a for c in P.eq])).reshape(P.m, d)
        hb = -np.array([float(c.b) for c in P.eq])
        pieces = [(np.vstack([G, A]), np.concatenate([gb, b]), H, hb) for A, b in _omega_pieces_float(P)]
        return PolyTarget(d, pieces, res, mask)
    if not P.omega.is_whole:
        raise Unsupported("distance to nonlinear constraints intersected with Omega")
    return SmoothTarget(d, [c for c in P.eq], [c for c in P.ineq], mask)


# -- restricted (lifted) system ----------------------------------------------------


@dataclass(frozen=True)
class RestrictedSystem:
    base: ProblemSpec
    x_star: tuple
    t_star: tuple
    I: tuple  # 0-based terms with trivial horizon
    Ic: tuple
    plus_rows: tuple  # terms whose lifted row carries the plus-map

    @property
    def s(self) -> int:
        return len(self.base.phi)

    @property
    def dim(self) -> int:
        return self.base.dim + self.s

    @property
    def anchor(self) -> np.ndarray:
        return np.array([float(v) for v in self.x_star] + [float(v) for v in self.t_star])

    def to_dict(self) -> dict:
        return {
            "t_star": [fmt(v) for v in self.t_star],
            "I": [i + 1 for i in self.I],
            "Ic": [i + 1 for i in self.Ic],
            "plus_rows": [i + 1 for i in self.plus_rows],
        }

    def _lift_values(self, X):
        vals = []
        for i, term in enumerate(self.base.phi):
            w = term.inner(X)
            vals.append(np.maximum(w, 0.0) if i in self.plus_rows else w)
        return np.stack(vals, axis=1) if vals else np.zeros((X.shape[0], 0))

    def residual(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        d = self.base.dim
        X, T = Z[:, :d], Z[:, d:]
        P = self.base
        r = np.sum(np.abs(self._lift_values(X) - T), axis=1)
        if self.Ic:
            ts = np.array([float(self.t_star[i]) for i in self.Ic])
            r = r + np.sum(np.abs(T[:, list(self.Ic)] - ts[None, :]), axis=1)
        r = r + np.sum(np.maximum(P.batch_g(X), 0.0), axis=1) + np.sum(np.abs(P.batch_h(X)), axis=1)
        return r

    def target(self):
        P = self.base
        d, s = P.dim, self.s
        mask = None if P.omega.is_whole else (lambda Z: P.omega.member_mask(Z[:, :d], 1e-12))
        affine = P.constraints_affine and all(t.inner.is_affine for t in P.phi)
        if not affine:
            eq = []
            for i, term in enumerate(P.phi):
                plus = i in self.plus_rows
                eq.append(lambda Z, term=term, i=i, plus=plus: (np.maximum(term.inner(Z[:, :d]), 0.0) if plus else term.inner(Z[:, :d])) - Z[:, d + i])
            for i in self.Ic:
                eq.append(lambda Z, i=i: Z[:, d + i] - float(self.t_star[i]))
            eq += [lambda Z, c=c: c(Z[:, :d]) for c in P.eq]
            ineq = [lambda Z, c=c: c(Z[:, :d]) for c in P.ineq]
            if not P.omega.is_whole:
                raise Unsupported("distance to nonlinear lifted constraints intersected with Omega")
            return SmoothTarget(d + s, eq, ineq, mask)
        pad = lambda a: [float(v) for v in a] + [0.0] * s
        base_le = [pad(c.a) for c in P.ineq]
        base_lb = [-float(c.b) for c in P.ineq]
        base_eq = [pad(c.a) for c in P.eq]
        base_eb = [-float(c.b) for c in P.eq]
        for i, term in enumerate(P.phi):
            if i in self.plus_rows:
                continue
            row = pad(term.inner.a)
            row[d + i] = -1.0
            base_eq.append(row)
            base_eb.append(-float(term.inner.b))
        for i in self.Ic:
            row = [0.0] * (d + s)
            row[d + i] = 1.0
            base_eq.append(row)
            base_eb.append(float(self.t_star[i]))
        pieces = []
        branches = list(itertools.product((True, False), repeat=len(self.plus_rows)))
        for A_om, b_om in _omega_pieces_float(P, s):
            for br in branches:
                le, lb = list(base_le), list(base_lb)
                eq, eb = list(base_eq), list(base_eb)
                for i, pos in zip(self.plus_rows, br):
                    a = pad(P.phi[i].inner.a)
                    b = float(P.phi[i].inner.b)
                    if pos:  # a.x + b >= 0 and a.x + b - t = 0
                        le.append([-v for v in a])
                        lb.append(b)
                        row = list(a)
                        row[d + i] = -1.0
                        eq.append(row)
                        eb.append(-b)
                    else:  # a.x + b <= 0 and t = 0
                        le.append(a)
                        lb.append(-b)
                        row = [0.0] * (d + s)
                        row[d + i] = 1.0
                        eq.append(row)
                        eb.append(0.0)
                A = np.vstack([np.array(le).reshape(-1, d + s), A_om])
                b = np.concatenate([np.array(lb), b_om])
                pieces.append((A, b, np.array(eq).reshape(-1, d + s), np.array(eb)))
        return PolyTarget(d + s, pieces, self.residual, mask)


def build_restricted_system(P: ProblemSpec, x_star) -> RestrictedSystem:
    x = tuple(frac(v) for v in x_star)
    require_feasible(P, x)
    t_star, I, Ic, plus = [], [], [], []
    for i, term in enumerate(P.phi):
        t = term.inner.value_exact(x)
        if t is None:
            t = Fraction(float(term.inner([float(v) for v in x])))
        outer = term.outer
        if outer.kind == POW_PLUS:
            # lift (w)_+ into the row and keep |t|^p outside
            plus.append(i)
            t = max(t, Fraction(0))
            from .model import OuterFn

            outer = OuterFn.pow_abs(outer.p)
        t_star.append(t)
        if outer_table(outer, t).horizon.is_zero:
            I.append(i)
        else:
            if not superlinear_growth(outer, t):
                raise HypothesisViolated(
                    f"term {i + 1} has a nontrivial horizon subdifferential at t = {fmt(t)} but no superlinear growth",
                    term=i + 1,
                )
            Ic.append(i)
    return RestrictedSystem(P, x, tuple(t_star), tuple(I), tuple(Ic), tuple(plus))


@dataclass(frozen=True)
class LiftedSet:
    """``{(x, y) in Omega x R : Psi(x) - y = 0, g <= 0, h = 0}`` anchored at ``(x*, Psi(x*))``."""

    base: ProblemSpec
    x_star: tuple
    y_star: float

    @property
    def dim(self):
        return self.base.dim + 1

    @property
    def anchor(self):
        return np.array([float(v) for v in self.x_star] + [self.y_star])

    def target(self):
        P = self.base
        d = P.dim
        eq = [lambda Z: P.batch_psi(Z[:, :d]) - Z[:, d]] + [lambda Z, c=c: c(Z[:, :d]) for c in P.eq]
        ineq = [lambda Z, c=c: c(Z[:, :d]) for c in P.ineq]
        if not P.omega.is_whole:
            raise Unsupported("distance to the lifted set intersected with Omega")
        return SmoothTarget(d + 1, eq, ineq)


def build_lifted_set(P: ProblemSpec, x_star) -> LiftedSet:
    x = tuple(frac(v) for v in x_star)
    require_feasible(P, x)
    return LiftedSet(P, x, float(P.psi_value(x)))


# -- error bound ---------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorBoundEstimate:
    kappa_hat: float
    delta: float
    table: tuple  # (radius, max ratio, positive samples)
    verdict: str
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "kappa_hat": self.kappa_hat,
            "delta": self.delta,
            "table": [{"radius": r, "max_ratio": m, "positive_samples": n} for r, m, n in self.table],
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


def estimate_error_bound(system, anchor=None, radii=DEFAULT_LADDER, samples=200, seed=42) -> ErrorBoundEstimate:
    """Empirical ``kappa`` from ``dist(z)/residual(z)`` on shrinking balls.

    ``system`` is a ProblemSpec (plain feasible set), a RestrictedSystem, a
    LiftedSet, or any target with ``distance``/``residual``/``domain``.
    """
    if isinstance(system, ProblemSpec):
        target = feasible_set_target(system)
        if anchor is None:
            anchor = system.point
    elif isinstance(system, (RestrictedSystem, LiftedSet)):
        target = system.target()
        if anchor is None:
            anchor = system.anchor
    else:
        target = system
    if anchor is None:
        raise Unsupported("an anchor point is required")
    anchor = np.array([float(v) for v in anchor])
    table, notes = [], []
    total_pos = 0
    for k, r in enumerate(radii):
        rng = np.random.default_rng([seed, k])
        # outer half-shell: each rung probes its own scale
        Z = ball_samples(rng, anchor, r, samples, r / 2)
        Z = Z[target.domain(Z)]
        res = target.residual(Z)
        best, pos = 0.0, 0
        for z, rz in zip(Z, res):
            if not rz > 0:
                continue
            try:
                dist = target.distance(z)
            except ProjectionFailure as exc:
                notes.append(f"radius {r}: {exc}")
                return ErrorBoundEstimate(float("nan"), float(radii[0]), tuple(table), DEGENERATE, tuple(notes))
            pos += 1
            best = max(best, dist / rz)
        total_pos += pos
        table.append((float(r), best, pos))
    if total_pos < MIN_POSITIVE:
        return ErrorBoundEstimate(float("nan"), float(radii[0]), tuple(table), DEGENERATE, ("too few positive-residual samples",))
    kappa = max(m for _, m, _ in table)
    tail = [m for _, m, n in table[-3:] if n > 0]
    growing = len(tail) >= 2 and tail[0] > 0 and tail[-1] / tail[0] > GROWTH_FACTOR
    return ErrorBoundEstimate(kappa, float(radii[0]), tuple(table), GROWING if growing else BOUNDED, tuple(notes))


# -- exactness validation and rho0 ---------------------------------------------------


@dataclass
class ExactnessRecord:
    passed: bool
    rho: float
    value_star: float
    worst_gap: float
    worst_point: list | None
    samples: int
    probes: int

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "rho": self.rho,
            "value_star": self.value_star,
            "worst_gap": self.worst_gap,
            "worst_point": self.worst_point,
            "samples": self.samples,
            "probes": self.probes,
        }


@dataclass
class SampleSet:
    """Points with their base values and residuals; reused across rho."""

    X: np.ndarray
    base: np.ndarray
    residual: np.ndarray
    n_samples: int
    n_probes: int
    base_star: float
    residual_star: float


def _omega_vertices(P: ProblemSpec):
    out = []
    for piece in P.omega.pieces:
        gens = polyhedron_generators(list(piece.A), list(piece.b), [], [], P.dim)
        if gens is not None:
            out.extend(gens[0])
    return out


def exactness_samples(PP: PenaltyProblem, x_star, radius, samples, seed, max_blocks=1000) -> SampleSet:
    P = PP.base
    xs = np.array([float(v) for v in x_star])
    d = P.dim
    parts, got = [], 0
    if radius > 0 and samples > 0:
        for blk in range(max_blocks):
            rng = np.random.default_rng([seed, blk])
            Z = ball_samples(rng, xs, radius, BLOCK)
            Z = Z[P.omega.member_mask(Z, 1e-12)]
            parts.append(Z[: samples - got])
            got += min(Z.shape[0], samples - got)
            if got >= samples:
                break
    probes = []
    if radius > 0:
        for k in range(d):
            for s in (1.0, -1.0):
                y = xs.copy()
                y[k] += s * radius
                probes.append(y)
        for v in _omega_vertices(P) if not P.omega.is_whole else []:
            vf = np.array([float(t) for t in v])
            if np.linalg.norm(vf - xs) <= radius:
                probes.append(vf)
    if probes:
        Q = np.array(probes)
        Q = Q[P.omega.member_mask(Q, 1e-12)]
        parts.append(Q)
    X = np.vstack(parts) if parts else np.zeros((0, d))
    return SampleSet(
        X,
        PP.base_value(X),
        PP.residual(X),
        got,
        X.shape[0] - got,
        float(PP.base_value(xs[None, :])[0]),
        float(PP.residual(xs[None, :])[0]),
    )


def _judge(S: SampleSet, rho: float) -> ExactnessRecord:
    star = S.base_star + rho * S.residual_star
    if S.X.shape[0] == 0:
        return ExactnessRecord(True, rho, star, 0.0, None, 0, 0)
    vals = S.base + rho * S.residual
    gaps = vals - star
    k = int(np.argmin(gaps))
    ok = bool(gaps[k] >= -EXACTNESS_SLACK)
    return ExactnessRecord(ok, rho, star, float(gaps[k]), S.X[k].tolist(), S.n_samples, S.n_probes)


def validate_exactness(PP: PenaltyProblem, x_star, radius=0.1, samples=10_000, seed=42) -> ExactnessRecord:
    """Sampled check that ``x_star`` minimizes the penalized objective on the ball."""
    require_feasible(PP.base, x_star)
    S = exactness_samples(PP, x_star, radius, samples, seed)
    return _judge(S, float(PP.rho))


@dataclass
class Rho0Result:
    rho0: float | None
    status: str  # FOUND | CAP_REACHED
    records: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"rho0": self.rho0, "status": self.status, "ladder": [r.to_dict() for r in self.records]}


def find_rho0(P: ProblemSpec, x_star, radius=0.1, samples=10_000, seed=42, rho_cap=2.0**10, norm=None) -> Rho0Result:
    """Smallest ``rho`` in ``1, 2, 4, ...`` passing :func:`validate_exactness`."""
    require_feasible(P, x_star)
    PP = build_penalty(P, 1.0, norm)
    S = exactness_samples(PP, x_star, radius, samples, seed)
    records = []
    rho = 1.0
    while rho <= rho_cap:
        rec = _judge(S, rho)
        records.append(rec)
        if rec.passed:
            return Rho0Result(rho, "FOUND", records)
        rho *= 2
    return Rho0Result(None, "CAP_REACHED", records)
