"""Proximal operators of the bridge penalty and a proximal-gradient solver
for penalized problems with separable non-Lipschitz terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import Unsupported
from .model import LINEAR, POW_ABS, POW_PLUS, ProblemSpec
from .penalty import PenaltyProblem
from .setalg.project import project_h

CONVERGED = "CONVERGED"
MAX_ITERS = "MAX_ITERS"
NEWTON_STEPS = 200


# -- 1-D prox --------------------------------------------------------------------


def _obj(p, lam, v, t):
    return 0.5 * (t - v) ** 2 + lam * abs(t) ** p


def _half_root(lam: float, v: float):
    """Largest positive stationary point of ``(t-v)^2/2 + lam*sqrt(t)`` for ``v > 0``, or None.

    With ``t = s^2`` stationarity is the cubic ``s^3 - v s + lam/2 = 0``;
    the largest root comes from the trigonometric form.
    """
    if v <= 0 or 4 * v**3 <= 27 * (lam / 2) ** 2:
        return None
    arg = -(3 * lam / (4 * v)) * math.sqrt(3 / v)
    s = 2 * math.sqrt(v / 3) * math.cos(math.acos(max(-1.0, min(1.0, arg))) / 3)
    return s * s


def _branch_root(p: float, lam: float, v: float):
    """Local minimizer on ``t > 0`` of ``(t-v)^2/2 + lam*t^p``, or None.

    ``psi(t) = t + lam*p*t^(p-1)`` is convex with minimum at ``tbar``; the
    local minimizer is the root of ``psi(t) = v`` to the right of ``tbar``.
    """
    if v <= 0:
        return None
    if p == 0.5:
        return _half_root(lam, v)
    tbar = (lam * p * (1 - p)) ** (1 / (2 - p))
    psi = lambda t: t + lam * p * t ** (p - 1) - v
    if psi(tbar) >= 0:
        return None
    lo, hi = tbar, max(v, tbar)
    t = hi
    for _ in range(NEWTON_STEPS):
        f = psi(t)
        if f > 0:
            hi = t
        else:
            lo = t
        df = 1 + lam * p * (p - 1) * t ** (p - 2)
        nt = t - f / df if df > 0 else 0.5 * (lo + hi)
        if not lo < nt < hi:
            nt = 0.5 * (lo + hi)
        if abs(nt - t) <= 1e-15 * max(1.0, t):
            return nt
        t = nt
    # bisection fallback
    while hi - lo > 1e-15 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if psi(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def prox_pow_abs(p, lam: float, v: float) -> float:
    """Global minimizer of ``(t - v)^2/2 + lam*|t|^p``; ties go to 0."""
    p = float(Fraction(p)) if isinstance(p, (str, Fraction)) else float(p)
    if lam <= 0:
        return float(v)
    if not 0 < p <= 1:
        raise Unsupported(f"prox needs 0 < p <= 1, got {p}")
    if p == 1:
        return math.copysign(max(abs(v) - lam, 0.0), v) if abs(v) > lam else 0.0
    r = _branch_root(p, lam, abs(v))
    if r is None or not _obj(p, lam, abs(v), r) < _obj(p, lam, abs(v), 0.0):
        return 0.0
    return math.copysign(r, v)


def prox_1d(kind: str, p, lam: float, v: float, lo=-math.inf, hi=math.inf) -> float:
    """Minimizer of ``(u - v)^2/2 + lam*phi(u)`` over ``[lo, hi]``.

    ``phi`` is ``|u|^p`` (POW_ABS) or ``(u_+)^p`` (POW_PLUS). Candidates are
    the interval ends, the kink, and the local minimizer of each sign branch.
    """
    p = float(p)
    plus = kind == POW_PLUS
    if lam <= 0:
        return min(max(v, lo), hi)

    def phi(u):
        if plus:
            return max(u, 0.0) ** p
        return abs(u) ** p

    obj = lambda u: 0.5 * (u - v) ** 2 + lam * phi(u)
    cands = [0.0]
    if p == 1:
        cands += [v - lam, v + lam] if not plus else [v - lam, v]
    else:
        r = _branch_root(p, lam, v)
        if r is not None:
            cands.append(r)
        if plus:
            cands.append(min(v, 0.0))
        else:
            r = _branch_root(p, lam, -v)
            if r is not None:
                cands.append(-r)
    cands += [lo, hi]
    best = None
    for u in cands:
        if not (lo <= u <= hi) or not math.isfinite(u):
            continue
        key = (obj(u), u != 0.0, abs(u))
        if best is None or key < best[0]:
            best = (key, u)
    if best is None:
        return min(max(0.0, lo), hi)
    # ties within rounding go to zero
    if lo <= 0.0 <= hi and obj(0.0) <= best[0][0]:
        return 0.0
    return best[1]


# -- solver ------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverConfig:
    step_rule: str = "backtracking"
    step: float = 1.0
    beta: float = 0.5
    c: float = 1e-4
    max_iters: int = 5000
    tol: float = 1e-8
    starts: int = 8
    seed: int = 42
    smoothing: tuple = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    polish: bool = True


@dataclass
class SolveResult:
    x: np.ndarray
    objective: float
    iterations: int
    status: str
    start: int
    history: list = field(default_factory=list)  # (stage, smoothed objective)

    def to_dict(self) -> dict:
        return {
            "x": [float(v) for v in self.x],
            "objective": float(self.objective),
            "iterations": self.iterations,
            "status": self.status,
            "start": self.start,
        }


@dataclass
class _Structure:
    prox_coord: dict  # k -> (kind, p, scale c, shift b)
    linear: np.ndarray  # gradient of linear outer terms
    linear_const: float


def _structure(P: ProblemSpec) -> _Structure:
    d = P.dim
    prox, lin, const = {}, np.zeros(d), 0.0
    for i, term in enumerate(P.phi):
        o, inner = term.outer, term.inner
        if o.kind == LINEAR:
            if not inner.is_affine:
                raise Unsupported("UNSUPPORTED_STRUCTURE: linear outer with a smooth inner map")
            lin += float(o.c) * np.array([float(v) for v in inner.a])
            const += float(o.c) * float(inner.b)
            continue
        if o.kind not in (POW_ABS, POW_PLUS) or not inner.is_affine:
            raise Unsupported(f"UNSUPPORTED_STRUCTURE: term {i + 1} is not a separable bridge term")
        nz = [k for k, v in enumerate(inner.a) if v != 0]
        if len(nz) != 1:
            raise Unsupported(f"UNSUPPORTED_STRUCTURE: term {i + 1} does not act on a single coordinate")
        k = nz[0]
        if k in prox:
            raise Unsupported(f"UNSUPPORTED_STRUCTURE: coordinate {k + 1} carries two non-Lipschitz terms")
        prox[k] = (o.kind, float(o.p), float(inner.a[k]), float(inner.b))
    return _Structure(prox, lin, const)


def _box_bounds(piece, d):
    """Per-coordinate bounds if ``piece`` is an axis-aligned box, else None."""
    lo, hi = np.full(d, -np.inf), np.full(d, np.inf)
    A, b = piece.float_data()
    for row, bi in zip(A, b):
        nz = np.flatnonzero(row)
        if nz.size != 1:
            return None
        k = nz[0]
        if row[k] > 0:
            hi[k] = min(hi[k], bi / row[k])
        else:
            lo[k] = max(lo[k], bi / row[k])
    return lo, hi


class _Runner:
    def __init__(self, PP: PenaltyProblem, cfg: SolverConfig):
        self.PP, self.P, self.cfg = PP, PP.base, cfg
        self.S = _structure(self.P)
        self.rho = float(PP.rho)
        d = self.P.dim
        self.d = d
        self.G = [(np.array([float(v) for v in c.a]), float(c.b)) if c.is_affine else None for c in self.P.ineq]
        self.H = [(np.array([float(v) for v in c.a]), float(c.b)) if c.is_affine else None for c in self.P.eq]

    # smooth part: f + linear terms + rho * smoothed residual norm
    def _fgrad(self, x):
        P = self.P
        if P.smooth is None:
            return 0.0, np.zeros(self.d)
        h = 1e-6
        E = np.eye(self.d) * h
        X = np.vstack([x[None, :], x + E, x - E])
        v = P.smooth(X)
        return float(v[0]), (v[1 : self.d + 1] - v[self.d + 1 :]) / (2 * h)

    def _cons(self, cons, fns, x):
        vals, grads = [], []
        for c, fn in zip(cons, fns):
            if fn is not None:
                a, b = fn
                vals.append(float(a @ x + b))
                grads.append(a)
            else:
                vals.append(float(c(x[None, :])[0]))
                grads.append(np.array(c.expr.grad_fd(x)))
        return np.array(vals), np.array(grads).reshape(len(vals), self.d)

    def _norm_s(self, s, J, mu):
        """Smoothed norm of a nonnegative smoothed vector ``s`` with Jacobian ``J``."""
        if s.size == 0:
            return 0.0, np.zeros(self.d)
        norm = self.PP.norm
        if norm == "l1":
            return float(s.sum()), J.sum(axis=0)
        if norm == "l2":
            r = math.sqrt(float(s @ s) + mu * mu)
            return r - mu, (s @ J) / r
        m = s.max()
        w = np.exp((s - m) / mu)
        return float(m + mu * math.log(w.sum())), (w / w.sum()) @ J

    def smooth(self, x, mu):
        fv, fg = self._fgrad(x)
        val = fv + float(self.S.linear @ x) + self.S.linear_const
        grad = fg + self.S.linear
        if self.rho:
            g, Jg = self._cons(self.P.ineq, self.G, x)
            if g.size:
                r = np.sqrt(g * g + mu * mu)
                sp = 0.5 * (g + r)
                v, gr = self._norm_s(sp, (0.5 * (1 + g / r))[:, None] * Jg, mu)
                val += self.rho * v
                grad = grad + self.rho * gr
            h, Jh = self._cons(self.P.eq, self.H, x)
            if h.size:
                r = np.sqrt(h * h + mu * mu)
                v, gr = self._norm_s(r - mu, (h / r)[:, None] * Jh, mu)
                val += self.rho * v
                grad = grad + self.rho * gr
        return val, grad

    def lipschitz(self, x, mu, pairs=8):
        """Gradient Lipschitz estimate: sampled for f, analytic bound for the smoothed residuals."""
        rng = np.random.default_rng(self.cfg.seed)
        lf = 0.0
        if self.P.smooth is not None:
            _, g0 = self._fgrad(x)
            for _ in range(pairs):
                dz = 1e-3 * rng.standard_normal(self.d)
                _, g1 = self._fgrad(x + dz)
                lf = max(lf, float(np.linalg.norm(g1 - g0) / np.linalg.norm(dz)))
        _, Jg = self._cons(self.P.ineq, self.G, x)
        _, Jh = self._cons(self.P.eq, self.H, x)
        lp = self.rho * (float(np.sum(Jg * Jg)) + float(np.sum(Jh * Jh))) / mu
        return max(lf + lp, 1e-12)

    def nonsmooth(self, x):
        tot = 0.0
        for k, (kind, p, c, b) in self.S.prox_coord.items():
            w = c * x[k] + b
            tot += (max(w, 0.0) if kind == POW_PLUS else abs(w)) ** p
        return tot

    def prox(self, y, step, piece):
        """Prox of ``step * Psi`` plus the indicator of ``piece``."""
        x = y.copy()
        box = self._box
        lo, hi = box if box is not None else (np.full(self.d, -np.inf), np.full(self.d, np.inf))
        for k in range(self.d):
            if k in self.S.prox_coord:
                kind, p, c, b = self.S.prox_coord[k]
                # substitute w = c*u + b: (w - (c*y+b))^2/(2c^2) + step*phi(w)
                wl, wh = sorted((c * lo[k] + b, c * hi[k] + b))
                w = prox_1d(kind, p, step * c * c, c * y[k] + b, wl, wh)
                x[k] = (w - b) / c
            else:
                x[k] = min(max(y[k], lo[k]), hi[k])
        if piece is not None and box is None:
            A, bb = piece.float_data()
            x, _ = project_h(A, bb, np.zeros((0, self.d)), np.zeros(0), x)
        return x

    def run(self, x0, piece):
        cfg = self.cfg
        self._box = _box_bounds(piece, self.d) if piece is not None else None
        x = self.prox(np.asarray(x0, dtype=float), 0.0, piece) if piece is not None else np.asarray(x0, dtype=float).copy()
        step = cfg.step
        it = 0
        history = []
        stopped = False
        for stage, mu in enumerate(cfg.smoothing):
            cap = min(cfg.step, 1.0 / self.lipschitz(x, mu))
            step = min(step, cap) if stage else cap
            sv, sg = self.smooth(x, mu)
            F = sv + self.nonsmooth(x)
            history.append((stage, F))
            x_prev, t = x, 1.0
            while it < cfg.max_iters:
                it += 1
                # monotone momentum: try the extrapolated point, fall back to x
                t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
                y = x + ((t - 1.0) / t_next) * (x - x_prev)
                base = [(y, None)] if np.any(y != x) else []
                for yy, _ in base + [(x, None)]:
                    yv, yg = (sv, sg) if yy is x else self.smooth(yy, mu)
                    while True:
                        xn = self.prox(yy - step * yg, step, piece)
                        nv, ng = self.smooth(xn, mu)
                        Fn = nv + self.nonsmooth(xn)
                        dx = xn - yy
                        ok = Fn <= F - cfg.c / step * float(dx @ dx) + 1e-15 * max(1.0, abs(F))
                        if cfg.step_rule == "fixed" or ok or step < 1e-16:
                            break
                        step *= cfg.beta
                    if ok or yy is x:
                        break
                t = 1.0 if (base and yy is x) else t_next
                change = float(np.linalg.norm(xn - x))
                x_prev, x, sv, sg, F = x, xn, nv, ng, Fn
                history.append((stage, F))
                if change <= cfg.tol or float(np.linalg.norm(dx)) <= mu * step:
                    break
                if cfg.step_rule != "fixed":
                    step = min(step / cfg.beta, cap)
            else:
                stopped = True
                break
        return x, it, (MAX_ITERS if stopped else CONVERGED), history

    # -- active-set Newton polish ----------------------------------------------

    def polish(self, x, piece, act_tol=1e-3, iters=50):
        d = self.d
        fixed = {k for k, (kind, p, c, b) in self.S.prox_coord.items() if c * x[k] + b == 0.0 or (kind == POW_PLUS and c * x[k] + b < 0)}
        free = [k for k in range(d) if k not in fixed]
        if not free:
            return x
        g, Jg = self._cons(self.P.ineq, self.G, x)
        if np.any(g > act_tol):
            return x
        rows = [("g", i) for i in range(g.size) if abs(g[i]) <= act_tol]
        rows += [("h", j) for j in range(len(self.P.eq))]
        pieceA = None
        if piece is not None:
            A, b = piece.float_data()
            act = np.flatnonzero(np.abs(A @ x - b) <= act_tol)
            pieceA = (A[act], b[act])

        def row_data(y):
            g, Jg = self._cons(self.P.ineq, self.G, y)
            h, Jh = self._cons(self.P.eq, self.H, y)
            vals, J = [], []
            for kind, i in rows:
                vals.append(g[i] if kind == "g" else h[i])
                J.append(Jg[i] if kind == "g" else Jh[i])
            if pieceA is not None and pieceA[0].size:
                vals += list(pieceA[0] @ y - pieceA[1])
                J += list(pieceA[0])
            return np.array(vals), np.array(J).reshape(len(vals), d)

        def red_grad(y):
            _, fg = self._fgrad(y)
            gr = fg + self.S.linear
            for k in free:
                if k in self.S.prox_coord:
                    kind, p, c, b = self.S.prox_coord[k]
                    w = c * y[k] + b
                    gr[k] += p * abs(w) ** (p - 1) * math.copysign(1.0, w) * c
            return gr[free]

        y = x.copy()
        for _ in range(iters):
            gr = red_grad(y)
            H = np.empty((len(free), len(free)))
            eps = 1e-6
            for a, k in enumerate(free):
                e = np.zeros(d)
                e[k] = eps
                H[:, a] = (red_grad(y + e) - red_grad(y - e)) / (2 * eps)
            H = 0.5 * (H + H.T)
            r, J = row_data(y)
            Jf = J[:, free]
            K = np.block([[H, Jf.T], [Jf, np.zeros((Jf.shape[0], Jf.shape[0]))]]) if Jf.size else H
            rhs = np.concatenate([-gr, -r]) if Jf.size else -gr
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
            delta = sol[: len(free)]
            y[free] += delta
            if np.linalg.norm(delta) <= 1e-15 * max(1.0, np.linalg.norm(y)):
                break
        # keep the sign pattern of the bridge coordinates
        for k in free:
            if k in self.S.prox_coord:
                kind, p, c, b = self.S.prox_coord[k]
                if np.sign(c * y[k] + b) != np.sign(c * x[k] + b):
                    return x
        if not np.all(np.isfinite(y)) or (piece is not None and piece.residuals(y) > 1e-12):
            return x
        if self.PP(y[None, :])[0] <= self.PP(x[None, :])[0] + 1e-12:
            return y
        return x


def _starts(P: ProblemSpec, x0, cfg: SolverConfig):
    rng = np.random.default_rng(cfg.seed)
    x0 = np.asarray(x0, dtype=float)
    scale = 0.1 * (1 + np.linalg.norm(x0))
    out = [x0]
    for _ in range(max(cfg.starts, 1) - 1):
        out.append(x0 + scale * rng.standard_normal(x0.size) / math.sqrt(max(x0.size, 1)))
    return out, scale


def solve(PP: PenaltyProblem, x0=None, cfg: SolverConfig | None = None) -> SolveResult:
    """Multistart proximal gradient with smoothing continuation on the residual norm."""
    cfg = cfg or SolverConfig()
    P = PP.base
    if x0 is None:
        x0 = P.point if P.point is not None else [0] * P.dim
    x0 = [float(v) for v in x0]
    runner = _Runner(PP, cfg)
    starts, scale = _starts(P, x0, cfg)
    if P.omega.is_whole:
        pieces = [None]
    else:
        pieces = []
        for piece in P.omega.pieces:
            A, b = piece.float_data()
            _, dist = project_h(A, b, np.zeros((0, P.dim)), np.zeros(0), np.array(x0))
            if dist <= 10 * scale:
                pieces.append(piece)
        pieces = pieces or list(P.omega.pieces)
    best = None
    idx = 0
    for s in starts:
        for piece in pieces:
            x, it, status, hist = runner.run(s, piece)
            if cfg.polish:
                x = runner.polish(x, piece)
            val = float(PP(x[None, :])[0])
            if best is None or val < best.objective - 1e-12:
                best = SolveResult(x, val, it, status, idx, hist)
            idx += 1
    return best
