"""Exact rational two-phase simplex (Bland's rule) with Farkas certificates.

Problem form::

    min / max  c^T x
    s.t.       A_le x <= b_le
               A_eq x  = b_eq
               x_j >= 0 for j in ``nonneg``, other variables free

Infeasibility is reported with a Farkas vector ``(u, v)``: ``u >= 0`` on the
``<=`` rows, ``v`` free on the ``=`` rows, such that ``(u^T A_le + v^T A_eq)_j``
is ``>= 0`` for nonnegative variables and ``0`` for free variables while
``u^T b_le + v^T b_eq < 0``. Both kinds of witness re-verify by exact
substitution through :func:`verify`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ..errors import DimMismatch, PivotLimit
from ..rational import dot, frac

OPTIMAL = "OPTIMAL"
INFEASIBLE = "INFEASIBLE"
UNBOUNDED = "UNBOUNDED"

FEASIBLE = "FEASIBLE"

_ZERO = Fraction(0)
_ONE = Fraction(1)


def pivot_limit() -> int:
    try:
        return int(os.environ.get("NLQUAL_LP_PIVOT_LIMIT", "1000000"))
    except ValueError:
        return 1_000_000


@dataclass(frozen=True)
class LP:
    c: tuple
    A_le: tuple = ()
    b_le: tuple = ()
    A_eq: tuple = ()
    b_eq: tuple = ()
    nonneg: frozenset = frozenset()
    maximize: bool = False

    @property
    def n(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class LPResult:
    status: str
    x: tuple | None = None
    objective: Fraction | None = None
    farkas: tuple | None = None  # (u over <= rows, v over = rows)
    pivots: int = 0

    @property
    def feasible(self) -> bool:
        return self.status in (OPTIMAL, UNBOUNDED)

    def certificate(self) -> "LPCertificate":
        if self.feasible:
            return LPCertificate(FEASIBLE, self.x)
        return LPCertificate(INFEASIBLE, self.farkas[0] + self.farkas[1])


@dataclass(frozen=True)
class LPCertificate:
    """Status plus primal witness (FEASIBLE) or concatenated Farkas vector."""

    status: str
    witness: tuple = field(default=())


def make_lp(c, A_le=(), b_le=(), A_eq=(), b_eq=(), nonneg=None, maximize=False) -> LP:
    n = len(c)
    A_le = tuple(tuple(frac(v) for v in row) for row in A_le)
    A_eq = tuple(tuple(frac(v) for v in row) for row in A_eq)
    b_le = tuple(frac(v) for v in b_le)
    b_eq = tuple(frac(v) for v in b_eq)
    if len(A_le) != len(b_le) or len(A_eq) != len(b_eq):
        raise DimMismatch("row count does not match right-hand side length")
    for row in A_le + A_eq:
        if len(row) != n:
            raise DimMismatch(f"constraint row has {len(row)} entries, expected {n}")
    nn = frozenset(range(n)) if nonneg is None else frozenset(nonneg)
    return LP(tuple(frac(v) for v in c), A_le, b_le, A_eq, b_eq, nn, maximize)


def lp_solve(c, A_le=(), b_le=(), A_eq=(), b_eq=(), nonneg=(), maximize=False) -> LPResult:
    """Solve exactly. Variables are free unless listed in ``nonneg``."""
    lp = make_lp(c, A_le, b_le, A_eq, b_eq, nonneg, maximize)
    return solve(lp)


def feasibility(A_le=(), b_le=(), A_eq=(), b_eq=(), n=None, nonneg=()) -> LPResult:
    if n is None:
        rows = list(A_le) + list(A_eq)
        n = len(rows[0]) if rows else 0
    return lp_solve([0] * n, A_le, b_le, A_eq, b_eq, nonneg)


class _Tableau:
    """Dense tableau: rows ``T[i]`` with rhs ``b[i]``, reduced costs ``rc``."""

    def __init__(self, T, b, basis, limit):
        self.T = T
        self.b = b
        self.basis = basis
        self.pivots = 0
        self.limit = limit

    def set_costs(self, cost):
        ncol = len(cost)
        rc = list(cost)
        obj = _ZERO
        for i, bv in enumerate(self.basis):
            cb = cost[bv]
            if cb != 0:
                row = self.T[i]
                for j in range(ncol):
                    if row[j] != 0:
                        rc[j] -= cb * row[j]
                obj += cb * self.b[i]
        self.rc = rc
        self.obj = obj

    def pivot(self, r, col):
        self.pivots += 1
        if self.pivots > self.limit:
            raise PivotLimit(f"simplex exceeded {self.limit} pivots")
        row = self.T[r]
        pv = row[col]
        if pv != 1:
            row = [v / pv for v in row]
            self.T[r] = row
            self.b[r] /= pv
        nz = [j for j, v in enumerate(row) if v != 0]
        for i in range(len(self.T)):
            if i == r:
                continue
            f = self.T[i][col]
            if f != 0:
                other = self.T[i]
                for j in nz:
                    other[j] -= f * row[j]
                self.b[i] -= f * self.b[r]
        f = self.rc[col]
        if f != 0:
            for j in nz:
                self.rc[j] -= f * row[j]
            self.obj += f * self.b[r]
        self.basis[r] = col

    def run(self, allowed):
        """Bland's rule minimization over columns in ``allowed``.
        Returns None at optimality or the entering column if unbounded."""
        while True:
            col = next((j for j in allowed if self.rc[j] < 0), None)
            if col is None:
                return None
            best = None
            for i, row in enumerate(self.T):
                a = row[col]
                if a > 0:
                    ratio = self.b[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return col
            self.pivot(best[1], col)


def solve(lp: LP) -> LPResult:
    n = lp.n
    # standard-form columns: (original var, sign)
    cols: list[tuple[int, int]] = []
    for j in range(n):
        cols.append((j, 1))
        if j not in lp.nonneg:
            cols.append((j, -1))
    nx = len(cols)
    rows = [(row, rhs, True) for row, rhs in zip(lp.A_le, lp.b_le)]
    rows += [(row, rhs, False) for row, rhs in zip(lp.A_eq, lp.b_eq)]
    m = len(rows)
    n_slack = len(lp.A_le)
    ncol = nx + n_slack + m  # structural, slacks, artificials
    art0 = nx + n_slack
    T, b, signs = [], [], []
    for i, (row, rhs, is_le) in enumerate(rows):
        s = -1 if rhs < 0 else 1
        signs.append(s)
        line = [_ZERO] * ncol
        for k, (j, sg) in enumerate(cols):
            line[k] = s * sg * row[j]
        if is_le:
            line[nx + i] = Fraction(s)
        line[art0 + i] = _ONE
        T.append(line)
        b.append(s * rhs)
    tab = _Tableau(T, b, [art0 + i for i in range(m)], pivot_limit())

    # phase I
    cost1 = [_ZERO] * art0 + [_ONE] * m
    tab.set_costs(cost1)
    tab.run(range(ncol))
    if tab.obj > 0:
        y = [_ONE - tab.rc[art0 + i] for i in range(m)]
        w = [-y[i] * signs[i] for i in range(m)]
        return LPResult(INFEASIBLE, farkas=(tuple(w[:n_slack]), tuple(w[n_slack:])), pivots=tab.pivots)

    # drive artificials out of the basis; drop redundant rows
    keep = []
    for i in range(m):
        if tab.basis[i] >= art0:
            col = next((j for j in range(art0) if tab.T[i][j] != 0), None)
            if col is None:
                continue
            tab.pivot(i, col)
        keep.append(i)
    tab.T = [tab.T[i] for i in keep]
    tab.b = [tab.b[i] for i in keep]
    tab.basis = [tab.basis[i] for i in keep]

    sgn = -1 if lp.maximize else 1
    cost2 = [_ZERO] * ncol
    for k, (j, s) in enumerate(cols):
        cost2[k] = sgn * s * lp.c[j]
    tab.set_costs(cost2)
    unbounded = tab.run(range(art0))

    xs = [_ZERO] * ncol
    for i, bv in enumerate(tab.basis):
        xs[bv] = tab.b[i]
    x = [_ZERO] * n
    for k, (j, s) in enumerate(cols):
        x[j] += s * xs[k]
    x = tuple(x)
    if unbounded is not None:
        return LPResult(UNBOUNDED, x=x, pivots=tab.pivots)
    return LPResult(OPTIMAL, x=x, objective=dot(lp.c, x), pivots=tab.pivots)


def verify(lp: LP, result: LPResult) -> bool:
    """Exact re-verification of a primal witness or Farkas certificate."""
    if result.feasible:
        x = result.x
        if any(x[j] < 0 for j in lp.nonneg):
            return False
        if any(dot(r, x) > rhs for r, rhs in zip(lp.A_le, lp.b_le)):
            return False
        if any(dot(r, x) != rhs for r, rhs in zip(lp.A_eq, lp.b_eq)):
            return False
        if result.status == OPTIMAL and result.objective != dot(lp.c, x):
            return False
        return True
    u, v = result.farkas
    if len(u) != len(lp.A_le) or len(v) != len(lp.A_eq):
        return False
    if any(ui < 0 for ui in u):
        return False
    for j in range(lp.n):
        comb = sum((ui * r[j] for ui, r in zip(u, lp.A_le)), _ZERO)
        comb += sum((vi * r[j] for vi, r in zip(v, lp.A_eq)), _ZERO)
        if j in lp.nonneg:
            if comb < 0:
                return False
        elif comb != 0:
            return False
    return dot(u, lp.b_le) + dot(v, lp.b_eq) < 0
