"""Finite unions of convex polyhedra in generator form over the rationals."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from ..errors import DimMismatch, NotACone, SchemaError
from ..rational import (
    Vec,
    dot,
    fmt_vec,
    frac,
    is_zero,
    neg,
    primitive,
    rref,
    sign_normalized,
    sub,
    scale,
    unit,
    vec,
    zeros,
)
from . import lp as _lp


def _project_out(v: Vec, line_basis: list[Vec], gram_inv) -> Vec:
    """Orthogonal projection of ``v`` onto the complement of span(line_basis)."""
    if not line_basis:
        return v
    coeffs = [dot(l, v) for l in line_basis]
    k = len(line_basis)
    w = [sum((gram_inv[i][j] * coeffs[j] for j in range(k)), Fraction(0)) for i in range(k)]
    out = list(v)
    for wi, l in zip(w, line_basis):
        if wi != 0:
            for t in range(len(out)):
                out[t] -= wi * l[t]
    return tuple(out)


def _invert(mat):
    n = len(mat)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    red, _ = rref(aug, 2 * n)
    return [row[n:] for row in red]


@dataclass(frozen=True)
class Polyhedron:
    """``conv(points) + cone(rays) + span(lines)``; empty iff ``points`` is empty."""

    points: tuple
    rays: tuple = ()
    lines: tuple = ()

    @property
    def dim(self) -> int:
        for group in (self.points, self.rays, self.lines):
            if group:
                return len(group[0])
        return 0

    @property
    def is_cone(self) -> bool:
        return all(is_zero(p) for p in self.points)

    def canonical(self) -> "Polyhedron":
        d = self.dim
        lines = [sign_normalized(l) for l in self.lines if not is_zero(l)]
        rays = [primitive(r) for r in self.rays if not is_zero(r)]
        # opposite ray pairs are lines
        while True:
            rs = set(rays)
            pair = next((r for r in rays if neg(r) in rs), None)
            if pair is None:
                break
            lines.append(sign_normalized(pair))
            rays = [r for r in rays if r != pair and r != neg(pair)]
        if lines:
            basis, _ = rref(lines, d)
            basis = [sign_normalized(b) for b in basis]
        else:
            basis = []
        if len(basis) == d and d > 0:
            return Polyhedron((zeros(d),), (), tuple(unit(d, k) for k in range(d)))
        if basis:
            gram = [[dot(a, b) for b in basis] for a in basis]
            ginv = _invert(gram)
            rays = [_project_out(r, basis, ginv) for r in rays]
            rays = [primitive(r) for r in rays if not is_zero(r)]
            points = [_project_out(p, basis, ginv) for p in self.points]
        else:
            points = list(self.points)
        return Polyhedron(
            tuple(sorted(set(points))),
            tuple(sorted(set(rays))),
            tuple(sorted(set(basis))),
        )

    def negate(self) -> "Polyhedron":
        return Polyhedron(tuple(neg(p) for p in self.points), tuple(neg(r) for r in self.rays), self.lines)

    def image(self, matrix: Sequence[Sequence[Fraction]]) -> "Polyhedron":
        """Image under the linear map ``v -> matrix @ v``."""

        def f(v):
            return tuple(dot(row, v) for row in matrix)

        return Polyhedron(
            tuple(f(p) for p in self.points), tuple(f(r) for r in self.rays), tuple(f(l) for l in self.lines)
        )

    def to_setspec(self) -> dict:
        if self.is_cone:
            d = self.dim
            if len(self.lines) == d and d > 0:
                return {"kind": "reals"}
            return {"kind": "cone", "rays": [fmt_vec(r) for r in self.rays], "lines": [fmt_vec(l) for l in self.lines]}
        if not self.rays and not self.lines:
            return {"kind": "points", "pts": [fmt_vec(p) for p in self.points]}
        return {
            "kind": "polyhedron",
            "points": [fmt_vec(p) for p in self.points],
            "rays": [fmt_vec(r) for r in self.rays],
            "lines": [fmt_vec(l) for l in self.lines],
        }


@dataclass(frozen=True)
class PolySet:
    """Union of pieces; no pieces means EMPTY."""

    dim: int
    pieces: tuple = ()

    @staticmethod
    def of(dim: int, pieces: Iterable[Polyhedron]) -> "PolySet":
        out = []
        for p in pieces:
            if not p.points:
                if p.rays or p.lines:
                    p = Polyhedron((zeros(dim),), p.rays, p.lines)
                else:
                    continue
            if p.dim != dim:
                raise DimMismatch(f"piece of dimension {p.dim} in a set of dimension {dim}")
            out.append(p.canonical())
        if any(_is_whole_piece(p, dim) for p in out):
            return PolySet.whole(dim)
        return PolySet(dim, tuple(sorted(set(out), key=_piece_key)))

    @staticmethod
    def point(v: Sequence) -> "PolySet":
        v = vec(v)
        return PolySet(len(v), (Polyhedron((v,)),))

    @staticmethod
    def zero(dim: int) -> "PolySet":
        return PolySet.point(zeros(dim))

    @staticmethod
    def whole(dim: int) -> "PolySet":
        return PolySet(dim, (Polyhedron((zeros(dim),), (), tuple(unit(dim, k) for k in range(dim))),))

    @staticmethod
    def cone(dim: int, rays=(), lines=()) -> "PolySet":
        return PolySet.of(dim, [Polyhedron((zeros(dim),), tuple(vec(r) for r in rays), tuple(vec(l) for l in lines))])

    @staticmethod
    def empty(dim: int) -> "PolySet":
        return PolySet(dim, ())

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    @property
    def is_whole(self) -> bool:
        return any(_is_whole_piece(p, self.dim) for p in self.pieces)

    @property
    def is_cone(self) -> bool:
        return bool(self.pieces) and all(p.is_cone for p in self.pieces)

    @property
    def is_zero(self) -> bool:
        return self.pieces == (Polyhedron((zeros(self.dim),)),)

    def negate(self) -> "PolySet":
        return PolySet.of(self.dim, [p.negate() for p in self.pieces])

    def image(self, matrix: Sequence[Sequence[Fraction]]) -> "PolySet":
        out_dim = len(matrix)
        return PolySet.of(out_dim, [p.image(matrix) for p in self.pieces])

    def pullback_row(self, a: Sequence[Fraction]) -> "PolySet":
        """Map a set in R^1 to R^d by ``v -> v * a``."""
        if self.dim != 1:
            raise DimMismatch("pullback_row expects a one-dimensional set")
        col = [[frac(x)] for x in a]
        return self.image(col)

    def union(self, other: "PolySet") -> "PolySet":
        _same_dim(self, other)
        return PolySet.of(self.dim, list(self.pieces) + list(other.pieces))

    def to_setspec(self) -> dict:
        if self.is_empty:
            return {"kind": "empty"}
        if len(self.pieces) == 1:
            return self.pieces[0].to_setspec()
        return {"kind": "union", "pieces": [p.to_setspec() for p in self.pieces]}

    def generators(self) -> list[Vec]:
        """All nonzero ray and line directions (lines in both orientations)."""
        out = []
        for p in self.pieces:
            out.extend(p.rays)
            for l in p.lines:
                out.extend([l, neg(l)])
        return out


def _piece_key(p: Polyhedron):
    return (p.points, p.rays, p.lines)


def _is_whole_piece(p: Polyhedron, dim: int) -> bool:
    return dim > 0 and len(p.lines) == dim


def _same_dim(a: PolySet, b: PolySet):
    if a.dim != b.dim:
        raise DimMismatch(f"dimension mismatch: {a.dim} vs {b.dim}")


def from_setspec(spec: dict, dim: int) -> PolySet:
    kind = spec.get("kind") if isinstance(spec, dict) else None
    try:
        if kind == "reals":
            return PolySet.whole(dim)
        if kind == "empty":
            return PolySet.empty(dim)
        if kind == "cone":
            rays = [vec(r) for r in spec.get("rays", [])]
            lines = [vec(l) for l in spec.get("lines", [])]
            _check_lengths(rays + lines, dim)
            return PolySet.cone(dim, rays, lines)
        if kind == "points":
            pts = [vec(p) for p in spec["pts"]]
            _check_lengths(pts, dim)
            return PolySet.of(dim, [Polyhedron((p,)) for p in pts])
        if kind == "polyhedron":
            pts = [vec(p) for p in spec.get("points", [])]
            rays = [vec(r) for r in spec.get("rays", [])]
            lines = [vec(l) for l in spec.get("lines", [])]
            _check_lengths(pts + rays + lines, dim)
            return PolySet.of(dim, [Polyhedron(tuple(pts), tuple(rays), tuple(lines))])
        if kind == "union":
            out = PolySet.empty(dim)
            for piece in spec["pieces"]:
                out = out.union(from_setspec(piece, dim))
            return out
    except KeyError as exc:
        raise SchemaError(f"set spec missing field {exc}") from exc
    raise SchemaError(f"unknown set spec kind {kind!r}")


def _check_lengths(vectors, dim):
    for v in vectors:
        if len(v) != dim:
            raise DimMismatch(f"vector of length {len(v)} in a set of dimension {dim}")


def minkowski_sum(A: PolySet, B: PolySet) -> PolySet:
    _same_dim(A, B)
    if A.is_empty or B.is_empty:
        return PolySet.empty(A.dim)
    if A.is_whole or B.is_whole:
        return PolySet.whole(A.dim)
    pieces = []
    for p in A.pieces:
        for q in B.pieces:
            pts = tuple(tuple(x + y for x, y in zip(a, b)) for a in p.points for b in q.points)
            pieces.append(Polyhedron(pts, p.rays + q.rays, p.lines + q.lines))
    return PolySet.of(A.dim, pieces)


def minkowski_sum_all(sets: Sequence[PolySet], dim: int) -> PolySet:
    out = PolySet.zero(dim)
    for s in sets:
        out = minkowski_sum(out, s)
    return out


def _membership_lp(piece: Polyhedron, v: Sequence[Fraction]) -> _lp.LP:
    """Variables (sigma over points, rho over rays, tau over lines)."""
    P, R, L = piece.points, piece.rays, piece.lines
    n = len(P) + len(R) + len(L)
    d = len(v)
    rows = []
    for k in range(d):
        rows.append(tuple(p[k] for p in P) + tuple(r[k] for r in R) + tuple(l[k] for l in L))
    rows.append(tuple(Fraction(1) for _ in P) + (Fraction(0),) * (len(R) + len(L)))
    rhs = tuple(v) + (Fraction(1),)
    nonneg = range(len(P) + len(R))
    return _lp.make_lp([0] * n, A_eq=rows, b_eq=rhs, nonneg=nonneg)


@dataclass(frozen=True)
class Membership:
    member: bool
    piece: int | None
    certificates: tuple  # one LPCertificate per examined piece

    def __bool__(self):
        return self.member


def contains(A: PolySet, v: Sequence) -> Membership:
    """Exact membership of ``v`` in ``A`` with LP certificates."""
    v = vec(v)
    if len(v) != A.dim:
        raise DimMismatch(f"point of length {len(v)} vs set dimension {A.dim}")
    certs = []
    for k, piece in enumerate(A.pieces):
        prob = _membership_lp(piece, v)
        res = _lp.solve(prob)
        certs.append(res.certificate())
        if res.feasible:
            return Membership(True, k, tuple(certs))
    return Membership(False, None, tuple(certs))


def contains_zero(A: PolySet) -> Membership:
    return contains(A, zeros(A.dim))


def verify_membership(A: PolySet, v: Sequence, m: Membership) -> bool:
    """Replay every certificate in ``m`` by exact substitution."""
    v = vec(v)
    if m.member:
        cert = m.certificates[-1]
        prob = _membership_lp(A.pieces[m.piece], v)
        return _lp.verify(prob, _lp.LPResult(_lp.OPTIMAL, x=cert.witness, objective=Fraction(0)))
    if len(m.certificates) != len(A.pieces):
        return False
    for piece, cert in zip(A.pieces, m.certificates):
        prob = _membership_lp(piece, v)
        nle = len(prob.A_le)
        w = cert.witness
        if not _lp.verify(prob, _lp.LPResult(_lp.INFEASIBLE, farkas=(tuple(w[:nle]), tuple(w[nle:])))):
            return False
    return True


def subset_of(A: PolySet, B: PolySet) -> bool:
    """Sufficient generator test for ``A subset of B``.

    Exact when ``B`` is a single convex piece; for unions it checks each
    piece of ``A`` against each piece of ``B`` separately.
    """
    _same_dim(A, B)
    for p in A.pieces:
        ok = False
        for q in B.pieces:
            single = PolySet(B.dim, (q,))
            if all(contains(single, pt) for pt in p.points) and _recession_in(p, q):
                ok = True
                break
        if not ok:
            return False
    return True


def _recession_in(p: Polyhedron, q: Polyhedron) -> bool:
    rec = PolySet.cone(q.dim, q.rays, q.lines)
    dirs = list(p.rays) + list(p.lines) + [neg(l) for l in p.lines]
    return all(contains(rec, r) for r in dirs)


def set_equal(A: PolySet, B: PolySet) -> bool:
    """Mutual :func:`subset_of`; exact for convex sets, sufficient for unions."""
    return subset_of(A, B) and subset_of(B, A)


def cone_intersection_trivial(K1: PolySet, K2: PolySet):
    """Decide ``K1 ∩ K2 = {0}`` for polyhedral cones (unions allowed).

    Returns ``(trivial, witness)`` where ``witness`` is a nonzero common
    vector when the intersection is nontrivial.
    """
    from .dd import cone_inequalities

    _same_dim(K1, K2)
    for K in (K1, K2):
        if not K.is_empty and not K.is_cone:
            raise NotACone("cone_intersection_trivial expects cones")
    d = K1.dim
    for q in K2.pieces:
        A_le, A_eq = cone_inequalities(q.rays, q.lines, d)
        for p in K1.pieces:
            R, L = p.rays, p.lines
            nvar = len(R) + len(L)
            if nvar == 0:
                continue
            # v = R rho + L tau expressed through its coordinates
            def v_row(row):
                return tuple(dot(row, r) for r in R) + tuple(dot(row, l) for l in L)

            le = [v_row(a) for a in A_le]
            eq = [v_row(a) for a in A_eq]
            dirs = list(R) + list(L) + [neg(l) for l in L]
            for c in dirs:
                crow = v_row(c)
                res = _lp.lp_solve(
                    crow,
                    A_le=le + [crow],
                    b_le=[0] * len(le) + [1],
                    A_eq=eq,
                    b_eq=[0] * len(eq),
                    nonneg=range(len(R)),
                    maximize=True,
                )
                if res.status == _lp.OPTIMAL and res.objective > 0:
                    coeffs = res.x
                    v = [Fraction(0)] * d
                    for cf, g in zip(coeffs, list(R) + list(L)):
                        for t in range(d):
                            v[t] += cf * g[t]
                    return False, tuple(v)
    return True, None
