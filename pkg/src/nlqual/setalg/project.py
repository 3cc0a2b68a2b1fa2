"""Euclidean projection onto polyhedra by face enumeration (float)."""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from ..errors import DimensionTooLarge, ProjectionFailure
from .dd import MAX_DIM, polyhedron_inequalities
from .polyset import Polyhedron, PolySet

MEMBER_TOL = 1e-9


def project_h(A, b, A_eq, b_eq, x):
    """Nearest point of ``{y : A y <= b, A_eq y = b_eq}`` to ``x``.

    Returns ``(y, dist)``. Faces are tried by increasing number of active
    inequality rows and the first KKT point found is returned, which is
    the projection because the problem is strictly convex.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    if d > MAX_DIM:
        raise DimensionTooLarge(f"projection supports d <= {MAX_DIM}, got {d}")
    A = np.asarray(A, dtype=float).reshape(-1, d)
    b = np.asarray(b, dtype=float).reshape(-1)
    A_eq = np.asarray(A_eq, dtype=float).reshape(-1, d)
    b_eq = np.asarray(b_eq, dtype=float).reshape(-1)
    scale = 1.0 + np.max(np.abs(x), initial=0.0)

    def feasible(y):
        tol = MEMBER_TOL * scale
        if A.shape[0] and np.any(A @ y - b > tol * (1 + np.abs(b))):
            return False
        if A_eq.shape[0] and np.any(np.abs(A_eq @ y - b_eq) > tol * (1 + np.abs(b_eq))):
            return False
        return True

    if feasible(x):
        return x.copy(), 0.0

    n_ineq = A.shape[0]
    max_active = d - np.linalg.matrix_rank(A_eq) if A_eq.shape[0] else d
    for k in range(0, min(n_ineq, max_active) + 1):
        for S in combinations(range(n_ineq), k):
            M = np.vstack([A_eq, A[list(S)]]) if k else A_eq
            rhs = np.concatenate([b_eq, b[list(S)]]) if k else b_eq
            if M.shape[0] == 0:
                continue
            G = M @ M.T
            if np.linalg.matrix_rank(G) < M.shape[0]:
                continue
            nu = np.linalg.solve(G, M @ x - rhs)
            if k and np.any(nu[A_eq.shape[0]:] < -1e-12):
                continue
            y = x - M.T @ nu
            if feasible(y):
                return y, float(np.linalg.norm(y - x))
    raise ProjectionFailure("no feasible face found; the polyhedron may be empty")


@lru_cache(maxsize=512)
def _h_form(piece: Polyhedron):
    d = piece.dim
    A, b, A_eq, b_eq = polyhedron_inequalities(piece.points, piece.rays, piece.lines, d)
    # scale rows exactly first; rationalized data can give 1e40-sized coefficients
    def f(rows, rhs):
        M, r = np.zeros((len(rows), d)), np.zeros(len(rows))
        for i, (row, c) in enumerate(zip(rows, rhs)):
            s = max(abs(v) for v in row) or 1
            M[i] = [float(v / s) for v in row]
            r[i] = float(c / s)
        return M, r

    return (*f(A, b), *f(A_eq, b_eq))


def project(S: PolySet, x):
    """Nearest point of the union ``S`` to ``x`` and its distance."""
    x = np.asarray(x, dtype=float)
    if S.dim > MAX_DIM:
        raise DimensionTooLarge(f"projection supports d <= {MAX_DIM}, got {S.dim}")
    if S.is_empty:
        raise ProjectionFailure("cannot project onto the empty set")
    if S.is_whole:
        return x.copy(), 0.0
    best = None
    for piece in S.pieces:
        y, dist = project_h(*_h_form(piece), x)
        if best is None or dist < best[1]:
            best = (y, dist)
        if dist == 0.0:
            break
    return best
