"""Exact rational vectors and small dense linear algebra over ``Fraction``."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ParseError

Vec = tuple  # tuple[Fraction, ...]


def frac(value) -> Fraction:
    """Parse a rational from an int, Fraction, or string such as ``"-3/4"``.

    Floats are converted exactly (binary expansion), which is what the
    sampling code wants when it rationalizes a float point.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ParseError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ParseError(f"non-finite value {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"not a rational: {value!r}") from exc
    raise ParseError(f"not a rational: {value!r}")


def vec(values: Iterable) -> Vec:
    return tuple(frac(v) for v in values)


def parse_point(text: str) -> Vec:
    """Parse a comma separated list of rationals (``"1,0,1/2"``)."""
    parts = [p for p in text.replace(" ", "").split(",") if p != ""]
    if not parts:
        raise ParseError("empty point")
    return vec(parts)


def fmt(q: Fraction) -> str:
    return str(q) if q.denominator != 1 else str(q.numerator)


def fmt_vec(v: Sequence[Fraction]) -> list[str]:
    return [fmt(frac(q)) for q in v]


def zeros(n: int) -> Vec:
    return (Fraction(0),) * n


def unit(n: int, k: int, scale=1) -> Vec:
    return tuple(Fraction(scale) if i == k else Fraction(0) for i in range(n))


def dot(a: Sequence, b: Sequence):
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def add(a: Sequence, b: Sequence) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Sequence, b: Sequence) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def scale(s, a: Sequence) -> Vec:
    return tuple(s * x for x in a)


def neg(a: Sequence) -> Vec:
    return tuple(-x for x in a)


def is_zero(a: Sequence) -> bool:
    return all(x == 0 for x in a)


def primitive(v: Sequence[Fraction]) -> Vec:
    """Scale a nonzero rational vector by a positive factor to a primitive
    integer vector (gcd 1). Direction and orientation are preserved."""
    lcm = 1
    for x in v:
        lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
    ints = [int(x * lcm) for x in v]
    g = 0
    for k in ints:
        g = math.gcd(g, abs(k))
    if g == 0:
        return tuple(Fraction(0) for _ in v)
    return tuple(Fraction(k // g) for k in ints)


def sign_normalized(v: Sequence[Fraction]) -> Vec:
    """Primitive representative of the line spanned by ``v`` (first nonzero > 0)."""
    p = primitive(v)
    for x in p:
        if x != 0:
            return p if x > 0 else neg(p)
    return p


def rref(rows: Sequence[Sequence[Fraction]], ncols: int | None = None):
    """Reduced row echelon form. Returns (rows, pivot_columns)."""
    m = [list(map(frac, r)) for r in rows]
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return [tuple(row) for row in m[:r]], pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows:
        return 0
    return len(rref(rows)[1])


def independent_subset(vectors: Sequence[Sequence[Fraction]]) -> list[int]:
    """Greedy (in order) indices of a maximal linearly independent subset."""
    chosen: list[int] = []
    basis: list[Vec] = []
    for k, v in enumerate(vectors):
        trial = basis + [tuple(v)]
        if rank(trial) == len(trial):
            basis = trial
            chosen.append(k)
    return chosen


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[Vec]:
    """Basis of {x : rows @ x = 0}."""
    if not rows:
        return [unit(ncols, k) for k in range(ncols)]
    red, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * ncols
        v[fcol] = Fraction(1)
        for row, pc in zip(red, pivots):
            v[pc] = -row[fcol]
        basis.append(tuple(v))
    return basis


def matvec(rows: Sequence[Sequence[Fraction]], x: Sequence[Fraction]) -> Vec:
    return tuple(dot(r, x) for r in rows)


def to_float(v: Sequence) -> list[float]:
    return [float(x) for x in v]


def is_rational_vec(v: Sequence) -> bool:
    return all(isinstance(x, (Fraction, int)) and not isinstance(x, bool) for x in v)
