"""Double description conversions between H- and V-form over the rationals.

Cones are handled directly; polyhedra are homogenized with one extra
coordinate ``s >= 0`` and dehomogenized afterwards.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from ..errors import DimensionTooLarge
from ..rational import dot, neg, primitive, sign_normalized, sub, scale, is_zero, frac

MAX_DIM = 12
MAX_GENERATORS = 64


def _check_limits(dim: int, ngens: int = 0):
    if dim > MAX_DIM:
        raise DimensionTooLarge(f"dimension {dim} exceeds the double description limit {MAX_DIM}")
    if ngens > MAX_GENERATORS:
        raise DimensionTooLarge(f"{ngens} generators exceed the limit {MAX_GENERATORS}")


def cone_generators(A_le: Sequence[Sequence], A_eq: Sequence[Sequence], dim: int):
    """Generators of ``{x : A_le x <= 0, A_eq x = 0}``.

    Returns ``(rays, lines)``; rays are primitive integer vectors, the
    representation is minimal for the pointed part.
    """
    _check_limits(dim)
    constraints = [tuple(map(frac, a)) for a in A_le]
    for a in A_eq:
        a = tuple(map(frac, a))
        constraints.append(a)
        constraints.append(neg(a))

    lines = [tuple(Fraction(int(i == k)) for i in range(dim)) for k in range(dim)]
    rays: list[tuple] = []
    zsets: list[frozenset] = []

    for k, a in enumerate(constraints):
        if is_zero(a):
            continue
        li = next((i for i, l in enumerate(lines) if dot(a, l) != 0), None)
        if li is not None:
            l = lines[li]
            al = dot(a, l)
            new_lines = []
            for i, l2 in enumerate(lines):
                if i == li:
                    continue
                c = dot(a, l2)
                new_lines.append(sign_normalized(sub(l2, scale(c / al, l))) if c != 0 else l2)
            new_rays, new_z = [], []
            for r, z in zip(rays, zsets):
                c = dot(a, r)
                r2 = primitive(sub(r, scale(c / al, l))) if c != 0 else r
                new_rays.append(r2)
                new_z.append(z | {k})
            # the pivot line becomes a ray strictly inside the new halfspace
            pr = primitive(scale(-1 if al > 0 else 1, l))
            new_rays.append(pr)
            new_z.append(frozenset(range(k)))
            lines, rays, zsets = new_lines, new_rays, new_z
            continue

        vals = [dot(a, r) for r in rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        negs = [i for i, v in enumerate(vals) if v < 0]
        zero = [i for i, v in enumerate(vals) if v == 0]
        new_rays = [rays[i] for i in negs + zero]
        new_z = [zsets[i] for i in negs] + [zsets[i] | {k} for i in zero]
        for p in pos:
            for q in negs:
                common = zsets[p] & zsets[q]
                adjacent = True
                for o in range(len(rays)):
                    if o != p and o != q and common <= zsets[o]:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                combo = sub(scale(vals[p], rays[q]), scale(vals[q], rays[p]))
                if is_zero(combo):
                    continue
                new_rays.append(primitive(combo))
                new_z.append(common | {k})
        rays, zsets = new_rays, new_z

    # dedupe
    seen = set()
    out_rays = []
    for r in rays:
        if r not in seen and not is_zero(r):
            seen.add(r)
            out_rays.append(r)
    return out_rays, [sign_normalized(l) for l in lines]


def cone_inequalities(rays: Sequence[Sequence], lines: Sequence[Sequence], dim: int):
    """H-form ``(A_le, A_eq)`` of ``cone(rays) + span(lines)`` via the polar cone."""
    _check_limits(dim, len(rays) + len(lines))
    polar_rays, polar_lines = cone_generators(rays, lines, dim)
    return polar_rays, polar_lines


def polyhedron_generators(A_le, b_le, A_eq, b_eq, dim: int):
    """V-form ``(points, rays, lines)`` of ``{x : A_le x <= b_le, A_eq x = b_eq}``.

    Returns ``None`` for the empty set.
    """
    _check_limits(dim + 1)
    H_le = [tuple(map(frac, a)) + (-frac(b),) for a, b in zip(A_le, b_le)]
    H_le.append((Fraction(0),) * dim + (Fraction(-1),))
    H_eq = [tuple(map(frac, a)) + (-frac(b),) for a, b in zip(A_eq, b_eq)]
    rays, lines = cone_generators(H_le, H_eq, dim + 1)
    points, out_rays = [], []
    for r in rays:
        s = r[-1]
        if s > 0:
            points.append(tuple(v / s for v in r[:-1]))
        else:
            out_rays.append(r[:-1])
    # lines always have s = 0 because of the s >= 0 row
    out_lines = [l[:-1] for l in lines]
    if not points:
        return None
    return points, out_rays, out_lines


def polyhedron_inequalities(points, rays, lines, dim: int):
    """H-form ``(A_le, b_le, A_eq, b_eq)`` of ``conv(points) + cone(rays) + span(lines)``."""
    gens = [tuple(p) + (Fraction(1),) for p in points]
    gens += [tuple(r) + (Fraction(0),) for r in rays]
    lns = [tuple(l) + (Fraction(0),) for l in lines]
    _check_limits(dim + 1, len(gens) + len(lns))
    A_le, A_eq = cone_inequalities(gens, lns, dim + 1)
    # row (a, c) means a.x + c.s <= 0, i.e. a.x <= -c at s = 1
    le = [(r[:-1], -r[-1]) for r in A_le if not is_zero(r[:-1])]
    eq = [(r[:-1], -r[-1]) for r in A_eq if not is_zero(r[:-1])]
    return [a for a, _ in le], [b for _, b in le], [a for a, _ in eq], [b for _, b in eq]
