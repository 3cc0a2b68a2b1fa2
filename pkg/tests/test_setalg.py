from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from nlqual.setalg import (
    PolySet,
    Polyhedron,
    cone_intersection_trivial,
    contains,
    contains_zero,
    from_setspec,
    minkowski_sum,
    project,
    project_h,
    set_equal,
    subset_of,
    verify_membership,
)
from nlqual.setalg import dd


def test_orthant_generators():
    rays, lines = dd.cone_generators([[-1, 0], [0, -1]], [], 2)
    assert sorted(rays) == [(0, 1), (1, 0)] and lines == []


def test_halfspace_has_a_line():
    rays, lines = dd.cone_generators([[1, 1]], [], 2)
    assert len(lines) == 1 and len(rays) == 1
    (r,) = rays
    assert r[0] + r[1] < 0


def test_square_round_trip():
    A = [[1, 0], [-1, 0], [0, 1], [0, -1]]
    b = [1, 0, 1, 0]
    pts, rays, lines = dd.polyhedron_generators(A, b, [], [], 2)
    assert sorted(pts) == [(0, 0), (0, 1), (1, 0), (1, 1)] and not rays and not lines
    A2, b2, E2, e2 = dd.polyhedron_inequalities(pts, rays, lines, 2)
    back = dd.polyhedron_generators(A2, b2, E2, e2, 2)
    assert sorted(back[0]) == sorted(pts)


def test_empty_polyhedron():
    assert dd.polyhedron_generators([[1], [-1]], [0, -1], [], [], 1) is None


def test_minkowski_and_membership():
    seg = PolySet.of(2, [Polyhedron(((F(0), F(0)), (F(1), F(0))))])
    ray = PolySet.cone(2, rays=[(0, 1)])
    S = minkowski_sum(seg, ray)
    m = contains(S, (F(1, 2), F(7)))
    assert m and verify_membership(S, (F(1, 2), F(7)), m)
    assert not contains(S, (F(2), F(0)))
    assert not contains(S, (F(0), F(-1, 100)))


def test_unions_and_equality():
    up = PolySet.cone(1, rays=[(1,)])
    down = PolySet.cone(1, rays=[(-1,)])
    both = up.union(down)
    assert subset_of(up, both) and subset_of(both, PolySet.whole(1))
    # piecewise test: a convex set covered only by the union is not detected
    assert not subset_of(PolySet.whole(1), both)
    assert subset_of(PolySet.zero(1), up)
    assert not subset_of(up, down)
    assert contains_zero(up.negate())


def test_setspec_round_trip():
    S = minkowski_sum(PolySet.point((1, 2)), PolySet.cone(2, rays=[(1, 1)], lines=[(0, 1)]))
    assert set_equal(from_setspec(S.to_setspec(), 2), S)


def test_cone_intersection():
    up, down = PolySet.cone(1, rays=[(1,)]), PolySet.cone(1, rays=[(-1,)])
    trivial = cone_intersection_trivial(up, down)
    assert (trivial[0] if isinstance(trivial, tuple) else trivial) is True
    wide = cone_intersection_trivial(PolySet.whole(1), up)
    assert (wide[0] if isinstance(wide, tuple) else wide) is False


def test_projection_on_box_corner():
    y, dist = project_h([[1, 0], [0, 1]], [0, 0], np.zeros((0, 2)), [], [3.0, 4.0])
    assert np.allclose(y, 0) and dist == pytest.approx(5.0)


def test_projection_on_union_picks_nearest_piece():
    S = PolySet.point((5, 0)).union(PolySet.point((0, 1)))
    y, dist = project(S, [0.0, 0.0])
    assert np.allclose(y, [0, 1]) and dist == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=1, max_size=5),
    st.lists(st.integers(0, 4), min_size=5, max_size=5),
    st.lists(st.floats(-4, 4), min_size=3, max_size=3),
)
def test_projection_matches_a_generic_qp(A, b, x):
    A = np.array(A, dtype=float)
    b = np.array(b[: len(A)], dtype=float)  # b >= 0 so the origin is feasible
    y, dist = project_h(A, b, np.zeros((0, 3)), [], x)
    assert np.all(A @ y <= b + 1e-7)
    ref = minimize(lambda z: 0.5 * np.sum((z - x) ** 2), np.zeros(3), jac=lambda z: z - np.asarray(x),
                   constraints=[{"type": "ineq", "fun": lambda z: b - A @ z, "jac": lambda z: -A}], method="SLSQP",
                   options={"ftol": 1e-12, "maxiter": 500})
    assert dist <= np.linalg.norm(ref.x - x) + 1e-6


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=1, max_size=4))
def test_generators_satisfy_the_inequalities(A):
    rays, lines = dd.cone_generators(A, [], 3)
    for r in rays:
        assert all(sum(a * v for a, v in zip(row, r)) <= 0 for row in A)
    for l in lines:
        assert all(sum(a * v for a, v in zip(row, l)) == 0 for row in A)
