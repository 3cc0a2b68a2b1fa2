from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from nlqual.errors import DimMismatch, PivotLimit
from nlqual.setalg import lp as L


def test_simple_optimum_is_exact():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  (8/5, 6/5)
    res = L.lp_solve([1, 1], [[1, 2], [3, 1]], [4, 6], nonneg=[0, 1], maximize=True)
    assert res.status == L.OPTIMAL
    assert res.x == (F(8, 5), F(6, 5))
    assert res.objective == F(14, 5)


def test_farkas_certificate_for_infeasible_system():
    lp = L.make_lp([0, 0], [[1, 1], [-1, -1]], [1, -3], nonneg=[])
    res = L.solve(lp)
    assert res.status == L.INFEASIBLE
    assert L.verify(lp, res)
    assert res.certificate().status == L.INFEASIBLE


def test_unbounded_ray():
    res = L.lp_solve([1], [[-1]], [0], nonneg=[], maximize=True)
    assert res.status == L.UNBOUNDED and res.feasible


def test_free_variables_and_equalities():
    res = L.lp_solve([1, 0], A_eq=[[1, 1]], b_eq=[0], A_le=[[0, 1]], b_le=[F(1, 3)])
    assert res.status == L.OPTIMAL
    assert res.x[0] == F(-1, 3)


def test_dimension_checks():
    with pytest.raises(DimMismatch):
        L.make_lp([1, 1], [[1]], [0])
    with pytest.raises(DimMismatch):
        L.make_lp([1], [[1]], [0, 1])


def test_tampered_certificates_are_rejected():
    lp = L.make_lp([1, 1], [[1, 2]], [4], nonneg=[0, 1], maximize=True)
    res = L.solve(lp)
    bogus = L.LPResult(L.OPTIMAL, x=(F(5), F(0)), objective=F(5))
    assert L.verify(lp, res) and not L.verify(lp, bogus)


def test_pivot_limit_from_environment(monkeypatch):
    monkeypatch.setenv("NLQUAL_LP_PIVOT_LIMIT", "0")
    with pytest.raises(PivotLimit):
        L.lp_solve([1, 1], [[1, 2], [3, 1]], [4, 6], nonneg=[0, 1], maximize=True)


rat = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def small_lps(draw):
    n = draw(st.integers(1, 5))
    k = draw(st.integers(0, 5))
    e = draw(st.integers(0, 3))
    row = st.lists(rat, min_size=n, max_size=n)
    return L.make_lp(
        draw(row),
        draw(st.lists(row, min_size=k, max_size=k)),
        draw(st.lists(rat, min_size=k, max_size=k)),
        draw(st.lists(row, min_size=e, max_size=e)),
        draw(st.lists(rat, min_size=e, max_size=e)),
        draw(st.sets(st.integers(0, n - 1))),
        draw(st.booleans()),
    )


@settings(max_examples=200, deadline=None)
@given(small_lps())
def test_every_answer_carries_a_valid_certificate(lp):
    assert L.verify(lp, L.solve(lp))


@settings(max_examples=150, deadline=None)
@given(small_lps())
def test_status_and_value_agree_with_highs(lp):
    res = L.solve(lp)
    n = lp.n
    c = np.array([float(v) for v in lp.c]) * (-1 if lp.maximize else 1)
    bounds = [(0, None) if j in lp.nonneg else (None, None) for j in range(n)]
    kw = {}
    if lp.A_le:
        kw.update(A_ub=np.array(lp.A_le, dtype=float), b_ub=np.array(lp.b_le, dtype=float))
    if lp.A_eq:
        kw.update(A_eq=np.array(lp.A_eq, dtype=float), b_eq=np.array(lp.b_eq, dtype=float))
    ref = linprog(c, bounds=bounds, method="highs", **kw)
    if ref.status == 2:
        assert res.status == L.INFEASIBLE
    elif ref.status == 3:
        assert res.status == L.UNBOUNDED
    elif ref.status == 0:
        assert res.status == L.OPTIMAL
        assert abs(float(res.objective) - (-ref.fun if lp.maximize else ref.fun)) <= 1e-7 * (1 + abs(ref.fun))
