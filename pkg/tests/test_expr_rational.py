from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlqual.errors import ParseError
from nlqual.expr import Inexact, NonDifferentiable, parse
from nlqual.rational import fmt, frac, nullspace, primitive, rank


def test_exact_polynomial_value_and_gradient():
    e = parse("x1^2*x2 - 3*x2 + x1/2", 2)
    x = (F(1), F(2))
    assert e.exact(x) == F(-7, 2)
    assert e.grad_exact(x) == (F(9, 2), F(-2))
    assert e.value((F(1), F(2))) == (F(-7, 2), True)


def test_irrational_values_fall_back_to_floats():
    e = parse("sqrt(x1)", 1)
    with pytest.raises(Inexact):
        e.exact((F(2),))
    assert e.value((F(4),)) == (F(2), True)
    v, exact = e.value((2.0,))
    assert v == pytest.approx(2.0**0.5) and not exact


def test_kinks_are_not_differentiated():
    with pytest.raises(NonDifferentiable):
        parse("abs(x1)", 1).grad_exact((F(0),))


@pytest.mark.parametrize("text", ["x1 +", "x3", "import os", "__class__", "x1 @ x1"])
def test_rejected_expressions(text):
    with pytest.raises(ParseError):
        parse(text, 2)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_gradient_matches_central_differences(x):
    e = parse("sqrt(x1^2 + 1) * x2^3 - x1*x2 + x1^2/(x2^2 + 1)", 2)
    g, _ = e.gradient(x)
    fd = e.grad_fd(x, 1e-6)
    np.testing.assert_allclose(np.asarray(g, dtype=float), fd, rtol=1e-5, atol=1e-5)


def test_rational_helpers():
    assert frac("3/6") == F(1, 2) and frac(0.5) == F(1, 2) and fmt(F(-4, 2)) == "-2"
    assert primitive((F(2, 3), F(4, 3))) == (1, 2)
    rows = [(F(1), F(1), F(0)), (F(2), F(2), F(0))]
    assert rank(rows) == 1
    for v in nullspace(rows, 3):
        assert all(sum(a * b for a, b in zip(r, v)) == 0 for r in rows)
    assert len(nullspace(rows, 3)) == 2
