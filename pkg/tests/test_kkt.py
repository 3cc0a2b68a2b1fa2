from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from nlqual import instances
from nlqual import kkt as K
from nlqual.errors import InfeasiblePoint, ParseError
from nlqual.model import load_problem_dict
from nlqual.setalg import contains_zero


def test_example_multipliers():
    P = instances.example("example1")
    rep = K.find_kkt_multipliers(P, P.point)
    assert rep.status == K.FOUND and rep.exact
    assert rep.multipliers.lam == (0,) and rep.multipliers.mu == (F(-1, 2), F(-1, 2))
    assert rep.certificate["lp_verified"] and rep.certificate["verify"] == K.VERIFIED


def test_linear_equality_multiplier_is_unique():
    P = load_problem_dict(instances.linear_eq_dict())
    rep = K.find_kkt_multipliers(P, P.point)
    assert rep.status == K.FOUND and rep.multipliers.mu == (1,)
    assert K.verify_kkt(P, P.point, K.Multipliers((), (F(2),))).status == K.NOT_VERIFIED


def test_sign_and_complementarity_rules():
    P = instances.example("example4")
    assert K.verify_kkt(P, P.point, K.Multipliers((F(1, 2), F(0)), ())).status == K.VERIFIED
    neg = K.verify_kkt(P, P.point, K.Multipliers((F(-1), F(0)), ()))
    assert neg.status == K.NOT_VERIFIED and "negative" in neg.notes[0]


def test_parse_multipliers():
    P = instances.example("example1")
    m = K.parse_multipliers(P, "0,-1/2,-1/2")
    assert K.verify_kkt(P, P.point, m).status == K.VERIFIED
    with pytest.raises(ParseError):
        K.parse_multipliers(P, "0,1")


def test_stationarity_set_contains_zero_for_a_kkt_point():
    P = instances.example("example1")
    S = K.stationarity_set(P, P.point, K.Multipliers((0,), (F(-1, 2), F(-1, 2))))
    assert contains_zero(S)


def test_float_points_use_the_residual():
    P = instances.example("example1")
    rep = K.find_kkt_multipliers(P, [1.0, 0.0, 1.0, 0.0])
    assert rep.status == K.FOUND and rep.residual <= K.RESIDUAL_TOL
    assert all(isinstance(v, float) for v in rep.multipliers.mu)


def test_fritz_john_alternatives_on_example1():
    fj = K.fritz_john(instances.example("example1"), instances.example("example1").point)
    assert fj.case_i and fj.case_ii
    assert "abnormal" in fj.witnesses and "kkt" in fj.witnesses


def test_infeasible_point_is_rejected():
    P = instances.example("example1")
    with pytest.raises(InfeasiblePoint):
        K.find_kkt_multipliers(P, (F(0),) * 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 400))
def test_search_results_replay(seed):
    P = instances.random_affine(seed)
    rep = K.find_kkt_multipliers(P, P.point)
    if rep.status == K.FOUND:
        assert K.verify_kkt(P, P.point, rep.multipliers).status == K.VERIFIED
    elif rep.exact:
        assert rep.status == K.NOT_FOUND
        assert all(f["lp_verified"] for f in rep.certificate["farkas"])
    else:
        # irrational derivative values: no certificate either way
        assert rep.status in (K.UNKNOWN, K.NOT_FOUND) and rep.residual > K.RESIDUAL_TOL
