import json
from fractions import Fraction as F

import numpy as np
import pytest

from nlqual import instances
from nlqual.errors import DimMismatch, ParseError, PhiInfinite, SchemaError
from nlqual.model import check_feasible, load_problem, load_problem_dict, problem_to_dict, require_feasible
from nlqual.rational import parse_point
from nlqual.setalg import PolySet, set_equal
from nlqual.subdiff import EXACT, OUTER_ESTIMATE, outer_table, phi_bundle


def _one_term(outer, a=("1",), b="0", dim=1, **extra):
    doc = {"dim": dim, "phi": [{"outer": outer, "inner": {"kind": "affine", "a": list(a), "b": b}}]}
    doc.update(extra)
    return load_problem_dict(doc)


@pytest.mark.parametrize(
    "doc, err",
    [
        ({"dim": 0}, SchemaError),
        ({"dim": 1, "extra": 1}, SchemaError),
        ({"dim": 1, "norm": "l3"}, SchemaError),
        ({"dim": 1, "smooth": "x1 +"}, ParseError),
        ({"dim": 1, "smooth": "x2"}, ParseError),
        ([1, 2], SchemaError),
    ],
)
def test_malformed_problems(doc, err):
    with pytest.raises(err):
        load_problem_dict(doc)


def test_missing_file_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError):
        load_problem(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ParseError):
        load_problem(bad)


def test_round_trip_and_hash_are_stable():
    for name in instances.EXAMPLES:
        P = instances.example(name)
        Q = load_problem_dict(json.loads(json.dumps(problem_to_dict(P))))
        assert Q.source_hash == P.source_hash
    assert len({instances.example(n).source_hash for n in instances.EXAMPLES}) == 4


def test_feasibility_is_exact_at_rational_points():
    P = instances.example("example1")
    assert check_feasible(P, P.point).feasible
    assert not check_feasible(P, parse_point("1,0,1,1/1000000000000")).feasible
    with pytest.raises(DimMismatch):
        require_feasible(P, (F(1),))


def test_parse_point():
    assert parse_point("1, -1/2,0") == (F(1), F(-1, 2), F(0))
    with pytest.raises(ParseError):
        parse_point(" , ")


def test_sqrt_tables():
    P = instances.prox_line()
    outer = P.phi[0].outer
    at0 = outer_table(outer, F(0))
    for name in ("regular", "limiting", "horizon", "coderiv0"):
        assert at0.field(name).is_whole
    at1 = outer_table(outer, F(1))
    assert set_equal(at1.limiting, PolySet.point((F(1, 2),)))
    assert at1.horizon.is_zero
    atm4 = outer_table(outer, F(-4))
    assert set_equal(atm4.regular, PolySet.point((F(-1, 4),)))


def test_example1_bundle():
    P = instances.example("example1")
    b = phi_bundle(P, P.point)
    e2, e4 = (0, 1, 0, 0), (0, 0, 0, 1)
    assert set_equal(b.horizon, PolySet.cone(4, lines=[e2, e4]))
    assert set_equal(b.limiting, b.regular)
    assert b.is_exact()


def test_scaled_inner_pulls_back_the_row():
    P = _one_term({"kind": "pow_abs", "p": "1/2"}, a=("3", "0"), dim=2)
    b = phi_bundle(P, (F(0), F(5)))
    assert set_equal(b.horizon, PolySet.cone(2, lines=[(1, 0)]))


def test_plus_power_is_flagged():
    P = _one_term({"kind": "pow_plus", "p": "1/2"})
    b = phi_bundle(P, (F(0),))
    assert b.flag("limiting") == OUTER_ESTIMATE
    assert b.flag("horizon") in (EXACT, OUTER_ESTIMATE)


def test_outside_domain_is_reported():
    P = instances.example("example3")
    with pytest.raises(PhiInfinite):
        phi_bundle(P, (F(1),))


def test_batch_evaluation_matches_the_formula():
    P = instances.example("example1")
    X = np.random.default_rng(0).normal(size=(16, 4))
    np.testing.assert_allclose(P.batch_phi(X), np.sum(np.sqrt(np.abs(X)), axis=1), rtol=1e-12)
    np.testing.assert_allclose(P.batch_h(X), np.stack([X[:, 0] + X[:, 1] - 1, X[:, 2] + X[:, 3] - 1], axis=1))
    np.testing.assert_allclose(P.batch_g(X)[:, 0], X.sum(axis=1) - 2)
