from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from nlqual import instances
from nlqual import qualify as Q
from nlqual.errors import DimMismatch, InfeasiblePoint, Unsupported
from nlqual.model import load_problem_dict
from nlqual.setalg import PolySet

H, LH, U, LF, FL = Q.CERTIFIED_HOLDS, Q.LIKELY_HOLDS, Q.UNKNOWN, Q.LIKELY_FAILS, Q.CERTIFIED_FAILS

EXPECTED = {
    "example1": {"nnamcq": FL, "qn": H, "rcpld": H, "dqn": H, "bq": H, "cond13": H, "impl28": H},
    "example2": {"nnamcq": LF, "qn": LH, "rcpld": LF, "dqn": LH},
    "example3": {"nnamcq": H, "qn": H, "rcpld": H, "dqn": H, "bq": H, "cond13": H, "impl28": H},
    "example4": {"nnamcq": FL, "qn": H, "rcpld": H, "dqn": H, "bq": H, "cond13": H, "impl28": H},
}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_example_verdicts(name):
    P = instances.example(name)
    for cond, want in EXPECTED[name].items():
        rep = Q.run_check(P, P.point, cond)
        assert rep.verdict == want, (cond, rep.to_dict())
        assert Q.verify_certificate(P, P.point, rep)


def test_nonlinear_data_never_certifies():
    P = instances.example("example2")
    for cond in Q.CONDITION_ALIASES:
        rep = Q.run_check(P, P.point, cond)
        assert rep.verdict not in (H, FL)
        assert rep.regime == Q.SMOOTH_HEURISTIC or rep.verdict == U


def test_sqrt_ray_quasinormality_fails_with_a_ladder():
    P = instances.sqrt_ray()
    rep = Q.check_quasinormality_horizon(P, P.point)
    assert rep.verdict == FL
    assert rep.certificate["ladder"] and Q.verify_certificate(P, P.point, rep)
    # with a Lipschitz objective the same constraint is harmless
    assert Q.check_quasinormality_horizon(P, P.point, cone=PolySet.zero(1)).verdict == H


def test_abnormal_cone_of_example1():
    P = instances.example("example1")
    K = Q.abnormal_cone(P, P.point)
    K = K[0] if isinstance(K, tuple) else K
    assert not K.is_zero


def test_bad_inputs():
    P = instances.example("example1")
    with pytest.raises(DimMismatch):
        Q.check_nnamcq(P, (F(1),))
    with pytest.raises(InfeasiblePoint):
        Q.check_nnamcq(P, (F(0),) * 4)
    with pytest.raises(Unsupported):
        Q.run_check(P, P.point, "slater")


def test_report_serializes():
    P = instances.example("example1")
    d = Q.check_nnamcq(P, P.point).to_dict()
    assert d["certificate"]["lambda"] == ["1"] and d["regime"] == Q.AFFINE_EXACT


def test_union_omega_on_the_bridge_instance():
    P = instances.bridge_union()
    # g = x2 + x3 lies in the span of the horizon lines at x*, so the witness
    # exists already for the regular normal cone of the union
    rep = Q.check_quasinormality_coderiv(P, P.point)
    assert rep.verdict == FL and Q.verify_certificate(P, P.point, rep)
    for cond in ("bq", "cond13"):
        rep = Q.run_check(P, P.point, cond)
        assert rep.verdict == U and any("UNSUPPORTED_REGION" in n for n in rep.notes)
    # the kinked sum rule over a nontrivial Omega is only an inclusion
    assert Q.check_nnamcq(P, P.point).regime == Q.SMOOTH_HEURISTIC


def test_persistence_at_example1():
    P = instances.example("example1")
    rep = Q.persistence_probe(P, P.point, "qn", radius=1e-3, samples=16)
    assert rep.sampled == 16 and rep.consistent


def test_feasible_samples_stay_feasible():
    P = instances.example("example1")
    pts = Q.sample_feasible(P, P.point, 1e-2, 20, 3)
    assert len(pts) == 20
    for y in pts:
        assert all(isinstance(v, F) for v in y)
        assert all(c.value(y)[0] <= 0 for c in P.ineq) and all(c.value(y)[0] == 0 for c in P.eq)


seeds = st.integers(0, 400)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_verdict_hierarchy(seed):
    P = instances.random_affine(seed)
    v = {c: Q.run_check(P, P.point, c) for c in ("nnamcq", "qn", "rcpld", "bq")}
    # no abnormal multiplier at all leaves nothing for the weaker conditions to reject
    if v["nnamcq"].holds:
        assert not v["qn"].fails and not v["rcpld"].fails
    if v["qn"].fails:
        assert not v["nnamcq"].holds
    for rep in v.values():
        assert Q.verify_certificate(P, P.point, rep)


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([2, 3, -1, -5]))
def test_scaling_equality_rows_keeps_verdicts(seed, k):
    doc = instances.random_affine_dict(seed)
    if not doc["eq"]:
        return
    scaled = dict(doc, eq=[{**e, "a": [str(k * int(v)) for v in e["a"]], "b": str(k * int(e["b"]))} for e in doc["eq"]])
    P, S = load_problem_dict(doc), load_problem_dict(scaled)
    for cond in ("nnamcq", "qn", "rcpld", "bq"):
        assert Q.run_check(P, P.point, cond).verdict == Q.run_check(S, S.point, cond).verdict


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_dropping_the_nonsmooth_part_matches_standard_checks(seed):
    P = instances.random_affine(seed)
    doc = dict(instances.random_affine_dict(seed), phi=[])
    smooth = load_problem_dict(doc)
    zero = PolySet.zero(P.dim)
    assert Q.check_quasinormality_horizon(P, P.point, cone=zero).verdict == Q.check_quasinormality_horizon(smooth, smooth.point).verdict
