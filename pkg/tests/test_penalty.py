from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlqual import instances
from nlqual import penalty as PN
from nlqual.errors import HypothesisViolated
from nlqual.model import load_problem_dict


def test_penalty_values_are_exact_at_rational_points():
    P = instances.example("example1")
    PP = PN.build_penalty(P, 1)
    assert PP.value((F(1), F(0), F(1), F(0))) == (2, True)
    # at (1,1,1,1): Phi = 4, g_+ = 2, |h| = (1, 1)
    assert PP.value((F(1),) * 4) == (8, True)


@pytest.mark.parametrize("norm, expect", [("l1", 4.0), ("l2", 2.0 + 2.0**0.5), ("linf", 3.0)])
def test_norm_choices(norm, expect):
    P = instances.example("example1")
    PP = PN.build_penalty(P, 1, norm)
    x = np.ones((1, 4))
    # l1: 2 + 2 ; l2: |g_+| + ||h||_2 ; linf: |g_+| + max |h|
    assert PP.residual(x)[0] == pytest.approx(expect)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 10), st.floats(1e-3, 10), st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_penalized_value_is_monotone_in_rho(r1, r2, x):
    P = instances.example("example1")
    lo, hi = sorted((r1, r2))
    X = np.array([x])
    assert PN.build_penalty(P, lo)(X)[0] <= PN.build_penalty(P, hi)(X)[0] + 1e-12


def test_shell_samples():
    rng = np.random.default_rng(0)
    Z = PN.ball_samples(rng, np.zeros(3), 0.5, 500, 0.25)
    r = np.linalg.norm(Z, axis=1)
    assert np.all(r <= 0.5 + 1e-12) and np.all(r >= 0.25 - 1e-12)


def test_error_bounds():
    assert PN.estimate_error_bound(instances.example("example1")).verdict == PN.BOUNDED
    canary = PN.estimate_error_bound(instances.square_canary())
    assert canary.verdict == PN.GROWING
    # dist/residual = |x| / x^2 = 1/|x| grows tenfold per rung
    ratios = [m for _, m, _ in canary.table]
    assert all(b > 5 * a for a, b in zip(ratios, ratios[1:]))


def test_restricted_system_needs_superlinear_growth():
    P = instances.example("example3")
    with pytest.raises(HypothesisViolated):
        PN.build_restricted_system(P, P.point)
    R = PN.build_restricted_system(instances.example("example1"), instances.example("example1").point)
    assert PN.estimate_error_bound(R).verdict == PN.BOUNDED


def test_exactness_fails_without_penalty():
    P = instances.example("example1")
    rec = PN.validate_exactness(PN.build_penalty(P, 1e-3), P.point, 0.1, 2000, 42)
    assert not rec.passed and rec.worst_point is not None and rec.worst_gap < 0


def test_linear_equality_needs_rho_one():
    # min -x s.t. x = 0: -x + rho|x| >= 0 near 0 iff rho >= 1
    P = load_problem_dict(instances.linear_eq_dict())
    assert PN.find_rho0(P, P.point, samples=2000).rho0 == 1
    assert not PN.validate_exactness(PN.build_penalty(P, 0.5), P.point, 0.1, 2000, 42).passed


def test_bridge_threshold_matches_the_directional_rate():
    # along (1, 0, 0, -1, 0) the objective drops at rate 3 while the residual grows at rate 0
    # for the direction (1, 0, 0, 0, 0) it grows at rate 1, so rho in [3, 4] is the first power of two
    P = instances.bridge_union()
    assert not PN.validate_exactness(PN.build_penalty(P, 2), P.point, 0.1, 4000, 42).passed
    assert PN.validate_exactness(PN.build_penalty(P, 4), P.point, 0.1, 4000, 42).passed


def test_sampling_is_reproducible():
    P = instances.bridge_union()
    PP = PN.build_penalty(P, 1)
    a = PN.exactness_samples(PP, P.point, 0.1, 3000, 7)
    b = PN.exactness_samples(PP, P.point, 0.1, 3000, 7)
    assert np.array_equal(a.X, b.X) and a.n_samples >= 3000
    assert np.all(P.omega.member_mask(a.X, 1e-12))
