from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlqual import instances
from nlqual import kkt as K
from nlqual import penalty as PN
from nlqual import proxsolve as PS
from nlqual.errors import Unsupported
from nlqual.model import load_problem_dict


def test_prox_reference_values():
    assert PS.prox_pow_abs(F(1, 2), 1.0, 0.0) == 0.0
    assert PS.prox_pow_abs(F(1, 2), 1.0, 0.1) == 0.0
    t = PS.prox_pow_abs(F(1, 2), 1.0, 10.0)
    # stationarity t + 1/(2 sqrt t) = 10
    assert t + 0.5 / np.sqrt(t) == pytest.approx(10.0, abs=1e-12)
    assert PS.prox_pow_abs(F(1, 2), 1.0, -10.0) == -t


def _prox_obj(p, lam, v, t):
    return 0.5 * (t - v) ** 2 + lam * np.abs(t) ** p


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([0.5, 1 / 3, 2 / 3, 0.9]), st.floats(0.01, 5.0), st.floats(-8.0, 8.0))
def test_prox_is_a_global_minimizer_on_the_grid(p, lam, v):
    t = PS.prox_pow_abs(p, lam, v)
    grid = v * np.arange(-2000, 2001) / 1000.0
    assert _prox_obj(p, lam, v, t) <= np.min(_prox_obj(p, lam, v, grid)) + 1e-9
    assert t == 0.0 or np.sign(t) == np.sign(v)


def test_prox_1d_respects_bounds():
    assert PS.prox_1d("pow_abs", F(1, 2), 1.0, 10.0, -1.0, 2.0) == pytest.approx(2.0)
    assert PS.prox_1d("pow_abs", F(1, 2), 0.0, 3.0, -1.0, 2.0) == 2.0


def test_smooth_quadratic_reaches_the_stationary_point():
    P = load_problem_dict({"dim": 2, "smooth": "(x1 - 1)^2 + 2*(x2 + 3)^2"})
    res = PS.solve(PN.build_penalty(P, 1.0), [0.0, 0.0])
    assert np.allclose(res.x, [1.0, -3.0], atol=1e-8)


def test_one_dimensional_fixed_point():
    res = PS.solve(PN.build_penalty(instances.prox_line(), 1.0), [0.0])
    x = res.x[0]
    # a unit prox-gradient step from x returns x
    assert PS.prox_pow_abs(F(1, 2), 1.0, x - (x - 10.0)) == pytest.approx(x, abs=1e-8)


def test_box_omega_projection():
    P = load_problem_dict({"dim": 1, "smooth": "(x1 - 5)^2/2", "omega": {"kind": "polyhedron", "A": [["1"], ["-1"]], "b": ["1", "0"]}})
    res = PS.solve(PN.build_penalty(P, 1.0), [0.5])
    assert res.x[0] == pytest.approx(1.0, abs=1e-10)


def test_example1_with_a_large_penalty():
    P = instances.example("example1")
    res = PS.solve(PN.build_penalty(P, 64.0), [1.02, 0.0, 0.98, 0.01])
    assert res.objective <= 2 + 1e-6
    k = K.find_kkt_multipliers(P, [float(v) for v in res.x])
    assert k.status == K.FOUND and K.verify_kkt(P, [float(v) for v in res.x], k.multipliers).status == K.VERIFIED


def test_descent_within_each_smoothing_stage():
    P = instances.example("example1")
    runner = PS._Runner(PN.build_penalty(P, 4.0), PS.SolverConfig())
    _, _, _, hist = runner.run(np.array([1.2, 0.1, 0.7, -0.05]), None)
    for (s0, f0), (s1, f1) in zip(hist, hist[1:]):
        if s0 == s1:
            assert f1 <= f0 + 1e-12 * max(1.0, abs(f0))


def test_non_separable_bridge_term_is_rejected():
    doc = {"dim": 2, "phi": [{"outer": {"kind": "pow_abs", "p": "1/2"}, "inner": {"kind": "affine", "a": ["1", "1"], "b": "0"}}]}
    with pytest.raises(Unsupported):
        PS.solve(PN.build_penalty(load_problem_dict(doc), 1.0), [0.0, 0.0])


def test_multistart_is_deterministic():
    P = instances.bridge_union()
    a = PS.solve(PN.build_penalty(P, 4.0))
    b = PS.solve(PN.build_penalty(P, 4.0))
    assert np.array_equal(a.x, b.x) and a.start == b.start
    assert np.allclose(a.x, [1, 0, 0, 4, 0], atol=1e-8)
