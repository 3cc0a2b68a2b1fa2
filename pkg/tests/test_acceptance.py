"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import random
import time
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from nlqual import instances
from nlqual import kkt as K
from nlqual import penalty as PN
from nlqual import proxsolve as PS
from nlqual import qualify as Q
from nlqual.setalg import PolySet, lp as LPK, set_equal
from nlqual.subdiff import EXACT, phi_bundle

from conftest import record

F = Fraction


def test_criterion_01_example1(ex):
    t0 = time.perf_counter()
    P = ex["example1"]
    x = (F(1), F(0), F(1), F(0))
    b = phi_bundle(P, x)
    e2, e4 = (0, 1, 0, 0), (0, 0, 0, 1)
    horizon_ok = set_equal(b.horizon, PolySet.cone(4, lines=[e2, e4])) and b.flag("horizon") == EXACT
    nn = Q.check_nnamcq(P, x)
    nn_ok = nn.verdict == Q.CERTIFIED_FAILS and Q.verify_certificate(P, x, nn)
    held = {c: Q.run_check(P, x, c).verdict for c in ("qn", "rcpld", "dqn")}
    held_ok = all(v == Q.CERTIFIED_HOLDS for v in held.values())
    k = K.find_kkt_multipliers(P, x)
    k_ok = k.status == K.FOUND and k.exact and K.verify_kkt(P, x, k.multipliers).status == K.VERIFIED
    dt = time.perf_counter() - t0
    ok = horizon_ok and nn_ok and held_ok and k_ok and dt < 1.0
    record(1, ok, f"horizon={horizon_ok} NNAMCQ={nn.verdict} {held} KKT={k.status} {dt:.2f}s")
    assert ok


def test_criterion_02_example2(ex):
    t0 = time.perf_counter()
    P = ex["example2"]
    x = (F(1), F(0), F(0))
    rc = Q.check_rcpld_horizon(P, x)
    c = rc.certificate
    lam = [F(v) for v in c.get("lambda", [])]
    mu = [F(v) for v in c.get("mu", [])]
    mult = lam + mu
    prop = len(mult) == 2 and mult[0] != 0 and mult[0] == -mult[1]
    probe = c.get("probe")
    probe_ok = probe is not None and probe[2] != 0
    qn = Q.check_quasinormality_horizon(P, x, Q.DEFAULT_RADII, 512, 42)
    dt = time.perf_counter() - t0
    ok = rc.verdict == Q.LIKELY_FAILS and prop and probe_ok and qn.verdict == Q.LIKELY_HOLDS and dt < 5.0
    record(2, ok, f"RCPLD={rc.verdict} mult={[str(v) for v in mult]} x3={probe and probe[2]:.3g} QN={qn.verdict} {dt:.2f}s")
    assert ok


def test_criterion_03_example3(ex):
    P = ex["example3"]
    x = P.point
    v = {c: Q.run_check(P, x, c).verdict for c in ("bq", "cond13", "qn", "dqn")}
    ok = all(s == Q.CERTIFIED_HOLDS for s in v.values())
    record(3, ok, str(v))
    assert ok


def test_criterion_04_example4(ex):
    P = ex["example4"]
    x = P.point
    imp = Q.check_implication28(P, x)
    k = K.find_kkt_multipliers(P, x)
    replay = K.verify_kkt(P, x, k.multipliers) if k.multipliers else None
    ok = imp.verdict == Q.CERTIFIED_HOLDS and k.status == K.FOUND and k.exact and replay.status == K.VERIFIED
    record(4, ok, f"IMPLICATION28={imp.verdict} KKT={k.status} lambda={[str(v) for v in k.multipliers.lam] if k.multipliers else None}")
    assert ok


def test_criterion_05_cross_check():
    agree, total, rows = 0, 0, []
    for seed in range(20):
        P = instances.random_affine(seed)
        x, zero = P.point, PolySet.zero(P.dim)
        bq = Q.check_bq(P, x).holds
        pairs = [
            (Q.check_quasinormality_horizon(P, x), Q.check_quasinormality_horizon(P, x, cone=zero)),
            (Q.check_rcpld_horizon(P, x), Q.check_rcpld_horizon(P, x, cone=zero)),
        ]
        for full, std in pairs:
            total += 1
            same = full.holds == (std.holds and bq) and full.fails == (std.fails or not bq)
            agree += same
            if not same:
                rows.append((seed, full.condition, full.verdict, std.verdict, bq))
    ok = agree == total
    record(5, ok, f"{agree}/{total} agree {rows}")
    assert ok


def _persistence_instances(ex):
    yield from ((n, P) for n, P in ex.items())
    for seed in range(20):
        yield f"random_affine_{seed}", instances.random_affine(seed)


def test_criterion_06_persistence(ex):
    checked, bad = 0, []
    for name, P in _persistence_instances(ex):
        x = P.point
        for c in Q.CONDITION_ALIASES:
            if Q.run_check(P, x, c).verdict != Q.CERTIFIED_HOLDS:
                continue
            rep = Q.persistence_probe(P, x, c, radius=1e-3, samples=64, seed=42)
            checked += 1
            if rep.failures or rep.sampled == 0:
                bad.append((name, c, len(rep.failures), rep.sampled))
    ok = not bad and checked > 0
    record(6, ok, f"{checked} certified conditions probed, failures={bad}")
    assert ok


def _prox_oracle(lam, v):
    """Dense grid, then bounded scalar refinement; 0 wins ties and near-ties."""
    lo, hi = -abs(v) - 1.0, abs(v) + 1.0
    t = np.linspace(lo, hi, 200_001)
    obj = 0.5 * (t - v) ** 2 + lam * np.sqrt(np.abs(t))
    k = int(np.argmin(obj))
    a, b = t[max(k - 1, 0)], t[min(k + 1, t.size - 1)]
    r = minimize_scalar(lambda s: 0.5 * (s - v) ** 2 + lam * np.sqrt(abs(s)), bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    return 0.0 if 0.5 * v * v <= r.fun + 1e-13 else float(r.x)


def test_criterion_07_prox_oracle():
    rng = np.random.default_rng(7)
    worst, zeros_ok, n_zero = 0.0, True, 0
    pairs = [(float(lam), float(v)) for lam, v in zip(rng.uniform(0.05, 3.0, 100), rng.uniform(-6.0, 6.0, 100))]
    pairs[:10] = [(lam, 0.5 * v / 6.0) for lam, v in pairs[:10]]  # force the thresholding region
    for lam, v in pairs:
        got = PS.prox_pow_abs(F(1, 2), lam, v)
        want = _prox_oracle(lam, v)
        worst = max(worst, abs(got - want))
        if want == 0.0:
            n_zero += 1
            zeros_ok &= got == 0.0
    ok = worst <= 1e-6 and zeros_ok and n_zero > 0
    record(7, ok, f"worst |diff|={worst:.2e} over 100 pairs, {n_zero} exact zeros")
    assert ok


def test_criterion_08_penalty_exactness():
    t0 = time.perf_counter()
    cases = [("example1", instances.example("example1")), ("bridge_union", instances.bridge_union())]
    parts, ok = [], True
    for name, P in cases:
        x = P.point
        r0 = PN.find_rho0(P, x, radius=0.1, samples=10_000, seed=42)
        if r0.rho0 is None:
            ok = False
            parts.append(f"{name}: cap reached")
            continue
        recs = [PN.validate_exactness(PN.build_penalty(P, r, None), x, 0.1, 10_000, 42) for r in (r0.rho0, 2 * r0.rho0)]
        # monotonicity: penalized values are pointwise non-decreasing in rho on the sample set
        S = PN.exactness_samples(PN.build_penalty(P, 1.0, None), x, 0.1, 10_000, 42)
        vals = [S.base + rho * S.residual for rho in (r0.rho0, 2 * r0.rho0, 4 * r0.rho0)]
        mono = bool(np.all(vals[0] <= vals[1] + 1e-12) and np.all(vals[1] <= vals[2] + 1e-12))
        passed = all(r.passed for r in recs)
        ok &= r0.rho0 <= 2**10 and passed and mono and all(r.samples >= 10_000 for r in recs)
        parts.append(f"{name}: rho0={r0.rho0:g} valid at rho0,2rho0={passed} monotone={mono}")
    dt = time.perf_counter() - t0
    ok &= dt < 30.0
    record(8, ok, "; ".join(parts) + f" {dt:.1f}s")
    assert ok


def _affine_systems():
    for name in instances.EXAMPLES:
        P = instances.example(name)
        if P.constraints_affine:
            yield name, P
        try:
            R = PN.build_restricted_system(P, P.point)
        except Exception:
            continue
        if isinstance(R.target(), PN.PolyTarget):
            yield f"{name}/restricted", R
    yield "bridge_union", instances.bridge_union()
    for seed in range(5):
        yield f"random_affine_{seed}", instances.random_affine(seed)


def test_criterion_09_error_bound():
    bad, n = [], 0
    for name, system in _affine_systems():
        est = PN.estimate_error_bound(system)
        ratios = [m for _, m, k in est.table if k > 0 and m > 0]
        drift = max(ratios) / min(ratios) if ratios else float("inf")
        n += 1
        if est.verdict != PN.BOUNDED or drift > 10:
            bad.append((name, est.verdict, round(drift, 2)))
    canary = PN.estimate_error_bound(instances.square_canary())
    ok = not bad and canary.verdict == PN.GROWING
    record(9, ok, f"{n} polyhedral systems BOUNDED (bad={bad}); canary={canary.verdict}")
    assert ok


def _random_lp(rnd):
    n, r = rnd.randint(1, 10), rnd.randint(1, 10)
    q = lambda: F(rnd.randint(-9, 9), rnd.randint(1, 5))
    rows = [[q() for _ in range(n)] for _ in range(r)]
    k = rnd.randint(0, r)
    nonneg = [j for j in range(n) if rnd.random() < 0.6]
    return LPK.make_lp([q() for _ in range(n)], rows[:k], [q() for _ in range(k)], rows[k:], [q() for _ in range(r - k)], nonneg, rnd.random() < 0.5)


def test_criterion_10_lp_kernel():
    rnd = random.Random(10)
    bad, status = 0, {}
    for _ in range(500):
        lp = _random_lp(rnd)
        res = LPK.solve(lp)
        status[res.status] = status.get(res.status, 0) + 1
        bad += not LPK.verify(lp, res)
    ok = bad == 0 and len(status) >= 2
    record(10, ok, f"500 LPs, {bad} discrepancies, statuses={dict(sorted(status.items()))}")
    assert ok


def test_criterion_11_solver():
    line = PS.solve(PN.build_penalty(instances.prox_line(), 1.0), [0.0])
    want = PS.prox_pow_abs(F(1, 2), 1.0, 10.0)
    line_ok = abs(line.x[0] - want) <= 1e-6
    P = instances.example("example1")
    r0 = PN.find_rho0(P, P.point).rho0
    res = PS.solve(PN.build_penalty(P, r0), [1.0, 0.0, 1.0, 0.0])
    xs = [float(v) for v in res.x]
    k = K.find_kkt_multipliers(P, xs)
    v = K.verify_kkt(P, xs, k.multipliers) if k.multipliers else None
    kkt_ok = v is not None and v.status == K.VERIFIED and v.residual <= 1e-6
    ok = line_ok and kkt_ok
    record(11, ok, f"prox line |diff|={abs(line.x[0] - want):.1e}; example1 rho0={r0:g} x={np.round(xs, 9).tolist()} KKT={v and v.status} residual={v and v.residual:.1e}")
    assert ok
