"""Bundled examples and seeded instance generators."""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources

import numpy as np

from .model import ProblemSpec, load_problem_dict
from .rational import fmt

EXAMPLES = ("example1", "example2", "example3", "example4")


def example_dict(name: str) -> dict:
    text = resources.files("nlqual").joinpath("data", f"{name}.json").read_text()
    return json.loads(text)


def example(name: str) -> ProblemSpec:
    return load_problem_dict(example_dict(name))


def example_path(name: str):
    return resources.files("nlqual").joinpath("data", f"{name}.json")


def _s(v) -> str:
    return fmt(Fraction(v))


def _unit(d, k, c=1):
    return [_s(c if i == k else 0) for i in range(d)]


def _pow_term(d, k, p="1/2"):
    return {"outer": {"kind": "pow_abs", "p": p}, "inner": {"kind": "affine", "a": _unit(d, k), "b": "0"}}


def _box(lo, hi):
    d = len(lo)
    A, b = [], []
    for k in range(d):
        A.append(_unit(d, k, 1))
        b.append(_s(hi[k]))
        A.append(_unit(d, k, -1))
        b.append(_s(-lo[k]))
    return {"kind": "polyhedron", "A": A, "b": b}


def bridge_union_dict() -> dict:
    """Five variables, bridge penalty, linear constraints, Omega a union of two boxes.

    ``x* = (1, 0, 0, 4, 0)`` is a local minimizer; the boxes meet on the
    face ``x1 = 1``. Moving mass along ``x1 + x4`` decreases ``f`` at rate 3,
    so the L1 penalty needs ``rho >= 3``.
    """
    d = 5
    c = ["9/2", "1/2", "-1/2", "29/4", "1/3"]
    smooth = " + ".join(f"(x{k + 1} - ({c[k]}))^2/2" for k in range(d))
    return {
        "name": "bridge_union",
        "dim": d,
        "smooth": smooth,
        "phi": [_pow_term(d, k) for k in range(d)],
        "ineq": [{"kind": "affine", "a": ["0", "1", "1", "0", "0"], "b": "0", "sense": "<="}],
        "eq": [{"kind": "affine", "a": ["1", "0", "0", "1", "0"], "b": "-5", "sense": "="}],
        "omega": {
            "kind": "union",
            "pieces": [
                _box([0, -10, -10, 4, -10], [1, 10, 10, 6, 10]),
                _box([1, -10, -10, 0, -10], [3, 10, 10, 4, 10]),
            ],
        },
        "norm": "l1",
        "point": ["1", "0", "0", "4", "0"],
    }


def bridge_union() -> ProblemSpec:
    return load_problem_dict(bridge_union_dict())


def square_canary_dict() -> dict:
    """``{x : x^2 = 0}``: no local error bound at 0."""
    return {"name": "square_canary", "dim": 1, "smooth": "0", "eq": [{"kind": "smooth", "expr": "x1^2", "sense": "="}], "point": ["0"]}


def square_canary() -> ProblemSpec:
    return load_problem_dict(square_canary_dict())


def prox_line_dict(v="10") -> dict:
    """``min (x - v)^2/2 + |x|^(1/2)`` in one variable."""
    return {"name": "prox_line", "dim": 1, "smooth": f"(x1 - ({v}))^2/2", "phi": [_pow_term(1, 0)]}


def prox_line() -> ProblemSpec:
    return load_problem_dict(prox_line_dict())


def sqrt_ray_dict() -> dict:
    """``min sqrt|x1|`` subject to ``x1 <= 0`` at 0: quasi-normality fails."""
    return {
        "name": "sqrt_ray",
        "dim": 1,
        "smooth": "0",
        "phi": [_pow_term(1, 0)],
        "ineq": [{"kind": "affine", "a": ["1"], "b": "0", "sense": "<="}],
        "point": ["0"],
    }


def sqrt_ray() -> ProblemSpec:
    return load_problem_dict(sqrt_ray_dict())


def linear_eq_dict() -> dict:
    """``min -x`` subject to ``x = 0``."""
    return {"name": "linear_eq", "dim": 1, "smooth": "-x1", "eq": [{"kind": "affine", "a": ["1"], "b": "0", "sense": "="}], "point": ["0"]}


P_CHOICES = ("1/2", "1/3", "2/3", "1")


def random_affine_dict(seed: int) -> dict:
    """Separable POW_ABS terms with affine constraints, feasible at ``point``.

    ``d <= 6`` and ``n + m <= 6``; about half the coordinates of the anchor
    are zero so the non-Lipschitz kinks matter, and each inequality is
    active with probability 2/3.
    """
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 7))
    x = [int(v) if rng.random() < 0.5 else 0 for v in rng.integers(-2, 3, size=d)]
    k_terms = rng.permutation(d)[: int(rng.integers(1, d + 1))]
    phi = [_pow_term(d, int(k), str(rng.choice(P_CHOICES))) for k in sorted(k_terms)]
    total = int(rng.integers(1, 7))
    m = int(rng.integers(0, min(total, d) + 1))
    n = total - m
    ineq, eq = [], []
    for _ in range(n):
        a = [int(v) for v in rng.integers(-2, 3, size=d)]
        val = sum(ai * xi for ai, xi in zip(a, x))
        slack = 0 if rng.random() < 2 / 3 else int(rng.integers(1, 3))
        ineq.append({"kind": "affine", "a": [str(v) for v in a], "b": str(-val - slack), "sense": "<="})
    for _ in range(m):
        a = [int(v) for v in rng.integers(-2, 3, size=d)]
        val = sum(ai * xi for ai, xi in zip(a, x))
        eq.append({"kind": "affine", "a": [str(v) for v in a], "b": str(-val), "sense": "="})
    return {
        "name": f"random_affine_{seed}",
        "dim": d,
        "smooth": "0",
        "phi": phi,
        "ineq": ineq,
        "eq": eq,
        "point": [str(v) for v in x],
    }


def random_affine(seed: int) -> ProblemSpec:
    return load_problem_dict(random_affine_dict(seed))
