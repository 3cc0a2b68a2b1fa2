"""Small expression grammar for smooth oracles.

Supported: numbers, variables, ``+ - * /``, ``^`` or ``**`` with integer
exponents, and the functions ``abs``, ``max``, ``sqrt``. Expressions are
evaluated exactly over ``Fraction`` when possible, vectorized in float
with numpy, and differentiated exactly with forward-mode dual numbers.
"""

from __future__ import annotations

import ast
import math
from fractions import Fraction

import numpy as np

from .errors import EvalError, ParseError

_FUNCS = {"abs": 1, "max": None, "sqrt": 1}


class Inexact(Exception):
    """Exact evaluation would need an irrational value."""


class NonDifferentiable(Exception):
    """Exact derivative is undefined at this point (kink)."""


def _exact_sqrt(q: Fraction) -> Fraction:
    if q < 0:
        raise EvalError(f"sqrt of negative value {q}")
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn != n or rd * rd != d:
        raise Inexact(f"sqrt({q}) is irrational")
    return Fraction(rn, rd)


class Dual:
    __slots__ = ("v", "g")

    def __init__(self, v: Fraction, g: tuple):
        self.v = v
        self.g = g

    @staticmethod
    def const(v, n):
        return Dual(Fraction(v), (Fraction(0),) * n)

    def __add__(self, o):
        return Dual(self.v + o.v, tuple(a + b for a, b in zip(self.g, o.g)))

    def __sub__(self, o):
        return Dual(self.v - o.v, tuple(a - b for a, b in zip(self.g, o.g)))

    def __mul__(self, o):
        return Dual(self.v * o.v, tuple(self.v * b + o.v * a for a, b in zip(self.g, o.g)))

    def __truediv__(self, o):
        if o.v == 0:
            raise EvalError("division by zero")
        q = self.v / o.v
        return Dual(q, tuple((a - q * b) / o.v for a, b in zip(self.g, o.g)))

    def __neg__(self):
        return Dual(-self.v, tuple(-a for a in self.g))

    def scaled(self, s):
        return Dual(self.v, tuple(s * a for a in self.g))


class _Node:
    __slots__ = ("op", "args", "value")

    def __init__(self, op, args=(), value=None):
        self.op = op
        self.args = args
        self.value = value


class Expr:
    """A parsed expression over named variables."""

    def __init__(self, text: str, variables: tuple[str, ...]):
        self.text = text
        self.variables = variables
        self._index = {v: k for k, v in enumerate(variables)}
        src = str(text).strip().replace("^", "**")
        if not src:
            raise ParseError("empty expression")
        try:
            tree = ast.parse(src, mode="eval")
        except SyntaxError as exc:
            raise ParseError(f"cannot parse expression {text!r}: {exc.msg}") from exc
        self._root = self._build(tree.body)
        self.used = frozenset(self._names(self._root))

    # -- construction -------------------------------------------------

    def _build(self, node) -> _Node:
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ParseError(f"unsupported constant {node.value!r} in {self.text!r}")
            return _Node("const", value=Fraction(str(node.value)))
        if isinstance(node, ast.Name):
            if node.id not in self._index:
                raise ParseError(f"unknown variable {node.id!r} in {self.text!r}")
            return _Node("var", value=self._index[node.id])
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = self._build(node.operand)
            return _Node("neg", (inner,)) if isinstance(node.op, ast.USub) else inner
        if isinstance(node, ast.BinOp):
            ops = {ast.Add: "add", ast.Sub: "sub", ast.Mult: "mul", ast.Div: "div", ast.Pow: "pow"}
            op = ops.get(type(node.op))
            if op is None:
                raise ParseError(f"unsupported operator in {self.text!r}")
            left = self._build(node.left)
            if op == "pow":
                exp = self._int_exponent(node.right)
                return _Node("pow", (left,), value=exp)
            return _Node(op, (left, self._build(node.right)))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if node.keywords:
                raise ParseError(f"keyword arguments not allowed in {self.text!r}")
            arity = _FUNCS[node.func.id]
            if (arity is not None and len(node.args) != arity) or not node.args:
                raise ParseError(f"wrong number of arguments to {node.func.id} in {self.text!r}")
            return _Node(node.func.id, tuple(self._build(a) for a in node.args))
        raise ParseError(f"unsupported syntax in {self.text!r}")

    def _int_exponent(self, node) -> int:
        sign = 1
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            sign, node = -1, node.operand
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            return sign * node.value
        raise ParseError(f"only integer exponents are allowed in {self.text!r}")

    def _names(self, n: _Node):
        if n.op == "var":
            yield n.value
        for a in n.args:
            yield from self._names(a)

    # -- evaluation ----------------------------------------------------

    def exact(self, x) -> Fraction:
        """Exact value at a rational point; raises :class:`Inexact`."""
        try:
            return self._ex(self._root, x)
        except ZeroDivisionError as exc:
            raise EvalError(f"division by zero in {self.text!r}") from exc

    def _ex(self, n: _Node, x):
        op = n.op
        if op == "const":
            return n.value
        if op == "var":
            return Fraction(x[n.value])
        a = [self._ex(c, x) for c in n.args]
        if op == "add":
            return a[0] + a[1]
        if op == "sub":
            return a[0] - a[1]
        if op == "mul":
            return a[0] * a[1]
        if op == "div":
            if a[1] == 0:
                raise EvalError(f"division by zero in {self.text!r}")
            return a[0] / a[1]
        if op == "neg":
            return -a[0]
        if op == "pow":
            if n.value < 0 and a[0] == 0:
                raise EvalError(f"zero to a negative power in {self.text!r}")
            return a[0] ** n.value
        if op == "abs":
            return abs(a[0])
        if op == "max":
            return max(a)
        if op == "sqrt":
            return _exact_sqrt(a[0])
        raise AssertionError(op)

    def __call__(self, x):
        """Float value; ``x`` may be a point or an ``(N, d)`` batch."""
        X = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = self._fl(self._root, X)
        if X.ndim == 2:
            return np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],)).copy()
        return float(out)

    def _fl(self, n: _Node, X):
        op = n.op
        if op == "const":
            return float(n.value)
        if op == "var":
            return X[..., n.value]
        a = [self._fl(c, X) for c in n.args]
        if op == "add":
            return a[0] + a[1]
        if op == "sub":
            return a[0] - a[1]
        if op == "mul":
            return a[0] * a[1]
        if op == "div":
            return a[0] / a[1]
        if op == "neg":
            return -a[0]
        if op == "pow":
            return np.power(a[0], float(n.value)) if n.value < 0 else a[0] ** n.value
        if op == "abs":
            return np.abs(a[0])
        if op == "max":
            out = a[0]
            for b in a[1:]:
                out = np.maximum(out, b)
            return out
        if op == "sqrt":
            return np.sqrt(a[0])
        raise AssertionError(op)

    def grad_exact(self, x) -> tuple:
        """Exact gradient via dual numbers; raises on kinks or irrational values."""
        nvar = len(self.variables)
        try:
            return self._du(self._root, x, nvar).g
        except ZeroDivisionError as exc:
            raise EvalError(f"division by zero in {self.text!r}") from exc

    def _du(self, n: _Node, x, nvar):
        op = n.op
        if op == "const":
            return Dual.const(n.value, nvar)
        if op == "var":
            g = [Fraction(0)] * nvar
            g[n.value] = Fraction(1)
            return Dual(Fraction(x[n.value]), tuple(g))
        a = [self._du(c, x, nvar) for c in n.args]
        if op == "add":
            return a[0] + a[1]
        if op == "sub":
            return a[0] - a[1]
        if op == "mul":
            return a[0] * a[1]
        if op == "div":
            return a[0] / a[1]
        if op == "neg":
            return -a[0]
        if op == "pow":
            k = n.value
            u = a[0]
            if k == 0:
                return Dual.const(1, nvar)
            if k < 0 and u.v == 0:
                raise EvalError(f"zero to a negative power in {self.text!r}")
            return Dual(u.v**k, tuple(k * u.v ** (k - 1) * gi for gi in u.g))
        if op == "abs":
            u = a[0]
            if u.v == 0:
                if all(gi == 0 for gi in u.g):
                    return u
                raise NonDifferentiable("abs at zero")
            return u if u.v > 0 else -u
        if op == "max":
            top = max(u.v for u in a)
            winners = [u for u in a if u.v == top]
            if any(w.g != winners[0].g for w in winners[1:]):
                raise NonDifferentiable("max with tied arguments")
            return winners[0]
        if op == "sqrt":
            u = a[0]
            if u.v == 0:
                raise NonDifferentiable("sqrt at zero")
            r = _exact_sqrt(u.v)
            return Dual(r, tuple(gi / (2 * r) for gi in u.g))
        raise AssertionError(op)

    def grad_fd(self, x, h: float = 1e-6) -> np.ndarray:
        """Central finite differences (float)."""
        x = np.asarray(x, dtype=float)
        g = np.empty(x.size)
        for k in range(x.size):
            e = np.zeros(x.size)
            e[k] = h
            g[k] = (self(x + e) - self(x - e)) / (2 * h)
        return g

    def gradient(self, x):
        """Return ``(grad, exact)``: exact Fractions when possible, else floats."""
        try:
            return self.grad_exact([Fraction(v) for v in x]), True
        except (Inexact, NonDifferentiable, TypeError):
            return tuple(float(v) for v in self.grad_fd([float(v) for v in x])), False

    def value(self, x):
        """Return ``(value, exact)``."""
        try:
            return self.exact([Fraction(v) for v in x]), True
        except (Inexact, TypeError):
            return self([float(v) for v in x]), False

    def __repr__(self):
        return f"Expr({self.text!r})"


def variables_for(dim: int) -> tuple[str, ...]:
    return tuple(f"x{k + 1}" for k in range(dim))


def parse(text: str, dim: int) -> Expr:
    return Expr(text, variables_for(dim))


def parse_t(text: str) -> Expr:
    return Expr(text, ("t",))
