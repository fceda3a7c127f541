"""Test-function mini-language with exact derivatives.

Grammar: sums and products of numbers, monomials ``x^a y^b``, ``sin(c*x)``,
``sin(c*y)``, ``cos(c*x)`` and ``cos(c*y)``.  Parsing is done by sympy on a
whitelisted character set; the resulting tree is then checked node by node.
"""
from __future__ import annotations

import math
import re
from functools import lru_cache
from itertools import product

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .errors import FunctionSpecError

X, Y = sp.symbols("x y", real=True)
_TOKEN = re.compile(r"\s+|(?P<name>[A-Za-z_]\w*)|\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+|[+\-*/^()]")
_NAMES = {"x", "y", "sin", "cos"}


def _check(node):
    if node.is_Number or node in (X, Y):
        return
    if isinstance(node, (sp.Add, sp.Mul)):
        for a in node.args:
            _check(a)
        return
    if isinstance(node, sp.Pow):
        base, ex = node.args
        if base in (X, Y) and ex.is_Integer and ex >= 0:
            return
        if ex.is_Integer and ex >= 0:
            _check(base)
            return
        raise FunctionSpecError(f"unsupported power {node}")
    if isinstance(node, (sp.sin, sp.cos)):
        arg = node.args[0]
        free = arg.free_symbols
        if len(free) == 1 and sp.degree(arg, next(iter(free))) == 1 and arg.subs(next(iter(free)), 0) == 0:
            return
        raise FunctionSpecError(f"trigonometric argument must be c*x or c*y, got {arg}")
    raise FunctionSpecError(f"unsupported term {node}")


class AnalyticFunction:
    """A parsed test function with vectorised values and partial derivatives."""

    def __init__(self, text: str):
        if not isinstance(text, str) or not text.strip():
            raise FunctionSpecError("empty function spec")
        pos = 0
        for tok in _TOKEN.finditer(text):
            if tok.start() != pos:
                break
            pos = tok.end()
            name = tok.group("name")
            if name is not None and name not in _NAMES:
                raise FunctionSpecError(f"unknown name {name!r} in function spec")
        if pos != len(text):
            raise FunctionSpecError(f"invalid character {text[pos]!r} in function spec")
        try:
            expr = parse_expr(text, local_dict={"x": X, "y": Y, "sin": sp.sin, "cos": sp.cos},
                              global_dict={"__builtins__": {}, "Integer": sp.Integer, "Float": sp.Float,
                                           "Rational": sp.Rational, "Symbol": sp.Symbol},
                              transformations=standard_transformations + (convert_xor,), evaluate=True)
        except FunctionSpecError:
            raise
        except Exception as exc:  # sympy raises a zoo of exception types
            raise FunctionSpecError(f"cannot parse {text!r}: {exc}") from None
        expr = sp.sympify(expr)
        if expr.free_symbols - {X, Y}:
            raise FunctionSpecError(f"unknown symbols {sorted(map(str, expr.free_symbols - {X, Y}))}")
        _check(sp.expand(expr))
        self.text = text
        self.expr = expr

    def __repr__(self):
        return f"AnalyticFunction({self.text!r})"

    @lru_cache(maxsize=64)
    def _compiled(self, a, b):
        d = sp.diff(self.expr, X, a, Y, b) if (a or b) else self.expr
        return sp.lambdify((X, Y), d, "numpy")

    def derivative(self, beta, pts):
        """D^beta f at points of shape (..., 2); beta = (a, b)."""
        pts = np.asarray(pts, float)
        fn = self._compiled(int(beta[0]), int(beta[1]))
        out = fn(pts[..., 0], pts[..., 1])
        return np.broadcast_to(np.asarray(out, float), pts.shape[:-1]).copy()

    def __call__(self, pts):
        return self.derivative((0, 0), pts)

    def gradient_norm(self, k, pts):
        """Euclidean norm of the k-th derivative tensor.

        All k-fold ordered partials are counted, so the multi-index beta
        enters with multiplicity k!/beta!.
        """
        acc = 0.0
        for a in range(k + 1):
            mult = math.comb(k, a)
            acc = acc + mult * self.derivative((a, k - a), pts) ** 2
        return np.sqrt(acc)

    def taylor(self, order, center, pts):
        """T^order at ``center`` evaluated at ``pts``."""
        c = np.asarray(center, float)
        d = np.asarray(pts, float) - c
        out = 0.0
        for a, b in product(range(order + 1), repeat=2):
            if a + b > order:
                continue
            coef = float(self.derivative((a, b), c)) / (math.factorial(a) * math.factorial(b))
            out = out + coef * d[..., 0] ** a * d[..., 1] ** b
        return np.broadcast_to(np.asarray(out, float), d.shape[:-1]).copy()


def parse(text: str) -> AnalyticFunction:
    return AnalyticFunction(text)
