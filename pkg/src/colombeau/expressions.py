"""Small grammar of smooth expressions in ``x`` and ``t``.

Allowed: numbers, ``pi``, ``x``, ``t``, ``+ - * / **``, ``sin``, ``cos``,
``exp``, ``tanh`` and ``bump(arg, center, halfwidth)``, a C-infinity function
supported in ``|arg - center| < halfwidth``.  Expressions are parsed with
sympy, differentiated symbolically and lambdified to numpy.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy
from sympy.core.function import ArgumentIndexError
from sympy.parsing.sympy_parser import parse_expr

from .mollifier import bump_derivative

X, T = sympy.symbols("x t", real=True)
SYMBOLS = {"x": X, "t": T}


class ExpressionError(ValueError):
    pass


class bump_d(sympy.Function):
    """``d^k/dz^k exp(-1/(1-z^2))`` (zero outside ``|z|<1``)."""

    nargs = 2

    def fdiff(self, argindex=1):
        if argindex != 1:
            raise ArgumentIndexError(self, argindex)
        z, k = self.args
        return bump_d(z, k + 1)


def _bump(arg, center=0, halfwidth=1):
    return bump_d((arg - center) / halfwidth, 0)


def _bump_numeric(z, k):
    return bump_derivative(z, int(k))


_ALLOWED_FUNCS = {sympy.sin, sympy.cos, sympy.exp, sympy.tanh, bump_d}
_LOCALS = {
    "x": X,
    "t": T,
    "pi": sympy.pi,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "exp": sympy.exp,
    "tanh": sympy.tanh,
    "bump": _bump,
}


def parse(text, variables=("x", "t")):
    """Parse ``text`` into a sympy expression, rejecting anything off-grammar."""
    if isinstance(text, (int, float)):
        return sympy.Float(text) if isinstance(text, float) else sympy.Integer(text)
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError(f"expression must be a non-empty string, got {text!r}")
    try:
        expr = parse_expr(text, local_dict=dict(_LOCALS), evaluate=True)
    except Exception as exc:  # sympy raises a zoo of exception types
        raise ExpressionError(f"cannot parse expression {text!r}: {exc}") from None
    if not isinstance(expr, sympy.Expr):
        raise ExpressionError(f"{text!r} is not an expression")
    allowed_syms = {SYMBOLS[v] for v in variables}
    extra = expr.free_symbols - allowed_syms
    if extra:
        names = ", ".join(sorted(str(s) for s in extra))
        raise ExpressionError(f"{text!r} uses variables {names}; allowed: {', '.join(variables)}")
    for f in expr.atoms(sympy.Function):
        if f.func not in _ALLOWED_FUNCS:
            raise ExpressionError(f"function {f.func} is not in the expression grammar")
    for pw in expr.atoms(sympy.Pow):
        if pw.base.free_symbols and not pw.exp.is_integer:
            raise ExpressionError(f"non-integer power {pw} of a variable is not smooth")
    return expr


class SmoothExpr:
    """Evaluable smooth function of ``variables`` with derivatives of any order."""

    def __init__(self, text, variables=("x",)):
        self.text = text if isinstance(text, str) else repr(text)
        self.variables = tuple(variables)
        self.expr = parse(text, self.variables)
        self._syms = tuple(SYMBOLS[v] for v in self.variables)

    def __repr__(self):
        return f"SmoothExpr({self.text!r}, {self.variables})"

    @property
    def is_zero(self) -> bool:
        return self.expr == 0

    @lru_cache(maxsize=64)
    def _compiled(self, alpha):
        e = self.expr
        for sym, k in zip(self._syms, alpha):
            if k:
                e = sympy.diff(e, sym, k)
        if not e.free_symbols:
            value = float(e)
            return None, value
        fn = sympy.lambdify(self._syms, e, modules=[{"bump_d": _bump_numeric}, "numpy"])
        return fn, None

    def __call__(self, *coords):
        return self.derivative((0,) * len(self.variables), *coords)

    def derivative(self, alpha, *coords):
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != len(self.variables) or len(coords) != len(self.variables):
            raise ValueError(f"expected {len(self.variables)} coordinates and multi-index entries")
        coords = [np.asarray(c, dtype=float) for c in coords]
        fn, value = self._compiled(alpha)
        shape = np.broadcast_shapes(*(c.shape for c in coords))
        if fn is None:
            return np.full(shape, value)
        with np.errstate(all="ignore"):
            out = fn(*coords)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()
