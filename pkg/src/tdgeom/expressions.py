"""Arithmetic expressions in t and x1..xn, for fields given in scenario files.

Only numbers, the variables, ``pi`` and ``e``, the usual operators and a fixed
set of elementary functions are accepted.  The parsed tree is checked node by
node before it is compiled, and it is evaluated without builtins.  Compiled
expressions accept dual numbers, so derivatives come for free.
"""
from __future__ import annotations

import ast
import re

import numpy as np

from .errors import InputError

FUNCTIONS = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "arctan", "arcsin", "arccos")
}
CONSTANTS = {"pi": np.pi, "e": np.e}

_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
          ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)
_VAR = re.compile(r"x([1-9][0-9]*)$")


class Expression:
    """A compiled scalar expression; call it as ``expr(t, x)``."""

    def __init__(self, source, dim):
        self.source = str(source)
        self.dim = int(dim)
        try:
            tree = ast.parse(self.source.strip(), mode="eval")
        except SyntaxError as exc:
            raise InputError(f"cannot parse expression {self.source!r}: {exc.msg}") from None
        for node in ast.walk(tree):
            self._check(node)
        self._code = compile(tree, "<expression>", "eval")

    def _check(self, node):
        if not isinstance(node, _NODES):
            raise InputError(f"expression {self.source!r}: {type(node).__name__} is not allowed")
        if isinstance(node, ast.Constant) and (isinstance(node.value, bool) or
                                               not isinstance(node.value, (int, float))):
            raise InputError(f"expression {self.source!r}: only numeric constants are allowed")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise InputError(f"expression {self.source!r}: unknown function")
            if node.keywords or len(node.args) != 1:
                raise InputError(f"expression {self.source!r}: functions take exactly one argument")
        if isinstance(node, ast.Name) and node.id not in FUNCTIONS:
            if node.id in CONSTANTS or node.id == "t":
                return
            m = _VAR.match(node.id)
            if m is None or int(m.group(1)) > self.dim:
                raise InputError(f"expression {self.source!r}: unknown name {node.id!r} "
                                 f"(use t and x1..x{self.dim})")

    def __call__(self, t, x):
        scope = {"t": t, **CONSTANTS, **FUNCTIONS}
        for i in range(self.dim):
            scope[f"x{i + 1}"] = x[i]
        return eval(self._code, {"__builtins__": {}}, scope)  # noqa: S307 - tree checked above

    def __repr__(self):
        return f"Expression({self.source!r})"


def compile_vector(sources, dim):
    """Vector-valued ``f(t, x)`` from a list of expressions (numbers allowed)."""
    exprs = [Expression(s, dim) for s in sources]

    def fn(t, x):
        vals = [ex(t, x) for ex in exprs]
        return np.array(vals, dtype=object) if any(not isinstance(v, (int, float)) for v in vals) \
            else np.array(vals, dtype=float)

    return fn


def compile_matrix(rows, dim):
    """Matrix-valued ``f(t, x)`` from nested lists of expressions."""
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise InputError(f"matrix must be {dim} x {dim}")
    cells = [[Expression(s, dim) for s in row] for row in rows]

    def fn(t, x):
        return np.array([[float(c(t, x)) for c in row] for row in cells])

    return fn


def compile_scalar(source, dim):
    return Expression(source, dim)
