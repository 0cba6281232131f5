"""Tagged forward-mode dual numbers.

A ``Dual`` is ``re + du*e`` with ``e**2 == 0``.  Every seed gets a fresh
integer tag; the components of a dual with tag ``k`` only ever contain duals
with tags ``< k``.  Binary operations split both operands with respect to the
larger tag, so nesting (mixed derivatives, derivatives of derivatives) does not
suffer from perturbation confusion.

User evaluators should use numpy functions (``np.sin``, ``np.exp`` ...);
numpy dispatches those to the methods of the same name on object operands.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

_tags = itertools.count(1)


def new_tag():
    return next(_tags)


def _split(u, tag):
    if isinstance(u, Dual) and u.tag == tag:
        return u.re, u.du
    return u, 0.0


class Dual:
    __slots__ = ("re", "du", "tag")

    def __init__(self, re, du, tag):
        self.re = re
        self.du = du
        self.tag = tag

    def __repr__(self):
        return f"Dual({self.re!r}, {self.du!r}, tag={self.tag})"

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        tag = _top(self, other)
        a, b = _split(self, tag)
        c, d = _split(other, tag)
        return Dual(a + c, b + d, tag)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        tag = _top(self, other)
        a, b = _split(self, tag)
        c, d = _split(other, tag)
        return Dual(a - c, b - d, tag)

    def __rsub__(self, other):
        tag = _top(self, other)
        a, b = _split(self, tag)
        c, d = _split(other, tag)
        return Dual(c - a, d - b, tag)

    def __mul__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        tag = _top(self, other)
        a, b = _split(self, tag)
        c, d = _split(other, tag)
        return Dual(a * c, a * d + b * c, tag)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        tag = _top(self, other)
        a, b = _split(self, tag)
        c, d = _split(other, tag)
        q = a / c
        return Dual(q, (b - q * d) / c, tag)

    def __rtruediv__(self, other):
        tag = _top(self, other)
        a, b = _split(self, tag)
        c, d = _split(other, tag)
        q = c / a
        return Dual(q, (d - q * b) / a, tag)

    def __neg__(self):
        return Dual(-self.re, -self.du, self.tag)

    def __pos__(self):
        return self

    def __pow__(self, p):
        if isinstance(p, Dual):
            return exp(p * log(self))
        if p == 0:
            return Dual(1.0, 0.0, self.tag)
        if p == 1:
            return self
        if p == 2:
            return self * self
        return Dual(self.re ** p, p * self.re ** (p - 1) * self.du, self.tag)

    def __rpow__(self, base):
        return exp(self * math.log(base))

    def __abs__(self):
        return -self if real_part(self) < 0 else self

    # comparisons act on the underlying real value ---------------------------
    def __lt__(self, other):
        return real_part(self) < real_part(other)

    def __le__(self, other):
        return real_part(self) <= real_part(other)

    def __gt__(self, other):
        return real_part(self) > real_part(other)

    def __ge__(self, other):
        return real_part(self) >= real_part(other)

    def __float__(self):
        return float(real_part(self))

    # numpy object-dtype dispatch targets ------------------------------------
    def sin(self):
        return Dual(np.sin(self.re), np.cos(self.re) * self.du, self.tag)

    def cos(self):
        return Dual(np.cos(self.re), -np.sin(self.re) * self.du, self.tag)

    def tan(self):
        c = np.cos(self.re)
        return Dual(np.tan(self.re), self.du / (c * c), self.tag)

    def exp(self):
        e = np.exp(self.re)
        return Dual(e, e * self.du, self.tag)

    def log(self):
        return Dual(np.log(self.re), self.du / self.re, self.tag)

    def sqrt(self):
        r = np.sqrt(self.re)
        return Dual(r, self.du / (2.0 * r), self.tag)

    def sinh(self):
        return Dual(np.sinh(self.re), np.cosh(self.re) * self.du, self.tag)

    def cosh(self):
        return Dual(np.cosh(self.re), np.sinh(self.re) * self.du, self.tag)

    def tanh(self):
        th = np.tanh(self.re)
        return Dual(th, (1.0 - th * th) * self.du, self.tag)

    def arctan(self):
        return Dual(np.arctan(self.re), self.du / (1.0 + self.re * self.re), self.tag)

    def arcsin(self):
        return Dual(np.arcsin(self.re), self.du / np.sqrt(1.0 - self.re * self.re), self.tag)

    def arccos(self):
        return Dual(np.arccos(self.re), -self.du / np.sqrt(1.0 - self.re * self.re), self.tag)

    def square(self):
        return self * self

    def isfinite(self):
        return bool(np.isfinite(real_part(self)))


def _top(u, w):
    tu = u.tag if isinstance(u, Dual) else 0
    tw = w.tag if isinstance(w, Dual) else 0
    return tu if tu > tw else tw


def real_part(u):
    while isinstance(u, Dual):
        u = u.re
    return u


sin = np.sin
cos = np.cos
tan = np.tan
exp = np.exp
log = np.log
sqrt = np.sqrt


def seed(value, tag):
    """Return ``value + 1*e`` under ``tag``."""
    return Dual(value, 1.0, tag)


def derivative(y, tag):
    """Coefficient of the infinitesimal ``tag`` in ``y`` (scalar)."""
    if not isinstance(y, Dual) or y.tag < tag:
        return 0.0
    if y.tag == tag:
        return y.du
    return Dual(derivative(y.re, tag), derivative(y.du, tag), y.tag)


def strip(y, tag):
    """Drop the ``tag`` infinitesimal from ``y`` (scalar)."""
    if not isinstance(y, Dual) or y.tag < tag:
        return y
    if y.tag == tag:
        return y.re
    return Dual(strip(y.re, tag), strip(y.du, tag), y.tag)


_vderiv = np.frompyfunc(derivative, 2, 1)
_vreal = np.frompyfunc(real_part, 1, 1)


def derivative_array(y, tag):
    """Elementwise ``derivative``; float arrays stay float when possible."""
    out = _vderiv(np.asarray(y, dtype=object), tag)
    return _maybe_float(out)


def real_array(y):
    return np.asarray(_vreal(np.asarray(y, dtype=object)), dtype=float)


def _maybe_float(arr):
    arr = np.asarray(arr, dtype=object)
    if any(isinstance(v, Dual) for v in arr.flat):
        return arr
    return arr.astype(float)


def diff(f, x0):
    """Derivative of a scalar function of one variable at ``x0``."""
    tag = new_tag()
    return derivative_array(f(seed(x0, tag)), tag)


def directional(f, x, direction, *args):
    """Directional derivative of ``f(*args, x)`` along ``direction``.

    ``x`` may itself hold duals; the result then carries them along.
    """
    tag = new_tag()
    xs = np.empty(len(x), dtype=object)
    for i, (xi, di) in enumerate(zip(x, direction)):
        xs[i] = Dual(xi, di, tag) if di != 0 else xi
    return derivative_array(f(*args, xs), tag)


def jacobian(f, x, *args):
    """Columns ``d f(*args, x) / d x_j`` stacked on the last axis."""
    n = len(x)
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cols.append(np.asarray(directional(f, x, e, *args)))
    return _stack_last(cols)


def _stack_last(cols):
    if all(np.asarray(c).dtype != object for c in cols):
        return np.stack([np.asarray(c, dtype=float) for c in cols], axis=-1)
    return np.stack([np.asarray(c, dtype=object) for c in cols], axis=-1)
