"""Adaptive Simpson quadrature."""
from __future__ import annotations

MAX_DEPTH = 48


def adaptive_simpson(f, a, b, tol=1e-9, max_depth=MAX_DEPTH):
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _recurse(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


def piecewise_simpson(f, knots, tol=1e-9):
    """Sum of adaptive Simpson integrals over consecutive knot intervals."""
    total = 0.0
    pieces = max(len(knots) - 1, 1)
    for a, b in zip(knots[:-1], knots[1:]):
        total += adaptive_simpson(f, a, b, tol / pieces)
    return total
