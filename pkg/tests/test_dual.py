import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdgeom import dual
from tdgeom.dual import Dual

finite = st.floats(-3, 3, allow_nan=False)


def test_product_and_chain_rule():
    assert dual.diff(lambda x: x * x * x, 2.0) == pytest.approx(12.0)
    assert dual.diff(lambda x: np.sin(x) * np.exp(x), 0.3) == pytest.approx(math.exp(0.3) * (math.sin(0.3) + math.cos(0.3)))


def test_division_and_powers():
    assert dual.diff(lambda x: 1.0 / x, 2.0) == pytest.approx(-0.25)
    assert dual.diff(lambda x: x ** 2.5, 4.0) == pytest.approx(2.5 * 4.0 ** 1.5)
    assert dual.diff(lambda x: 2.0 ** x, 1.0) == pytest.approx(2.0 * math.log(2.0))


@pytest.mark.parametrize("name, fprime", [
    ("sin", math.cos), ("cos", lambda x: -math.sin(x)), ("tan", lambda x: 1 / math.cos(x) ** 2),
    ("exp", math.exp), ("log", lambda x: 1 / x), ("sqrt", lambda x: 0.5 / math.sqrt(x)),
    ("sinh", math.cosh), ("cosh", math.sinh), ("tanh", lambda x: 1 - math.tanh(x) ** 2),
    ("arctan", lambda x: 1 / (1 + x * x)), ("arcsin", lambda x: 1 / math.sqrt(1 - x * x)),
    ("arccos", lambda x: -1 / math.sqrt(1 - x * x)),
])
def test_elementary_functions(name, fprime):
    f = getattr(np, name)
    assert dual.diff(f, 0.4) == pytest.approx(fprime(0.4), rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(finite, finite)
def test_matches_finite_difference(a, x):
    f = lambda u: np.sin(a * u) + u * u * np.cos(u)  # noqa: E731
    h = 1e-6
    fd = (f(x + h) - f(x - h)) / (2 * h)
    assert dual.diff(f, x) == pytest.approx(fd, abs=1e-6)


def test_nested_duals_avoid_perturbation_confusion():
    # d/dx [ x * d/dy (x + y) ] = 1; a naive implementation gives 2
    def inner(x):
        return dual.diff(lambda y: x + y, 1.0)

    assert dual.diff(lambda x: x * inner(x), 1.0) == pytest.approx(1.0)


def test_second_derivative_by_nesting():
    d2 = dual.diff(lambda x: dual.diff(lambda y: y ** 3, x), 2.0)
    assert d2 == pytest.approx(12.0)


def test_jacobian_stacks_columns_last():
    f = lambda x: np.array([x[0] * x[1], np.sin(x[0])])  # noqa: E731
    J = dual.jacobian(f, np.array([2.0, 3.0]))
    assert np.allclose(J, [[3.0, 2.0], [math.cos(2.0), 0.0]])


def test_ndarray_times_dual():
    d = Dual(2.0, 1.0, dual.new_tag())
    out = np.array([1.0, 3.0]) * d
    assert [v.re for v in out] == [2.0, 6.0]
    assert [v.du for v in out] == [1.0, 3.0]


def test_comparisons_use_real_part():
    tag = dual.new_tag()
    assert Dual(1.0, 5.0, tag) < Dual(2.0, -5.0, tag)
    assert abs(Dual(-3.0, 1.0, tag)).re == 3.0


def test_strip_and_real_array():
    tag = dual.new_tag()
    y = Dual(1.0, 3.0, tag)
    assert dual.derivative(y, tag) == 3.0
    assert dual.strip(y, tag) == 1.0
    assert dual.derivative(2.0, tag) == 0.0
    assert dual.real_array([Dual(1.5, 1.0, tag), 2.0]).tolist() == [1.5, 2.0]
