import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meanval import exprlang
from meanval.errors import ArityError, EvalError, ExprSyntaxError, UnknownIdentifier


def test_parse_call_ast():
    e = exprlang.parse("sin(x0)", 1)
    assert e.ast == exprlang.Call("sin", (exprlang.Var(0),))


def test_cone_indicator():
    e = exprlang.parse("indicator(abs(x1) <= abs(x0)*0.41421356)", 2)
    pts = np.array([[1.0, 0.4], [1.0, 0.5], [-2.0, -0.8], [0.0, 0.0]])
    assert exprlang.evaluate(e, pts).tolist() == [1.0, 0.0, 1.0, 1.0]


def test_syntax_error_position():
    with pytest.raises(ExprSyntaxError) as info:
        exprlang.parse("x0 + ", 1)
    assert info.value.column == 6 and info.value.line == 1


def test_syntax_error_on_second_line():
    with pytest.raises(ExprSyntaxError) as info:
        exprlang.parse("x0 +\n * 2", 1)
    assert info.value.line == 2


@pytest.mark.parametrize("src", ["foo(x0)", "y", "x2"])
def test_unknown_identifier(src):
    with pytest.raises(UnknownIdentifier):
        exprlang.parse(src, 2)


@pytest.mark.parametrize("src", ["sin(x0, x0)", "min()", "indicator(x0)"])
def test_arity_and_shape_errors(src):
    with pytest.raises((ArityError, ExprSyntaxError)):
        exprlang.parse(src, 1)


def test_comparison_outside_indicator_rejected():
    with pytest.raises(ExprSyntaxError):
        exprlang.parse("x0 < 1", 1)


@pytest.mark.parametrize(
    "src,point,value",
    [
        ("1", [7.0], 1.0),
        ("norm2(x0,x1)", [3.0, 4.0], 5.0),
        ("exp(-x0^2)", [0.0], 1.0),
        ("2^3^2", [0.0], 512.0),
        ("-2^2", [0.0], -4.0),
        ("normInf(x0, -5, 2)", [1.0], 5.0),
        ("min(x0, 3, -1) + max(2, x0)", [4.0], 3.0),
        ("atan(1)*4", [0.0], math.pi),
        ("pi", [0.0], math.pi),
        ("indicator(x0 >= 1) + indicator(x0 > 1)", [1.0], 1.0),
        ("10 - 4 - 3", [0.0], 3.0),
        ("12 / 3 / 2", [0.0], 2.0),
    ],
)
def test_eval_examples(src, point, value):
    assert exprlang.evaluate(exprlang.parse(src, len(point)), point) == pytest.approx(value, rel=1e-15)


def test_unicode_comparisons():
    e = exprlang.parse("indicator(x0 ≤ 1)", 1)
    assert exprlang.evaluate(e, [1.0]) == 1.0


@pytest.mark.parametrize("src", ["1/x0", "log(x0)", "sqrt(x0 - 1)", "(-1)^0.5"])
def test_guarded_domains(src):
    with pytest.raises(EvalError):
        exprlang.evaluate(exprlang.parse(src, 1), [0.0])


def test_batch_evaluation_matches_pointwise(rng):
    e = exprlang.parse("sin(x0)*cos(x1) + abs(x0 - x1)^1.5 / (1 + x1^2)", 2)
    pts = rng.normal(size=(50, 2))
    batch = exprlang.evaluate(e, pts)
    single = [exprlang.evaluate(e, p) for p in pts]
    np.testing.assert_array_equal(batch, single)
    ref = np.sin(pts[:, 0]) * np.cos(pts[:, 1]) + np.abs(pts[:, 0] - pts[:, 1]) ** 1.5 / (1 + pts[:, 1] ** 2)
    np.testing.assert_allclose(batch, ref, rtol=1e-14)


# --- property tests ---------------------------------------------------------

_leaf = st.one_of(
    st.sampled_from(["x0", "x1", "pi"]),
    st.floats(0, 100, allow_nan=False).map(repr),
)


def _combine(children):
    binop = st.tuples(children, st.sampled_from(["+", "-", "*", "/", "^"]), children).map(
        lambda t: f"({t[0]} {t[1]} {t[2]})")
    call1 = st.tuples(st.sampled_from(["sin", "cos", "abs", "atan", "exp"]), children).map(
        lambda t: f"{t[0]}({t[1]})")
    calln = st.tuples(st.sampled_from(["min", "max", "norm2", "normInf"]), st.lists(children, min_size=1, max_size=3)).map(
        lambda t: f"{t[0]}({', '.join(t[1])})")
    neg = children.map(lambda c: f"-{c}")
    ind = st.tuples(children, st.sampled_from(["<", "<=", ">", ">="]), children).map(
        lambda t: f"indicator({t[0]} {t[1]} {t[2]})")
    return st.one_of(binop, call1, calln, neg, ind)


exprs = st.recursive(_leaf, _combine, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(exprs)
def test_pretty_round_trip_is_fixed_point(src):
    once = exprlang.pretty(exprlang.parse(src, 2))
    twice = exprlang.pretty(exprlang.parse(once, 2))
    assert once == twice


@settings(max_examples=100, deadline=None)
@given(exprs, st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_evaluation_is_pure(src, point):
    e = exprlang.parse(src, 2)
    try:
        a = exprlang.evaluate(e, point)
    except EvalError:
        with pytest.raises(EvalError):
            exprlang.evaluate(e, point)
        return
    b = exprlang.evaluate(exprlang.parse(exprlang.pretty(e), 2), point)
    assert (a == b) or (math.isnan(a) and math.isnan(b))
