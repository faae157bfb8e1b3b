import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clairmap import expr as ex

VARS = ["x", "y"]


def exprs():
    leaf = st.one_of(
        st.sampled_from(VARS).map(ex.var),
        st.floats(-3, 3, allow_nan=False).map(lambda v: ex.const(round(v, 3))),
    )

    def grow(children):
        return st.one_of(
            st.tuples(st.sampled_from(["add", "sub", "mul"]), children, children).map(lambda t: ex.binary(*t)),
            st.tuples(st.sampled_from(["sin", "cos", "exp", "neg"]), children).map(lambda t: ex.unary(*t)),
            st.tuples(children, st.integers(0, 3)).map(lambda t: ex.powi(*t)),
        )

    return st.recursive(leaf, grow, max_leaves=8)


@given(exprs(), st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=200, deadline=None)
def test_print_parse_round_trip(e, x, y):
    back = ex.parse(ex.to_string(e), VARS)
    assert back == e
    b = {"x": x, "y": y}
    v1, v2 = ex.evaluate(e, b), ex.evaluate(back, b)
    assert v1 == pytest.approx(v2, rel=1e-12, abs=1e-12)


@given(exprs(), st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=150, deadline=None)
def test_derivative_matches_central_difference(e, x, y):
    d = ex.derivative(e, "x")
    h = 1e-6
    fd = (ex.evaluate(e, {"x": x + h, "y": y}) - ex.evaluate(e, {"x": x - h, "y": y})) / (2 * h)
    exact = ex.evaluate(d, {"x": x, "y": y})
    assert exact == pytest.approx(fd, rel=1e-5, abs=1e-5 * (1 + abs(fd)))


@given(exprs(), st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=100, deadline=None)
def test_compiled_batch_agrees_with_evaluate(e, x, y):
    f = ex.CompiledBatch([e, ex.derivative(e, "y")], VARS)
    got = f([x, y])
    assert got[0] == pytest.approx(ex.evaluate(e, {"x": x, "y": y}), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize(
    "text, value",
    [
        ("1 + 2*3", 7.0),
        ("2^-2", 0.25),
        ("-x^2", 4.0),
        ("0-x^2", -4.0),
        ("exp(0)*cos(0)", 1.0),
        ("sqrt(x)*sqrt(x)", 2.0),
        ("log(exp(x))", 2.0),
        ("tan(x) - sin(x)/cos(x)", 0.0),
        ("exp(2*x)", math.exp(4.0)),
    ],
)
def test_parse_evaluate(text, value):
    assert ex.evaluate(ex.parse(text, ["x"]), {"x": 2.0}) == pytest.approx(value)


def test_folding():
    x = ex.var("x")
    assert ex.add(x, ex.ZERO) == x
    assert ex.mul(x, ex.ONE) == x
    assert ex.mul(x, ex.ZERO) == ex.ZERO
    assert ex.add(ex.const(2), ex.const(3)) == ex.const(5)
    assert ex.derivative(ex.parse("3*y", ["x", "y"]), "x") == ex.ZERO


def test_variables():
    assert ex.variables(ex.parse("x*sin(y) + 2", ["x", "y", "z"])) == {"x", "y"}


def test_parse_error_offset():
    with pytest.raises(ex.ParseError) as info:
        ex.parse("x + * 2", ["x"])
    assert info.value.offset == 4


def test_unknown_identifier():
    with pytest.raises(ex.UnknownIdentifierError) as info:
        ex.parse("x + zz", ["x"])
    assert info.value.name == "zz"
    assert info.value.offset == 4


@pytest.mark.parametrize("text, binding", [("log(x)", {"x": -1.0}), ("1/x", {"x": 0.0}), ("sqrt(x - 3)", {"x": 1.0})])
def test_domain_errors_name_subexpression(text, binding):
    e = ex.parse(text, ["x"])
    with pytest.raises(ex.DomainError) as info:
        ex.evaluate(e, binding)
    assert info.value.subexpr
    with pytest.raises(ex.DomainError):
        ex.CompiledBatch([e], ["x"])([binding["x"]])


@pytest.mark.parametrize("text", ["x^0.5", "x^y", "2^3^2"])
def test_pow_needs_integer_literal(text):
    with pytest.raises(ex.ParseError):
        ex.parse(text, ["x", "y"])


def test_fixture_style_constant():
    e = ex.parse("x2*cos(0.5235987755982988)", ["x1", "x2"])
    assert ex.evaluate(e, {"x1": 0.0, "x2": 1.0}) == pytest.approx(math.cos(math.pi / 6), abs=1e-15)


@given(st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=100, deadline=None)
def test_linearity_and_schwarz(x, y):
    e1 = ex.parse("sin(x*y) + exp(x)", VARS)
    e2 = ex.parse("x^3*cos(y)", VARS)
    comb = ex.add(ex.mul(ex.const(2.0), e1), ex.mul(ex.const(-3.0), e2))
    b = {"x": x, "y": y}
    lhs = ex.evaluate(ex.derivative(comb, "x"), b)
    rhs = 2.0 * ex.evaluate(ex.derivative(e1, "x"), b) - 3.0 * ex.evaluate(ex.derivative(e2, "x"), b)
    assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(rhs)))
    for e in (e1, e2):
        uv = ex.evaluate(ex.derivative(ex.derivative(e, "x"), "y"), b)
        vu = ex.evaluate(ex.derivative(ex.derivative(e, "y"), "x"), b)
        assert uv == pytest.approx(vu, abs=1e-9)
