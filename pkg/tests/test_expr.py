import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crofton_lab.expr import (
    DomainError,
    ParseError,
    UnknownIdentifierError,
    differentiate,
    evaluate,
    parse,
    to_text,
)

# -- random expressions that stay finite on the closed unit disc


def _leaf(rng):
    r = rng.integers(3)
    if r == 0:
        return "x"
    if r == 1:
        return "y"
    return f"{rng.uniform(0.25, 3.0):.4f}"


def random_source(rng, depth=4):
    if depth == 0 or rng.random() < 0.2:
        return _leaf(rng)
    a = random_source(rng, depth - 1)
    kind = rng.integers(11)
    if kind < 3:
        op = "+-*"[kind]
        return f"({a}){op}({random_source(rng, depth - 1)})"
    if kind == 3:
        return f"({a})/(1+({random_source(rng, depth - 1)})^2)"
    if kind == 4:
        return f"sin({a})"
    if kind == 5:
        return f"cos({a})"
    if kind == 6:
        return f"exp(sin({a}))"
    if kind == 7:
        return f"log(1+({a})^2)"
    if kind == 8:
        return f"sqrt(2+cos({a}))"
    if kind == 9:
        return f"-({a})"
    return f"(cos({a}))^3"


def disc_points(rng, n):
    r = np.sqrt(rng.uniform(0, 1, n))
    a = rng.uniform(0, 2 * np.pi, n)
    return r * np.cos(a), r * np.sin(a)


def fd(tree, x, y, var, h=1e-3):
    """Five-point central difference."""
    def f(d):
        return evaluate(tree, x + d, y) if var == "x" else evaluate(tree, x, y + d)

    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)


def derivative_probes(seed=20240501, n_expr=20, n_pts=20):
    """Largest relative gap between symbolic and finite-difference derivatives."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_expr):
        tree = parse(random_source(rng))
        xs, ys = disc_points(rng, n_pts)
        var = "x" if rng.random() < 0.5 else "y"
        sym = evaluate(differentiate(tree, var), xs, ys)
        num = fd(tree, xs, ys, var)
        worst = max(worst, float(np.max(np.abs(sym - num) / np.maximum(np.abs(sym), 1.0))))
    return worst


# -- examples


def test_hemisphere_scale_values():
    tree = parse("2/(1+x^2+y^2)")
    assert evaluate(tree, 0.0, 0.0) == 2.0
    assert evaluate(tree, 1.0, 0.0) == 1.0


def test_hemisphere_scale_derivative():
    d = differentiate(parse("2/(1+x^2+y^2)"), "x")
    assert evaluate(d, 1.0, 0.0) == pytest.approx(-1.0, abs=1e-15)


def test_product_derivative():
    assert evaluate(differentiate(parse("x^2*y"), "x"), 3.0, 2.0) == pytest.approx(12.0)


def test_derivative_of_constant_is_zero():
    assert evaluate(differentiate(parse("3*sin(2)"), "y"), 0.4, 0.1) == 0.0


def test_array_evaluation_matches_scalar():
    tree = parse("exp(x)*cos(y)+sqrt(1+x^2)")
    xs = np.linspace(-0.7, 0.7, 9)
    ys = np.linspace(0.6, -0.6, 9)
    vec = evaluate(tree, xs, ys)
    assert vec.shape == (9,)
    for x, y, v in zip(xs, ys, vec):
        assert v == evaluate(tree, x, y)


def test_precedence_and_associativity():
    assert evaluate(parse("-x^2"), 3.0, 0.0) == -9.0
    assert evaluate(parse("2^3^2"), 0.0, 0.0) == 512.0
    assert evaluate(parse("1-2-3"), 0.0, 0.0) == -4.0
    assert evaluate(parse("8/4/2"), 0.0, 0.0) == 1.0
    assert evaluate(parse("2*x+3*y"), 1.0, 2.0) == 8.0
    assert evaluate(parse("1e-1 + .5"), 0.0, 0.0) == pytest.approx(0.6)


def test_syntax_error_position():
    with pytest.raises(ParseError) as info:
        parse("1+*2")
    assert info.value.pos == 2
    assert "position 2" in str(info.value)


@pytest.mark.parametrize("text", ["", "(1+x", "x y", "sin x", "2^", "1+", "x)"])
def test_malformed(text):
    with pytest.raises(ParseError):
        parse(text)


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as info:
        parse("z+1")
    assert info.value.pos == 0


def test_exponent_must_be_constant():
    with pytest.raises(ParseError, match="constant"):
        parse("x^y")


@pytest.mark.parametrize(
    "text, point",
    [("log(x)", (0.0, 0.0)), ("1/x", (0.0, 0.3)), ("sqrt(x)", (-1.0, 0.0)),
     ("x^0.5", (-0.5, 0.0)), ("x^-1", (0.0, 0.0))],
)
def test_domain_errors(text, point):
    with pytest.raises(DomainError):
        evaluate(parse(text), *point)


def test_domain_error_names_point():
    with pytest.raises(DomainError, match="0.25"):
        evaluate(parse("1/(x-0.25)"), np.array([0.0, 0.25]), np.array([0.0, 0.0]))


def test_non_strict_returns_nan():
    v = evaluate(parse("log(x)"), np.array([1.0, -1.0]), np.zeros(2), strict=False)
    assert v[0] == 0.0 and math.isnan(v[1])


def test_negative_base_integer_power_is_fine():
    assert evaluate(parse("x^3"), -2.0, 0.0) == -8.0


# -- finite-difference oracle


def test_hemisphere_derivative_against_difference_quotient():
    tree = parse("2/(1+x^2+y^2)")
    for var in "xy":
        d = differentiate(tree, var)
        for x, y in [(0.3, -0.2), (0.0, 0.9), (-0.6, 0.1)]:
            assert evaluate(d, x, y) == pytest.approx(fd(tree, x, y, var), rel=1e-9)


def test_randomized_derivatives():
    assert derivative_probes() <= 1e-6


@st.composite
def sources(draw, depth=3):
    if depth == 0 or draw(st.integers(0, 4)) == 0:
        return draw(st.sampled_from(["x", "y", "0.5", "2", "1.25"]))
    a = draw(sources(depth=depth - 1))
    b = draw(sources(depth=depth - 1))
    form = draw(st.sampled_from(
        ["({a})+({b})", "({a})-({b})", "({a})*({b})", "({a})/(2+sin({b}))", "sin({a})",
         "cos({a})", "exp(cos({a}))", "sqrt(1+({a})^2)", "-{a}", "({a})^2", "log(3+cos({a}))"]
    ))
    return form.format(a=a, b=b)


@settings(max_examples=60, deadline=None)
@given(sources(), st.floats(-0.7, 0.7), st.floats(-0.7, 0.7))
def test_printed_tree_round_trips(text, x, y):
    tree = parse(text)
    again = parse(to_text(tree))
    assert evaluate(again, x, y) == pytest.approx(evaluate(tree, x, y), rel=1e-13, abs=1e-13)


@settings(max_examples=60, deadline=None)
@given(sources(), st.floats(-0.7, 0.7), st.floats(-0.7, 0.7), st.sampled_from("xy"))
def test_derivative_matches_difference_quotient(text, x, y, var):
    tree = parse(text)
    sym = evaluate(differentiate(tree, var), x, y)
    assert abs(sym - fd(tree, x, y, var)) <= 1e-6 * max(abs(sym), 1.0)


@settings(max_examples=40, deadline=None)
@given(sources(), sources(), st.floats(-0.7, 0.7), st.floats(-0.7, 0.7))
def test_derivative_is_linear(a, b, x, y):
    lhs = differentiate(parse(f"({a})+3*({b})"), "x")
    rhs = evaluate(differentiate(parse(a), "x"), x, y) + 3 * evaluate(
        differentiate(parse(b), "x"), x, y)
    assert evaluate(lhs, x, y) == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_str_is_parseable():
    tree = parse("-(x-1)^2/(y+2)")
    assert str(tree) == to_text(tree)
    assert evaluate(parse(str(tree)), 0.5, 0.5) == evaluate(tree, 0.5, 0.5)
