"""Expression language: parse/print round trips, evaluation, errors."""

import cmath
import math
import random

import numpy as np
import pytest

from bishoplab.expr import (
    BinOp,
    Call,
    Const,
    ExprDomainError,
    ExprSyntaxError,
    Indicator,
    Neg,
    Pow,
    Var,
    breakpoints,
    evaluate,
    evaluate_many,
    is_constant,
    parse,
    to_text,
)

SAMPLES = [
    "1",
    "x",
    "pi",
    "i",
    "x^2",
    "-x^2",
    "2*x - 1",
    "(x + 1) * x",
    "3/7",
    "exp(x) - 1",
    "sin(2*pi*x)",
    "cos(2*pi*x) - 0.3",
    "sqrt(x + 1/4)",
    "log(x + 1)",
    "frac(x + 3/4)",
    "indicator(0, 1/2)",
    "indicator(1/4, 1/2) + indicator(3/4, 1)",
    "x * indicator(1/2, 1)",
    "x^2 * (1 - x)^3",
    "1 - 2/(x + 2)",
]

XS = [0.0, 0.125, 0.25, 0.5, 0.749, 0.75, 1.0]


@pytest.mark.parametrize("text", SAMPLES)
def test_print_parse_fixpoint(text):
    # printing is idempotent after one round trip
    once = to_text(parse(text))
    twice = to_text(parse(once))
    assert once == twice


@pytest.mark.parametrize("text", SAMPLES)
def test_round_trip_evaluates_identically(text):
    e1 = parse(text)
    e2 = parse(to_text(e1))
    for x in XS:
        assert evaluate(e1, x) == evaluate(e2, x)


def test_known_values():
    assert evaluate(parse("x^2 + 1/4"), 0.5) == complex(0.5)
    assert evaluate(parse("3/7"), 0.0) == complex(3.0 / 7.0)
    assert evaluate(parse("2*x - 1"), 0.25) == complex(-0.5)
    assert evaluate(parse("i^2"), 0.3) == complex(-1.0)
    assert evaluate(parse("pi"), 0.0) == complex(math.pi)
    assert evaluate(parse("frac(x + 3/4)"), 0.5) == complex(0.25)
    assert evaluate(parse("-x^2"), 0.5) == complex(-0.25)  # binds as -(x^2)
    assert evaluate(parse("exp(x)"), 1.0) == cmath.exp(1.0)


def test_indicator_is_half_open():
    e = parse("indicator(1/4, 1/2)")
    assert evaluate(e, 0.25) == 1.0
    assert evaluate(e, 0.4999) == 1.0
    assert evaluate(e, 0.5) == 0.0
    assert evaluate(e, 0.0) == 0.0


def test_evaluate_many_matches_scalar():
    xs = np.linspace(0.0, 1.0, 41)
    for text in SAMPLES:
        e = parse(text)
        vec = evaluate_many(e, xs)
        scal = np.array([evaluate(e, float(x)) for x in xs])
        # libm and numpy may round transcendentals to different ulps
        np.testing.assert_allclose(vec, scal, rtol=1e-13, atol=1e-300)


def test_evaluate_many_exact_for_arithmetic():
    xs = np.linspace(0.0, 1.0, 17)
    for text in ["x^2", "2*x - 1", "x * indicator(1/2, 1)", "3/7", "-x^2"]:
        e = parse(text)
        vec = evaluate_many(e, xs)
        scal = np.array([evaluate(e, float(x)) for x in xs])
        assert (vec == scal).all()


@pytest.mark.parametrize(
    "text,offset,fragment",
    [
        ("x +", 3, "operand"),
        ("(x", 2, "')'"),
        ("", 0, "operand"),
        ("x x", 2, "unexpected"),
        ("x^y", 2, "integer exponent"),
        ("x^1.5", 2, "integer exponent"),
        ("foo(x)", 0, "unknown name"),
        ("indicator(x, 1)", 0, "must be constant"),
    ],
)
def test_syntax_errors_carry_offsets(text, offset, fragment):
    with pytest.raises(ExprSyntaxError) as exc:
        parse(text)
    assert exc.value.offset == offset
    assert fragment in exc.value.reason


def test_indicator_bounds_validated():
    with pytest.raises(ExprSyntaxError):
        parse("indicator(1/2, 1/4)")  # lo >= hi
    with pytest.raises(ExprSyntaxError):
        parse("indicator(-1, 1/2)")  # below [0, 1]


def test_domain_errors():
    with pytest.raises(ExprDomainError):
        evaluate(parse("1/x"), 0.0)
    with pytest.raises(ExprDomainError):
        evaluate(parse("log(x)"), 0.0)
    with pytest.raises(ExprDomainError):
        evaluate(parse("sqrt(x - 1/2)"), 0.0)


def test_evaluation_domain_is_unit_interval():
    with pytest.raises(ValueError):
        evaluate(parse("x"), 1.5)
    with pytest.raises(ValueError):
        evaluate_many(parse("x"), np.array([-0.25, 0.5]))


def test_breakpoints_and_is_constant():
    e = parse("indicator(1/4, 1/2) + indicator(3/4, 1)")
    assert breakpoints(e) == [0.25, 0.5, 0.75]  # endpoint 1.0 not interior
    assert breakpoints(parse("exp(x)")) == []
    assert is_constant(parse("2*pi - 1"))
    assert not is_constant(parse("x"))
    assert not is_constant(parse("indicator(0, 1/2)"))


def _random_expr(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice(
            [
                Const(complex(rng.randint(-3, 3))),
                Const(complex(round(rng.uniform(-2, 2), 3))),
                Var(),
                Indicator(0.25, 0.75),
            ]
        )
    kind = rng.randrange(4)
    if kind == 0:
        return Neg(_random_expr(rng, depth - 1))
    if kind == 1:
        op = rng.choice("+-*")
        return BinOp(op, _random_expr(rng, depth - 1), _random_expr(rng, depth - 1))
    if kind == 2:
        return Pow(_random_expr(rng, depth - 1), rng.randint(0, 3))
    return Call(rng.choice(["exp", "sin", "cos"]), _random_expr(rng, depth - 1))


def test_random_trees_round_trip():
    rng = random.Random(20260816)
    xs = np.linspace(0.0, 1.0, 13)
    for _ in range(200):
        e = _random_expr(rng, 4)
        text = to_text(e)
        back = parse(text)
        assert to_text(back) == text
        assert (evaluate_many(back, xs) == evaluate_many(e, xs)).all()
