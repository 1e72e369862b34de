"""Angles, exact rotation steps, grids, norms, measure estimates."""

import math
import random
from fractions import Fraction

import numpy as np
import pytest

from bishoplab.numerics import (
    AlphaValue,
    GridSpec,
    check_collision_free,
    frac_shift,
    frac_shift_exact,
    lp_norm,
    measure_estimate,
    measure_positive_real,
    parse_alpha,
    parse_real,
    precision_bits,
)


def test_parse_alpha_forms():
    assert parse_alpha("2/5").fraction == Fraction(2, 5)
    assert parse_alpha("0.25").fraction == Fraction(1, 4)
    assert parse_alpha("cf:1,3").fraction == Fraction(3, 4)  # [0;1,3]
    assert parse_alpha("[0; 1, 3]").fraction == Fraction(3, 4)
    assert parse_alpha("golden:3").fraction == Fraction(2, 3)  # [0;1,1,1]
    assert parse_alpha("golden:3").quotients == (0, 1, 1, 1)


def test_parse_alpha_rejects_out_of_range():
    with pytest.raises(ValueError):
        parse_alpha("7/5")
    with pytest.raises(ValueError):
        parse_alpha("-0.2")
    with pytest.raises(ValueError):
        parse_alpha("cf:0,3")  # zero partial quotient
    with pytest.raises(ValueError):
        parse_alpha("[1;2]")


def test_decimal_alpha_carries_uncertainty():
    a = parse_alpha("0.2642")
    assert a.kind == "decimal"
    assert a.fraction == Fraction(2642, 10000)
    assert a.uncertainty == Fraction(1, 20000)  # half an ulp of the literal
    assert parse_alpha("1/3").uncertainty == 0


def test_parse_real_accepts_fractions_and_decimals():
    assert parse_real("355/113") == Fraction(355, 113)
    assert parse_real("-1.5") == Fraction(-3, 2)
    with pytest.raises(ValueError):
        parse_real("one half")


def test_frac_shift_matches_exact_fraction_arithmetic():
    rng = random.Random(7)
    for _ in range(500):
        x = Fraction(rng.randrange(0, 997), 997)
        alpha = AlphaValue.from_fraction(Fraction(rng.randrange(0, 64), 64))
        n = rng.randint(-6, 6)
        exact = x + n * alpha.fraction
        exact -= exact.numerator // exact.denominator
        assert frac_shift_exact(x, n, alpha) == exact
        assert frac_shift(x, n, alpha) == float(exact)
        assert 0.0 <= frac_shift(x, n, alpha) < 1.0


def test_frac_shift_backward_inverts_forward():
    alpha = parse_alpha("golden:12")
    x = Fraction(1, 3)
    there = frac_shift_exact(x, 1, alpha)
    assert frac_shift_exact(there, -1, alpha) == x


def test_gridspec_midpoints():
    g = GridSpec(4)
    assert np.array_equal(g.midpoints(), np.array([1, 3, 5, 7]) / 8.0)
    assert g.midpoint_exact(2) == Fraction(5, 8)
    assert g.refined().n == 8
    with pytest.raises(ValueError):
        GridSpec(1)


def test_collision_rule_matches_brute_force():
    # oracle: scan every multiple of 1/q for equality with some midpoint
    for n in range(2, 48):
        g = GridSpec(n)
        for q in range(2, 60):
            hits = any(
                Fraction(m, q) == Fraction(2 * j + 1, 2 * n)
                for m in range(q)
                for j in range(n)
            )
            if hits:
                with pytest.raises(ValueError):
                    check_collision_free(g, q)
            else:
                check_collision_free(g, q)


def test_lp_norm_basics():
    ones = np.ones(100)
    assert lp_norm(ones, 2.0) == pytest.approx(1.0, rel=1e-15)
    vals = np.linspace(0, 1, 1000)
    assert lp_norm(3.0 * vals, 2.0) == pytest.approx(3.0 * lp_norm(vals, 2.0))
    # complex samples go through the modulus
    assert lp_norm(1j * ones, 4.0) == pytest.approx(1.0, rel=1e-15)


def test_lp_norm_monotone_in_p_on_probability_grid():
    rng = np.random.default_rng(3)
    vals = rng.uniform(0.0, 2.0, size=512)
    ps = [1.5, 2.0, 3.0, 6.0]
    norms = [lp_norm(vals, p) for p in ps]
    assert all(a <= b + 1e-12 for a, b in zip(norms, norms[1:]))


def test_lp_norm_rejects_bad_p_and_empty():
    with pytest.raises(ValueError):
        lp_norm(np.ones(4), 1.0)
    with pytest.raises(ValueError):
        lp_norm(np.ones(4), math.inf)
    with pytest.raises(ValueError):
        lp_norm(np.array([]), 2.0)


def test_measure_estimate_counts_and_tolerance():
    mask = np.array([True, True, False, False, False, False, False, False])
    m = measure_estimate(mask, n_breakpoints=3)
    assert m.value == 0.25
    assert m.count == 2
    assert m.tolerance == (3 + 2) / 8


def test_measure_positive_real_on_known_function():
    xs = GridSpec(10000).midpoints()
    m = measure_positive_real(xs - 0.75, n_breakpoints=1)
    assert abs(m.value - 0.25) <= m.tolerance


def test_precision_bits_env_override(monkeypatch):
    monkeypatch.setenv("BISHOP_PRECISION_BITS", "128")
    assert precision_bits() == 128
    monkeypatch.setenv("BISHOP_PRECISION_BITS", "8")
    with pytest.raises(ValueError):
        precision_bits()
    monkeypatch.delenv("BISHOP_PRECISION_BITS")
    assert precision_bits() == 256
