"""Continued fractions: exact recurrences, convergent quality, gaps."""

import random
from fractions import Fraction
from math import gcd, isqrt

import pytest

from bishoplab.diophantine import (
    ContinuedFraction,
    PrecisionExhausted,
    build_alpha_with_gaps,
    cf_expand,
    check_dirichlet,
    gap_indices,
    is_liouville_witness,
)
from bishoplab.numerics import AlphaValue, parse_alpha


def golden_decimal(digits: int = 90) -> str:
    # (sqrt(5) - 1)/2 via integer square root, exact to the last digit
    s = isqrt(5 * 10 ** (2 * digits))
    return "0." + str((s - 10**digits) // 2).rjust(digits, "0")


def test_rational_expansion_is_canonical():
    cf = cf_expand(parse_alpha("3/4"), 10)
    assert cf.quotients == (0, 1, 3)
    assert cf.depth == 2
    assert cf.value() == Fraction(3, 4)


def test_convergents_of_sqrt2_minus_1():
    cf = cf_expand(parse_alpha("cf:2,2,2,2"), 4)
    assert cf.ps == (0, 1, 2, 5, 12)
    assert cf.qs == (1, 2, 5, 12, 29)
    assert cf.convergent(3) == Fraction(5, 12)


def test_decimal_golden_ratio_expands_to_all_ones():
    cf = cf_expand(parse_alpha(golden_decimal()), 20)
    assert cf.quotients == (0,) + (1,) * 20
    # Fibonacci denominators
    assert cf.qs[:8] == (1, 1, 2, 3, 5, 8, 13, 21)


def test_decimal_runs_out_of_precision():
    with pytest.raises(PrecisionExhausted):
        cf_expand(parse_alpha("0.2642"), 12)


def test_cf_input_truncates_as_given():
    cf = cf_expand(parse_alpha("golden:10"), 5)
    assert cf.quotients == (0, 1, 1, 1, 1, 1)


def test_recurrence_identities_exact():
    rng = random.Random(11)
    for _ in range(50):
        den = rng.randrange(100, 10**9)
        num = rng.randrange(1, den)
        cf = cf_expand(AlphaValue.from_fraction(Fraction(num, den)), 30)
        for n in range(cf.depth + 1):
            p, q = cf.ps[n], cf.qs[n]
            assert gcd(p, q) == 1
            if n >= 1:
                # p_n q_{n-1} - p_{n-1} q_n alternates sign, magnitude 1
                det = p * cf.qs[n - 1] - cf.ps[n - 1] * q
                assert det == (-1) ** (n - 1)
                assert q >= cf.qs[n - 1]
        assert cf.value() == Fraction(num, den)


def test_dirichlet_self_check_flags_the_forced_equality():
    # measured against its own truncation the next-to-last level sits at
    # |p_L/q_L - p_{L-1}/q_{L-1}| = 1/(q_{L-1} q_L) exactly: not strict
    cf = cf_expand(parse_alpha("golden:10"), 10)
    assert check_dirichlet(cf) == [True] * 9 + [False, True]
    assert check_dirichlet(cf_expand(parse_alpha("3/4"), 10)) == [True, False, True]


def test_dirichlet_against_the_true_angle_holds_everywhere():
    alpha = parse_alpha(golden_decimal())
    cf = cf_expand(parse_alpha("golden:10"), 10)
    assert check_dirichlet(cf, alpha=alpha.fraction) == [True] * 11


def test_dirichlet_random_rationals_all_levels_hold():
    rng = random.Random(5)
    for _ in range(20):
        den = rng.getrandbits(80) + 7
        num = rng.randrange(1, den)
        fr = Fraction(num, den)
        cf = cf_expand(AlphaValue.from_fraction(fr), 25)
        assert all(check_dirichlet(cf, alpha=fr))


def test_liouville_witness_levels():
    cf = ContinuedFraction.from_quotients((0, 1, 1, 1, 1, 1))
    assert is_liouville_witness(cf, 2)  # q3 = 3 >= q2^1 = 2
    assert not is_liouville_witness(cf, 3)  # q4 = 5 < q3^2 = 9
    with pytest.raises(ValueError):
        is_liouville_witness(cf, 5)  # needs the next convergent
    with pytest.raises(ValueError):
        is_liouville_witness(cf, 0)


def test_gap_indices_match_direct_comparison():
    cf = ContinuedFraction.from_quotients((0, 2, 1, 46, 1))
    psi = lambda q: Fraction(q * q)
    cond = gap_indices(cf, psi)
    expected = tuple(
        n for n in range(cf.depth) if cf.qs[n + 1] > psi(cf.qs[n])
    )
    assert cond.indices == expected == (0, 2)
    assert not cond.holds_within_truncation  # last level carries no gap


def test_build_alpha_with_gaps_constant_psi():
    cf = build_alpha_with_gaps(lambda q: Fraction(1), levels=5)
    cond = gap_indices(cf, lambda q: Fraction(1))
    # every appended level must carry a verified gap, including the last
    assert set(range(1, cf.depth)) <= set(cond.indices)
    assert cond.holds_within_truncation


def test_build_alpha_with_gaps_exponential_psi():
    psi = lambda q: Fraction(2**q)
    cf = build_alpha_with_gaps(psi, levels=3)
    assert cf.qs == (1, 1, 4, 21, 2097169)
    for n in range(1, cf.depth):
        assert cf.qs[n + 1] > psi(cf.qs[n])


def test_build_alpha_with_gaps_big_integers():
    psi = lambda q: Fraction(2**q)
    cf = build_alpha_with_gaps(psi, levels=4)
    # the last denominator has ~600k digits; the gap is still checked exactly
    assert cf.qs[-1] > psi(cf.qs[-2])
    assert cf.qs[-1].bit_length() > 2_000_000


def test_quotient_validation():
    with pytest.raises(ValueError):
        ContinuedFraction.from_quotients((1, 2))
    with pytest.raises(ValueError):
        ContinuedFraction.from_quotients((0, 0, 2))
    with pytest.raises(ValueError):
        cf_expand(parse_alpha("1/2"), 0)
