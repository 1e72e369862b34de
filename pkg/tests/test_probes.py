"""Numerical experiment helpers: weight products, level sets, convexity,
direction invariance, the zero-set obstruction, and the open determinant
question for the constant function."""

import math
from fractions import Fraction

import numpy as np
import pytest

from bishoplab.expr import parse
from bishoplab.numerics import GridSpec, parse_alpha
from bishoplab.operators import OperatorSpec
from bishoplab.probes import (
    convex_product_bound_check,
    eigen_levelset_probe,
    normalized_cocycle_peak_interval,
    orbit_obstruction,
    periodic_weight,
    rational_spectral_radius,
    seeded_convex_samples,
    stirling_radius_estimate,
    supercyclicity_invariance,
    unit_delta_conjecture_probe,
)

W = parse("x")


def test_periodic_weight_product_of_fractional_parts():
    for q in range(2, 8):
        rep = periodic_weight(W, q, samples=4096)
        assert rep.value_at_zero == 0.0
        assert rep.min_forward_difference > 0.0  # strictly increasing period
        sup_exact = math.factorial(q) / q**q
        assert rep.sup_sampled < sup_exact
        assert rep.sup_sampled == pytest.approx(sup_exact, rel=5e-3)


def test_periodic_weight_input_checks():
    with pytest.raises(ValueError):
        periodic_weight(W, 0)
    with pytest.raises(ValueError):
        periodic_weight(W, 3, samples=4)


def test_rational_radius_matches_exact_fraction():
    for q in range(1, 51):
        exact = (Fraction(math.factorial(q), q**q)) ** 1  # exact rational
        got = rational_spectral_radius(q) ** q
        assert got == pytest.approx(float(exact), rel=1e-12)


def test_stirling_estimate_brackets_the_radius():
    # q! = sqrt(2 pi q) (q/e)^q e^theta with 0 < theta < 1/(12q), so the
    # ratio of the two radius formulas lives in [1, e^(1/(12 q^2))]
    for q in range(1, 41):
        ratio = rational_spectral_radius(q) / stirling_radius_estimate(q)
        assert 1.0 <= ratio <= math.exp(1.0 / (12.0 * q * q)) + 1e-15


def test_levelset_measure_scales_linearly():
    for q, seed in [(2, 0), (3, 1), (5, 2)]:
        rep = eigen_levelset_probe(W, q, seed=seed)
        assert rep.linear_scaling_ok
        assert rep.max_relative_spread <= 0.2
        assert rep.lam ** q == pytest.approx(rep.lam_power_q, rel=1e-12)
        # halving the tolerance roughly halves the measure
        assert all(a > b for a, b in zip(rep.measures, rep.measures[1:]))


def test_convex_bound_on_seeded_samples():
    for xs, vals in seeded_convex_samples(5, 20):
        rep = convex_product_bound_check(xs, vals)
        assert rep.nondecreasing_ok and rep.convex_ok
        assert rep.starts_below_band and rep.exceeds_band
        assert rep.holds
        assert rep.measure_outside >= rep.lower_bound


def test_convex_bound_on_golden_cocycle_peak():
    spec = OperatorSpec(alpha=parse_alpha("golden:40"))
    for n in (5, 13, 21):
        xs, g = normalized_cocycle_peak_interval(spec, n, GridSpec(2**17))
        rep = convex_product_bound_check(xs, g)
        assert rep.holds
        assert rep.measure_outside >= rep.lower_bound


def test_convex_bound_input_checks():
    xs = np.linspace(0.0, 1.0, 50)
    with pytest.raises(ValueError):
        convex_product_bound_check(xs, xs[:-1])
    with pytest.raises(ValueError):
        convex_product_bound_check(xs[:4], xs[:4])
    jittered = xs.copy()
    jittered[10] += 0.003
    with pytest.raises(ValueError):
        convex_product_bound_check(jittered, np.ones_like(jittered))


def test_scalar_invariance_of_orbit_direction():
    spec = OperatorSpec(alpha=parse_alpha("1/3"))
    grid = GridSpec(4096)
    for scalar in (0.5, 1.0, 7.0):
        rep = supercyclicity_invariance(spec, parse("x - 1/2"), scalar, 50, grid)
        assert rep.ok
        assert rep.deviation <= rep.tolerance
        assert rep.deviation == 0.0


def test_scalar_invariance_rejects_nonpositive_scalar():
    spec = OperatorSpec(alpha=parse_alpha("1/3"))
    with pytest.raises(ValueError):
        supercyclicity_invariance(spec, parse("x"), 0.0, 5, GridSpec(256))


def test_zero_set_obstruction():
    spec = OperatorSpec(
        alpha=parse_alpha("1/3"), weight=parse("x * indicator(1/2, 1)")
    )
    rep = orbit_obstruction(spec, parse("1 + x"), 3, GridSpec(4096))
    assert rep.holds
    assert rep.zero_set_measure.value == pytest.approx(0.5, abs=1e-3)
    assert rep.distance_power_p >= rep.lower_bound
    with pytest.raises(ValueError):
        orbit_obstruction(spec, parse("1"), 0, GridSpec(256))


def test_unit_determinant_probe_reports_without_asserting():
    rep = unit_delta_conjecture_probe(q_max=6, samples=256)
    # one row per coprime pair: phi(2..6) sums to 11
    assert len(rep.rows) == 11
    assert rep.max_closed_form_err <= 1e-9
    for row in rep.rows:
        assert math.gcd(row.r, row.q) == 1
        assert row.min_abs >= 0.0  # observed, not a claim about the limit
    assert rep.all_positive == all(r.min_abs > 0 for r in rep.rows)
    with pytest.raises(ValueError):
        unit_delta_conjecture_probe(q_max=1)
