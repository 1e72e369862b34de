"""Approximant bank, stability radii, and the irrational-angle verifier."""

import dataclasses
from fractions import Fraction

import pytest

from bishoplab.expr import parse
from bishoplab.numerics import GridSpec
from bishoplab.psi import (
    TargetFamily,
    _chain_quotients,
    build_polynomial_bank,
    compute_psi_table,
    estimate_delta,
    psi_value,
    verify_irrational_cyclicity,
)

F = parse("1")
W = parse("x")


@pytest.fixture(scope="module")
def table23():
    return compute_psi_table(F, W, [2, 3], grid=GridSpec(2048))


def test_psi_value_is_exact_reciprocal():
    for q, delta in [(2, Fraction(1, 648)), (3, Fraction(5, 7291)), (7, Fraction(1, 10**40))]:
        psi = psi_value(q, delta)
        assert psi * q * delta == 1
    with pytest.raises(ValueError):
        psi_value(3, Fraction(0))
    with pytest.raises(ValueError):
        psi_value(3, Fraction(-1, 5))


def test_chain_quotients_through_denominators():
    assert _chain_quotients([2, 3]) == [0, 2, 1]
    assert _chain_quotients([3]) == [0, 3]
    # q_{n+1} = a q_n + q_{n-1} reproduces the chain
    qs = [2, 3, 5, 13]
    quots = _chain_quotients(qs)
    q_prev, q_cur = 0, 1
    built = []
    for a in quots[1:]:
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        built.append(q_cur)
    assert built == qs


def test_chain_quotients_rejects_impossible_steps():
    with pytest.raises(ValueError, match="divisible"):
        _chain_quotients([2, 4])
    with pytest.raises(ValueError):
        _chain_quotients([3, 2])


def test_bank_covers_every_coprime_residue_and_target(table23):
    bank, _ = table23
    # q=2: one residue, two covered targets; q=3: two residues, three targets
    assert bank.qs == (2, 3)
    assert len(bank.at_q(2)) == 2
    assert len(bank.at_q(3)) == 6
    seen = {(e.q, e.r, e.target_index) for e in bank.entries}
    assert seen == {
        (2, 1, 0), (2, 1, 1),
        (3, 1, 0), (3, 1, 1), (3, 1, 2),
        (3, 2, 0), (3, 2, 1), (3, 2, 2),
    }
    for e in bank.entries:
        assert e.report.achieved
        assert e.report.residual_verified < bank.eps_q
    with pytest.raises(KeyError):
        bank.lookup(3, 1, 5)


def test_target_family_coverage_rule():
    fam = TargetFamily.from_texts(("1", "x", "x^2"))
    assert fam.covered(2) == 2
    assert fam.covered(3) == 3
    assert fam.covered(10) == 3
    assert len(fam) == 3
    assert fam.texts[2] == "x^2"


def test_delta_estimate_internals(table23):
    bank, table = table23
    for q, est in zip(table.qs, table.estimates):
        assert est.q == q
        assert est.delta == est.best_h / 2  # exact halving, Fraction arithmetic
        assert est.best_h <= Fraction(1, 2 * q)
        passing = [h for h, _, ok in est.trace if ok]
        assert est.best_h == max(passing)
        for h, move, ok in est.trace:
            assert ok == (move < est.eps_q)


def test_psi_table_is_exact(table23):
    _, table = table23
    assert table.qs == (2, 3)
    for q in table.qs:
        assert table.psi(q) * q * table.delta(q) == 1
        assert table.psi(q) > 0
    assert table.psi_or_zero(5) == 0
    assert table.psi_or_zero(3) == table.psi(3)


def test_verifier_constructs_and_certifies_an_angle(table23):
    bank, table = table23
    report = verify_irrational_cyclicity(bank, table, F, W, n_targets=3)
    assert report.all_passed
    assert report.gap_ok and report.proximity_ok and report.dirichlet_ok
    assert report.level_q == 3
    assert report.quotients[:3] == (0, 2, 1)
    assert report.level_index in report.gap_levels
    # the constructed gap quotient is the smallest making q_next > psi(q)
    a_gap = report.quotients[report.level_index + 1]
    assert a_gap == table.psi(3) // 3 + 1
    q_next = a_gap * 3 + 2  # next denominator under the recurrence
    assert Fraction(q_next) > table.psi(3)
    for t in report.targets:
        assert t.passed and t.triangle_ok
        assert t.residual_alpha < 2 * bank.eps_q
        assert t.residual_alpha <= t.residual_rational + t.perturbation_residual + 1e-9


def test_verifier_accepts_an_override_angle(table23):
    bank, table = table23
    first = verify_irrational_cyclicity(bank, table, F, W, n_targets=1)
    again = verify_irrational_cyclicity(
        bank, table, F, W, n_targets=1, alpha_override=first.alpha
    )
    assert again.level_q == 3
    assert again.alpha.fraction == first.alpha.fraction
    assert all(t.passed for t in again.targets)


def test_verifier_rejects_too_many_targets(table23):
    bank, table = table23
    with pytest.raises(ValueError, match="covers only"):
        verify_irrational_cyclicity(bank, table, F, W, n_targets=4)


def test_bank_raises_on_unreachable_tolerance():
    # a jump target cannot be matched to 1e-12 by the capped smooth fit
    fam = TargetFamily.from_texts(("indicator(0, 1/2)",))
    with pytest.raises(ArithmeticError, match="residual"):
        build_polynomial_bank(
            F, W, [2], targets=fam, eps_q=1e-12, grid=GridSpec(1024)
        )


def test_estimate_delta_raises_when_no_radius_exists():
    # sin target forces degree >= 2 terms, so Q(T) f really moves with the
    # angle; a starved tolerance then rejects every tested half-width
    fam = TargetFamily.from_texts(("sin(2*pi*x)",))
    bank = build_polynomial_bank(F, W, [2], targets=fam, eps_q=0.1, grid=GridSpec(1024))
    starved = dataclasses.replace(bank, eps_q=1e-13)
    with pytest.raises(ArithmeticError, match="no stability radius"):
        estimate_delta(F, W, starved, 2, shrink_floor=Fraction(1, 3**8))


def test_estimate_delta_needs_entries_at_q():
    fam = TargetFamily.from_texts(("1",))
    bank = build_polynomial_bank(F, W, [2], targets=fam, eps_q=0.1, grid=GridSpec(1024))
    with pytest.raises(ValueError, match="no entries"):
        estimate_delta(F, W, bank, 5)
