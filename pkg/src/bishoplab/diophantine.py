"""Continued fractions, convergents, and rotation-speed certificates.

Everything here is exact: quotients and convergents are Python big
integers, comparisons are big-rational, and no tolerance appears anywhere.
Decimal input is expanded by interval arithmetic on the exact rational
endpoints implied by its digit count, so a quotient is emitted only when
every real consistent with the literal shares it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .numerics import AlphaValue

__all__ = [
    "ContinuedFraction",
    "GapCondition",
    "PrecisionExhausted",
    "cf_expand",
    "check_dirichlet",
    "is_liouville_witness",
    "gap_indices",
    "build_alpha_with_gaps",
]


class PrecisionExhausted(ValueError):
    """A decimal literal ran out of trustworthy digits mid-expansion."""


@dataclass(frozen=True)
class ContinuedFraction:
    """[a0; a1, ..., aL] with all convergents p_n/q_n, n = 0..L.

    Seeds p_-1 = 1, q_-1 = 0, p_0 = a0, q_0 = 1; then
    p_n = a_n p_{n-1} + p_{n-2} and likewise for q_n.  Every convergent
    is automatically in lowest terms (consecutive convergents satisfy
    p_n q_{n-1} - p_{n-1} q_n = (-1)^{n-1}).
    """

    quotients: tuple[int, ...]
    ps: tuple[int, ...]
    qs: tuple[int, ...]

    @classmethod
    def from_quotients(cls, quotients: Sequence[int]) -> "ContinuedFraction":
        qs_in = tuple(int(a) for a in quotients)
        if not qs_in:
            raise ValueError("need at least a0")
        if qs_in[0] != 0:
            raise ValueError(f"a0 must be 0 for angles in (0, 1), got {qs_in[0]}")
        if any(a < 1 for a in qs_in[1:]):
            raise ValueError("partial quotients a1, a2, ... must be >= 1")
        p_prev, q_prev = 1, 0  # p_{-1}, q_{-1}
        p_cur, q_cur = qs_in[0], 1
        ps = [p_cur]
        qs = [q_cur]
        for a in qs_in[1:]:
            p_cur, p_prev = a * p_cur + p_prev, p_cur
            q_cur, q_prev = a * q_cur + q_prev, q_cur
            ps.append(p_cur)
            qs.append(q_cur)
        return cls(qs_in, tuple(ps), tuple(qs))

    @property
    def depth(self) -> int:
        return len(self.quotients) - 1

    def value(self) -> Fraction:
        return Fraction(self.ps[-1], self.qs[-1])

    def convergent(self, n: int) -> Fraction:
        return Fraction(self.ps[n], self.qs[n])

    def alpha_value(self) -> AlphaValue:
        return AlphaValue.from_quotients(self.quotients)


def cf_expand(alpha: AlphaValue, depth: int) -> ContinuedFraction:
    """Canonical (floor-based) expansion of an angle in (0, 1).

    Rational input terminates exactly or is cut at `depth` quotients.
    CF input is returned as given (truncated to `depth`); the stored
    quotients are a symbolic description, not re-canonicalized.  Decimal
    input is expanded only as far as its uncertainty interval pins every
    quotient down; running out raises PrecisionExhausted.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if not (0 < alpha.fraction < 1):
        raise ValueError(f"cf_expand needs 0 < alpha < 1, got {alpha.fraction}")

    if alpha.kind == "cf":
        cut = min(depth, len(alpha.quotients) - 1)
        return ContinuedFraction.from_quotients(alpha.quotients[: cut + 1])

    if alpha.kind == "rational" or alpha.uncertainty == 0:
        quotients = [0]
        x = alpha.fraction
        while x != 0 and len(quotients) <= depth:
            inv = 1 / x
            a = inv.numerator // inv.denominator
            # canonical form: a final quotient of 1 folds into its
            # predecessor automatically because the remainder hits 0 first
            quotients.append(a)
            x = inv - a
        return ContinuedFraction.from_quotients(quotients)

    # decimal with uncertainty: expand the interval [value-u, value+u]
    lo = alpha.fraction - alpha.uncertainty
    hi = alpha.fraction + alpha.uncertainty
    if lo <= 0 or hi >= 1:
        raise PrecisionExhausted("uncertainty interval leaves (0, 1) at level 1")
    quotients = [0]
    level = 0
    while len(quotients) <= depth:
        level += 1
        if lo <= 0:
            raise PrecisionExhausted(
                f"precision exhausted at level {level}: interval straddles "
                f"a terminating expansion"
            )
        inv_lo, inv_hi = 1 / hi, 1 / lo
        a_lo = inv_lo.numerator // inv_lo.denominator
        a_hi = inv_hi.numerator // inv_hi.denominator
        if a_lo != a_hi:
            raise PrecisionExhausted(
                f"precision exhausted at level {level}: quotient undecided "
                f"between {a_lo} and {a_hi} (need depth {depth})"
            )
        quotients.append(a_lo)
        lo, hi = inv_lo - a_lo, inv_hi - a_lo
    return ContinuedFraction.from_quotients(quotients)


def check_dirichlet(
    cf: ContinuedFraction, alpha: Fraction | None = None
) -> list[bool]:
    """Per-level exact check of |alpha - p_n/q_n| < 1/(q_n q_{n+1}).

    `alpha` is the exact value the expansion came from; it defaults to
    the value of the stored quotients.  At the final stored level, where
    no next denominator is stored, the true next one is recovered from
    alpha itself (the remainder's floor), so a truncated expansion of a
    longer angle still gets a real check there.  A convergent equal to
    alpha reports True outright; the one level *before* a terminating
    expansion sits at exact equality with the bound and honestly reports
    False.
    """
    value = cf.value() if alpha is None else Fraction(alpha)
    out = []
    last = cf.depth
    for n in range(last + 1):
        diff = abs(value - cf.convergent(n))
        if diff == 0:
            out.append(True)
            continue
        if n < last:
            q_next = cf.qs[n + 1]
        else:
            # alpha = (p_n xi + p_{n-1}) / (q_n xi + q_{n-1}) for the
            # exact remainder xi > 1; its floor is the next quotient
            p_n, q_n = cf.ps[n], cf.qs[n]
            p_prev = cf.ps[n - 1] if n >= 1 else 1
            q_prev = cf.qs[n - 1] if n >= 1 else 0
            denom = value * q_n - p_n
            if denom == 0:
                out.append(True)
                continue
            xi = (p_prev - value * q_prev) / denom
            if xi < 1:
                # stored quotients disagree with alpha's expansion
                out.append(False)
                continue
            a_next = xi.numerator // xi.denominator
            q_next = a_next * q_n + q_prev
        out.append(diff < Fraction(1, cf.qs[n] * q_next))
    return out


def is_liouville_witness(cf: ContinuedFraction, n: int) -> bool:
    """True when the expansion certifies |alpha - p_n/q_n| < 1/q_n^n.

    Uses the next convergent's bound: the distance to the convergent is
    strictly below 1/(q_n q_{n+1}) for any continuation of the expansion,
    so q_{n+1} >= q_n^{n-1} suffices.  Exact integer comparison; n = 1 is
    always a witness.
    """
    if not 1 <= n <= cf.depth - 1:
        raise ValueError(
            f"level n={n} out of range 1..{cf.depth - 1} (the next convergent "
            f"must exist)"
        )
    return cf.qs[n + 1] >= cf.qs[n] ** (n - 1)


@dataclass(frozen=True)
class GapCondition:
    """Verified set of levels n where q_{n+1} > psi(q_n), all exact."""

    indices: tuple[int, ...]
    depth: int

    @property
    def holds_within_truncation(self) -> bool:
        """Whether 'every n has a gap level n0 >= n' survives truncation,
        i.e. the last checkable level itself carries a gap."""
        return self.depth >= 1 and (self.depth - 1) in self.indices


def gap_indices(cf: ContinuedFraction, psi: Callable[[int], Fraction]) -> GapCondition:
    """Levels n with q_{n+1} > psi(q_n), compared in exact rationals."""
    hits = []
    for n in range(cf.depth):
        if Fraction(cf.qs[n + 1]) > Fraction(psi(cf.qs[n])):
            hits.append(n)
    return GapCondition(tuple(hits), cf.depth)


def build_alpha_with_gaps(
    psi: Callable[[int], Fraction],
    levels: int,
    base_quotients: Sequence[int] = (0, 1),
) -> ContinuedFraction:
    """Extends a continued fraction by `levels` quotients, each chosen as
    a_{n+1} = floor(psi(q_n)/q_n) + 1 so that q_{n+1} > psi(q_n).

    Every appended gap is re-verified exactly before returning.
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    cf = ContinuedFraction.from_quotients(base_quotients)
    quotients = list(cf.quotients)
    appended_at = []
    for _ in range(levels):
        q_cur = cf.qs[-1]
        psi_val = Fraction(psi(q_cur))
        if psi_val <= 0:
            raise ValueError(f"psi({q_cur}) = {psi_val} must be positive")
        a_next = math.floor(psi_val / q_cur) + 1
        appended_at.append(len(quotients) - 1)
        quotients.append(a_next)
        cf = ContinuedFraction.from_quotients(quotients)
    gaps = gap_indices(cf, psi)
    missing = [n for n in appended_at if n not in gaps.indices]
    if missing:
        raise AssertionError(f"gap construction failed at levels {missing}")
    return cf
