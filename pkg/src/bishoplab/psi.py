"""From rational approximation certificates to irrational angles.

The bridge works in three moves:

  1. For every q in a requested list, build a bank of polynomials: one
     approximant per coprime numerator r and per target from a fixed
     family, each certified ||Q(T_{r/q}) f - g||_p < eps_q on its own
     verification grid.
  2. Measure, per q, a stability radius delta(q): the largest tested
     half-width h such that nudging the angle to r/q +- h moves every
     bank polynomial's output by less than eps_q.  The reported radius
     divides the largest passing h by a safety factor of 2 and keeps the
     whole search trace as a certificate.  psi(q) = 1/(q delta(q)) held
     exactly as a rational.
  3. Assemble an angle alpha whose continued fraction walks through the
     requested denominators and then takes one huge quotient, forcing
     the next denominator past psi(q); the convergent gap then pins
     |alpha - r/q| < delta(q) exactly, so the bank polynomial survives
     the passage to the irrational-style angle with residual < 2 eps_q.
     Every claimed inequality is re-checked here in exact rational
     arithmetic, and the final residuals are recomputed numerically on a
     doubled grid together with their triangle-inequality ledger.

delta(q) is an empirical, certified-by-testing radius, not a proven
modulus of continuity; the verification step never leans on it alone,
it recomputes the perturbed residuals outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cyclicity import (
    ApproxReport,
    PolynomialCoeffs,
    apply_polynomial,
    approx_polynomial,
)
from .diophantine import ContinuedFraction, cf_expand, gap_indices
from .expr import Expr, evaluate_many, parse, to_text
from .numerics import AlphaValue, GridSpec, check_collision_free, lp_norm
from .operators import OperatorSpec

__all__ = [
    "TargetFamily",
    "DEFAULT_TARGETS",
    "BankEntry",
    "PolynomialBank",
    "build_polynomial_bank",
    "DeltaEstimate",
    "estimate_delta",
    "PsiTable",
    "psi_value",
    "compute_psi_table",
    "TargetVerification",
    "VerificationReport",
    "verify_irrational_cyclicity",
]


@dataclass(frozen=True)
class TargetFamily:
    """Ordered approximation targets; level q covers the first min(q, m)."""

    members: tuple[Expr, ...]

    @classmethod
    def from_texts(cls, texts) -> "TargetFamily":
        return cls(tuple(parse(t) for t in texts))

    @property
    def texts(self) -> tuple[str, ...]:
        return tuple(to_text(m) for m in self.members)

    def __len__(self) -> int:
        return len(self.members)

    def covered(self, q: int) -> int:
        return min(q, len(self.members))


DEFAULT_TARGETS = TargetFamily.from_texts(
    ("1", "x", "x^2", "sin(2*pi*x)", "cos(2*pi*x)", "indicator(0, 1/2)")
)


@dataclass(frozen=True)
class BankEntry:
    q: int
    r: int
    target_index: int
    target_text: str
    polynomial: PolynomialCoeffs
    report: ApproxReport


@dataclass(frozen=True)
class PolynomialBank:
    f_text: str
    weight_text: str
    eps_q: float
    p: float
    grid_n: int
    entries: tuple[BankEntry, ...]

    @property
    def qs(self) -> tuple[int, ...]:
        return tuple(sorted({e.q for e in self.entries}))

    def at_q(self, q: int) -> tuple[BankEntry, ...]:
        return tuple(e for e in self.entries if e.q == q)

    def lookup(self, q: int, r: int, target_index: int) -> BankEntry:
        for e in self.entries:
            if e.q == q and e.r == r and e.target_index == target_index:
                return e
        raise KeyError(f"no bank entry for q={q}, r={r}, target={target_index}")


def build_polynomial_bank(
    f: Expr,
    weight: Expr,
    q_list,
    targets: TargetFamily = DEFAULT_TARGETS,
    eps_q: float = 0.1,
    p: float = 2.0,
    grid: GridSpec | None = None,
) -> PolynomialBank:
    """One certified approximant per (q, coprime r, covered target)."""
    if eps_q <= 0.0:
        raise ValueError(f"eps_q must be positive, got {eps_q}")
    grid = grid or GridSpec(2**12)
    qs = sorted(set(int(q) for q in q_list))
    if not qs or qs[0] < 2:
        raise ValueError(f"q_list needs entries >= 2, got {q_list!r}")
    entries = []
    for q in qs:
        for r in range(1, q):
            if math.gcd(r, q) != 1:
                continue
            for j in range(targets.covered(q)):
                report = approx_polynomial(
                    f, weight, r, q, targets.members[j], eps_q, p=p, grid=grid
                )
                if not report.achieved:
                    # numerical non-certification, not a bad request
                    raise ArithmeticError(
                        f"bank construction failed at q={q}, r={r}, "
                        f"target {targets.texts[j]!r}: verified residual "
                        f"{report.residual_verified:.3e} >= eps_q {eps_q}"
                    )
                entries.append(
                    BankEntry(
                        q=q,
                        r=r,
                        target_index=j,
                        target_text=targets.texts[j],
                        polynomial=report.polynomial,
                        report=report,
                    )
                )
    return PolynomialBank(
        f_text=to_text(f),
        weight_text=to_text(weight),
        eps_q=eps_q,
        p=p,
        grid_n=grid.n,
        entries=tuple(entries),
    )


# ---------------------------------------------------------------------------
# stability radius

def _usable_grid(n: int, denominators) -> GridSpec:
    """Smallest power-of-two multiple of n whose midpoints miss every
    1/q lattice involved; doubling strictly increases the 2-adic depth,
    so a few doublings always suffice for the denominators seen here."""
    for _ in range(16):
        grid = GridSpec(n)
        try:
            for q in denominators:
                check_collision_free(grid, q)
            return grid
        except ValueError:
            n *= 2
    raise ValueError("could not find a collision-free evaluation grid")


@dataclass(frozen=True)
class DeltaEstimate:
    q: int
    delta: Fraction  # safety-halved largest passing half-width
    best_h: Fraction  # the largest h that actually passed
    eps_q: float
    trace: tuple[tuple[Fraction, float, bool], ...]  # (h, worst move, passed)
    grid_n: int


def estimate_delta(
    f: Expr,
    weight: Expr,
    bank: PolynomialBank,
    q: int,
    grid: GridSpec | None = None,
    bisect_rounds: int = 10,
    shrink_floor: Fraction = Fraction(1, 3**20),
) -> DeltaEstimate:
    """Largest tested h with every bank polynomial at q moving < eps_q
    under angle nudges r/q +- h, then halved for safety.

    Search: shrink by 3 until some h passes, double while passing, then
    bisect the bracket.  Denominators stay 3-smooth-over-q times a few
    powers of 2, so the evaluation grids keep clear of lattice hits.
    """
    entries = bank.at_q(q)
    if not entries:
        raise ValueError(f"bank has no entries at q={q}")
    grid = grid or GridSpec(bank.grid_n)
    eps_q = bank.eps_q
    cap = Fraction(1, 2 * q)
    trace: list[tuple[Fraction, float, bool]] = []
    base_cache: dict[int, np.ndarray] = {}

    def worst_move(h: Fraction) -> float:
        worst = 0.0
        for e in entries:
            center = Fraction(e.r, q)
            alphas = [center + h, center - h]
            denoms = [q] + [a.denominator for a in alphas if 0 < a < 1]
            g_h = _usable_grid(grid.n, denoms)
            key = (e.r, e.target_index, g_h.n)
            base = base_cache.get(key)
            if base is None:
                spec0 = OperatorSpec(
                    alpha=AlphaValue.from_fraction(center), weight=weight, p=bank.p
                )
                base = apply_polynomial(spec0, f, e.polynomial, g_h)
                base_cache[key] = base
            for a in alphas:
                if not 0 < a < 1:
                    continue
                spec1 = OperatorSpec(
                    alpha=AlphaValue.from_fraction(a), weight=weight, p=bank.p
                )
                moved = apply_polynomial(spec1, f, e.polynomial, g_h)
                worst = max(worst, lp_norm(moved - base, bank.p))
        return worst

    def passes(h: Fraction) -> bool:
        move = worst_move(h)
        ok = move < eps_q
        trace.append((h, move, ok))
        return ok

    h = Fraction(1, 81 * q * q)
    while not passes(h):
        h /= 3
        if h < shrink_floor:
            raise ArithmeticError(
                f"no stability radius found at q={q}: even h={float(h):.2e} "
                f"moves some bank polynomial by >= eps_q={eps_q}"
            )
    lo = h
    hi = None
    while lo * 2 <= cap:
        if passes(lo * 2):
            lo *= 2
        else:
            hi = lo * 2
            break
    if hi is None and lo < cap:
        if passes(cap):
            lo = cap
        else:
            hi = cap
    if hi is not None:
        for _ in range(bisect_rounds):
            mid = (lo + hi) / 2
            if mid == lo or mid == hi:
                break
            if passes(mid):
                lo = mid
            else:
                hi = mid
    return DeltaEstimate(
        q=q,
        delta=lo / 2,
        best_h=lo,
        eps_q=eps_q,
        trace=tuple(trace),
        grid_n=grid.n,
    )


def psi_value(q: int, delta: Fraction) -> Fraction:
    """psi(q) = 1/(q delta(q)), exact."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return 1 / (Fraction(q) * delta)


@dataclass(frozen=True)
class PsiTable:
    eps_q: float
    qs: tuple[int, ...]
    deltas: tuple[Fraction, ...]
    psis: tuple[Fraction, ...]
    estimates: tuple[DeltaEstimate, ...]

    def delta(self, q: int) -> Fraction:
        return self.deltas[self.qs.index(q)]

    def psi(self, q: int) -> Fraction:
        return self.psis[self.qs.index(q)]

    def psi_or_zero(self, q: int) -> Fraction:
        """Callable for gap scans across levels the table does not cover;
        a zero threshold makes uncovered levels trivially gapped."""
        return self.psis[self.qs.index(q)] if q in self.qs else Fraction(0)


def compute_psi_table(
    f: Expr,
    weight: Expr,
    q_list,
    targets: TargetFamily = DEFAULT_TARGETS,
    eps_q: float = 0.1,
    p: float = 2.0,
    grid: GridSpec | None = None,
) -> tuple[PolynomialBank, PsiTable]:
    bank = build_polynomial_bank(
        f, weight, q_list, targets=targets, eps_q=eps_q, p=p, grid=grid
    )
    estimates = tuple(estimate_delta(f, weight, bank, q) for q in bank.qs)
    deltas = tuple(e.delta for e in estimates)
    psis = tuple(psi_value(q, d) for q, d in zip(bank.qs, deltas))
    return bank, PsiTable(
        eps_q=eps_q, qs=bank.qs, deltas=deltas, psis=psis, estimates=estimates
    )


# ---------------------------------------------------------------------------
# the verification step

def _chain_quotients(qs: list[int]) -> list[int]:
    """Quotients [0; a_1, ...] whose convergent denominators pass through
    every requested q in order; q_{n+1} = a q_n + q_{n-1} forces each a."""
    quotients = [0]
    q_prev, q_cur = 0, 1
    for target in qs:
        num = target - q_prev
        if num <= 0 or num % q_cur != 0:
            raise ValueError(
                f"denominator chain cannot pass through {qs}: step to {target} "
                f"needs ({target} - {q_prev}) divisible by {q_cur}"
            )
        quotients.append(num // q_cur)
        q_prev, q_cur = q_cur, target
    return quotients


@dataclass(frozen=True)
class TargetVerification:
    target_index: int
    target_text: str
    q: int
    r: int
    residual_rational: float  # ||Q(T_{r/q}) f - g||_p
    perturbation_residual: float  # ||Q(T_alpha) f - Q(T_{r/q}) f||_p
    residual_alpha: float  # ||Q(T_alpha) f - g||_p
    triangle_ok: bool
    passed: bool  # residual_alpha < 2 eps_q


@dataclass(frozen=True)
class VerificationReport:
    alpha: AlphaValue
    quotients: tuple[int, ...]
    level_index: int  # continued-fraction level whose convergent is used
    level_q: int
    level_r: int
    gap_ok: bool  # q_{n+1} > psi(q_n) at the used level
    proximity_ok: bool  # |alpha - r/q| < delta(q), exact
    dirichlet_ok: bool  # |alpha - r/q| < 1/(q q_next), exact
    gap_levels: tuple[int, ...]
    eps_q: float
    grid_n: int
    targets: tuple[TargetVerification, ...]

    @property
    def all_passed(self) -> bool:
        return (
            self.gap_ok
            and self.proximity_ok
            and all(t.passed and t.triangle_ok for t in self.targets)
        )


def verify_irrational_cyclicity(
    bank: PolynomialBank,
    table: PsiTable,
    f: Expr,
    weight: Expr,
    targets: TargetFamily = DEFAULT_TARGETS,
    n_targets: int | None = None,
    alpha_override: AlphaValue | None = None,
    grid: GridSpec | None = None,
) -> VerificationReport:
    """Builds (or accepts) an angle pinned next to the last banked q and
    re-proves the < 2 eps_q residuals for each requested target.

    With no override the angle's quotient chain passes through every
    banked q, takes the gap quotient floor(psi(q_K)/q_K) + 1 after the
    last one, and closes with a padding quotient so the convergent
    inequality is strict.  Every Diophantine claim is checked in exact
    rational arithmetic; residuals are recomputed on a doubled grid.
    """
    qs = list(table.qs)
    q_last = qs[-1]
    m = targets.covered(q_last)
    count = m if n_targets is None else n_targets
    if count > m:
        raise ValueError(
            f"{count} targets requested but level q={q_last} covers only {m}"
        )

    if alpha_override is None:
        quotients = _chain_quotients(qs)
        level_index = len(quotients) - 1  # q at this level == q_last
        a_gap = int(table.psi(q_last) // q_last) + 1
        quotients = quotients + [a_gap, 1]
        alpha = AlphaValue.from_quotients(tuple(quotients))
        cf = ContinuedFraction.from_quotients(tuple(quotients))
    else:
        alpha = alpha_override
        depth = 2
        cf = None
        while True:
            try:
                cf = cf_expand(alpha, depth)
            except ValueError:
                if cf is None:
                    raise
                break
            if cf.qs[-1] > q_last or cf.depth < depth:
                break
            depth += 2
        matches = [i for i, qd in enumerate(cf.qs) if qd == q_last and i >= 1]
        if not matches:
            raise ValueError(
                f"override angle has no convergent with denominator {q_last}; "
                f"denominators seen: {cf.qs[: cf.depth + 1]}"
            )
        level_index = matches[0]
        quotients = list(cf.quotients)

    r_last = cf.ps[level_index]
    if math.gcd(r_last, q_last) != 1 or not 0 < r_last < q_last:
        raise ValueError(
            f"convergent {r_last}/{q_last} is not a usable bank angle"
        )

    # exact Diophantine audit at the used level
    alpha_frac = alpha.fraction
    diff = abs(alpha_frac - Fraction(r_last, q_last))
    delta_q = table.delta(q_last)
    proximity_ok = diff < delta_q
    if level_index < cf.depth:
        q_next = cf.qs[level_index + 1]
        gap_ok = Fraction(q_next) > table.psi(q_last)
        dirichlet_ok = diff < Fraction(1, q_last * q_next)
    else:
        gap_ok = False
        dirichlet_ok = False
    gap_levels = tuple(gap_indices(cf, table.psi_or_zero).indices)

    # numerical re-verification on a doubled grid
    base_n = grid.n if grid is not None else 2 * bank.grid_n
    verify_grid = _usable_grid(
        base_n, [q_last, alpha_frac.denominator]
    )
    spec_rational = OperatorSpec(
        alpha=AlphaValue.from_fraction(Fraction(r_last, q_last)),
        weight=weight,
        p=bank.p,
    )
    spec_alpha = OperatorSpec(alpha=alpha, weight=weight, p=bank.p)
    xs = verify_grid.midpoints()
    rows = []
    for j in range(count):
        entry = bank.lookup(q_last, r_last, j)
        gv = evaluate_many(targets.members[j], xs)
        base = apply_polynomial(spec_rational, f, entry.polynomial, verify_grid)
        moved = apply_polynomial(spec_alpha, f, entry.polynomial, verify_grid)
        r1 = lp_norm(base - gv, bank.p)
        r2 = lp_norm(moved - base, bank.p)
        r3 = lp_norm(moved - gv, bank.p)
        rows.append(
            TargetVerification(
                target_index=j,
                target_text=entry.target_text,
                q=q_last,
                r=r_last,
                residual_rational=r1,
                perturbation_residual=r2,
                residual_alpha=r3,
                triangle_ok=r3 <= r1 + r2 + 1e-9,
                passed=r3 < 2.0 * bank.eps_q,
            )
        )
    return VerificationReport(
        alpha=alpha,
        quotients=tuple(quotients),
        level_index=level_index,
        level_q=q_last,
        level_r=r_last,
        gap_ok=gap_ok,
        proximity_ok=proximity_ok,
        dirichlet_ok=dirichlet_ok,
        gap_levels=gap_levels,
        eps_q=bank.eps_q,
        grid_n=verify_grid.n,
        targets=tuple(rows),
    )
