"""Empirical probes around the weighted-shift spectral picture.

Everything here measures; nothing here proves.  Each probe samples a
quantity the theory constrains (the q-step weight product, eigenvalue
level sets, normalized cocycle growth, scalar invariance of the orbit
direction, the obstruction from a weight's zero set, and the behaviour
of the determinant test for the unweighted-target family) and reports
what it saw together with the discretization tolerance of the claim.
The unit-determinant probe in particular is observational only: it
records evidence, and asserting the underlying conjecture is out of
scope on purpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cyclicity import (
    delta_at_zero_closed_form,
    delta_profile,
    delta_sample,
    periodic_weight_samples,
)
from .expr import BinOp, Const, Expr, Var, breakpoints, evaluate_many
from .numerics import GridSpec, MeasureEstimate, measure_estimate
from .operators import OperatorSpec, cocycle, iterate

__all__ = [
    "PeriodicWeightReport",
    "periodic_weight",
    "LevelsetReport",
    "eigen_levelset_probe",
    "rational_spectral_radius",
    "stirling_radius_estimate",
    "ConvexBoundReport",
    "convex_product_bound_check",
    "seeded_convex_samples",
    "normalized_cocycle_peak_interval",
    "InvarianceReport",
    "supercyclicity_invariance",
    "ObstructionReport",
    "orbit_obstruction",
    "UnitDeltaRow",
    "UnitDeltaReport",
    "unit_delta_conjecture_probe",
]


# ---------------------------------------------------------------------------
# the q-step weight product

@dataclass(frozen=True)
class PeriodicWeightReport:
    """w(t) = prod_{k<q} weight({t + k/q}), sampled over one period.

    w is 1/q-periodic; T^q f = w f for any angle r/q in lowest terms, so
    its range and monotonicity control the rational power norms.  The
    value at t = 0 is reported separately; the interior samples are
    midpoints and never touch it.
    """

    q: int
    ts: np.ndarray
    values: np.ndarray
    value_at_zero: float
    min_forward_difference: float
    sup_sampled: float


def periodic_weight(weight: Expr, q: int, samples: int = 4096) -> PeriodicWeightReport:
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if samples < 8:
        raise ValueError(f"need at least 8 samples, got {samples}")
    ts = (np.arange(samples, dtype=np.float64) + 0.5) / (samples * q)
    vals = periodic_weight_samples(weight, q, ts)
    if np.any(vals.imag != 0.0):
        raise ValueError("periodic weight probe needs a real weight")
    values = vals.real
    w0 = periodic_weight_samples(weight, q, np.array([0.0]))
    return PeriodicWeightReport(
        q=q,
        ts=ts,
        values=values,
        value_at_zero=float(w0.real[0]),
        min_forward_difference=float(np.diff(values).min()) if samples > 1 else 0.0,
        sup_sampled=float(values.max()),
    )


# ---------------------------------------------------------------------------
# eigenvalue level sets

@dataclass(frozen=True)
class LevelsetReport:
    """Measure of {|w - lambda^q| < tol} for a shrinking tolerance ladder.

    A point eigenvalue of modulus |lambda| would need w = lambda^q on a
    set of positive measure; measures scaling linearly with tol are the
    sampled signature of a null level set.
    """

    q: int
    seed: int
    lam: float
    lam_power_q: float
    tols: tuple[float, ...]
    measures: tuple[float, ...]
    coefficients: tuple[float, ...]  # measure / tol, ideally constant
    max_relative_spread: float
    linear_scaling_ok: bool  # spread within 20%


def eigen_levelset_probe(
    weight: Expr,
    q: int,
    seed: int = 0,
    samples: int = 2**17,
    ladder: int = 4,
) -> LevelsetReport:
    xs = GridSpec(samples).midpoints()
    vals = periodic_weight_samples(weight, q, xs)
    if np.any(vals.imag != 0.0):
        raise ValueError("level-set probe needs a real weight")
    w = vals.real
    rng = np.random.default_rng(seed)
    lo, hi = np.quantile(w, 0.2), np.quantile(w, 0.8)
    if not hi > lo:
        raise ValueError("weight product has no interior range to probe")
    target = float(rng.uniform(lo, hi))
    if target <= 0:
        raise ValueError("sampled level must be positive to take a q-th root")
    lam = target ** (1.0 / q)
    tol0 = float(w.max() - w.min()) / 64.0
    tols = tuple(tol0 / 2**i for i in range(ladder))
    measures = tuple(float(np.mean(np.abs(w - target) < t)) for t in tols)
    if min(measures) <= 0.0:
        raise ValueError(
            "empty level-set band at the smallest tolerance; raise `samples`"
        )
    coeffs = tuple(m / t for m, t in zip(measures, tols))
    mean_c = sum(coeffs) / len(coeffs)
    spread = max(abs(c - mean_c) for c in coeffs) / mean_c
    return LevelsetReport(
        q=q,
        seed=seed,
        lam=lam,
        lam_power_q=target,
        tols=tols,
        measures=measures,
        coefficients=coeffs,
        max_relative_spread=float(spread),
        linear_scaling_ok=bool(spread <= 0.2),
    )


# ---------------------------------------------------------------------------
# rational spectral radii

def rational_spectral_radius(q: int) -> float:
    """(q!/q^q)^(1/q) for the plain fractional-part weight at angle r/q,
    through log-gamma so large q neither overflows nor underflows."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    return math.exp((math.lgamma(q + 1) - q * math.log(q)) / q)


def stirling_radius_estimate(q: int) -> float:
    """Stirling's view of the same number: e^-1 (2 pi q)^(1/(2q))."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    return math.exp(-1.0) * (2.0 * math.pi * q) ** (1.0 / (2.0 * q))


# ---------------------------------------------------------------------------
# convex product lower bound

@dataclass(frozen=True)
class ConvexBoundReport:
    """Sampled check of: a convex increasing product vanishing at the
    left end of its interval spends at least a third of the interval
    outside the band |1 - f| <= 1/2, once it climbs past the band."""

    interval: tuple[float, float]
    n_samples: int
    spacing: float
    nondecreasing_ok: bool
    convex_ok: bool
    starts_below_band: bool
    exceeds_band: bool
    measure_outside: float
    lower_bound: float  # (b - a)/3 - 10 h
    holds: bool


def convex_product_bound_check(
    xs: np.ndarray, values: np.ndarray, slack: float = 1e-9
) -> ConvexBoundReport:
    xs = np.asarray(xs, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if xs.size != values.size or xs.size < 8:
        raise ValueError("need matching xs/values with at least 8 samples")
    h = float(xs[1] - xs[0])
    if h <= 0 or np.abs(np.diff(xs) - h).max() > 1e-9 * max(h, 1e-12):
        raise ValueError("xs must be an equally spaced increasing grid")
    d1 = np.diff(values)
    d2 = np.diff(d1)
    scale = max(float(np.abs(values).max()), 1.0)
    nondecreasing = bool(d1.min() >= -slack * scale)
    convex = bool(d2.min() >= -slack * scale)
    starts_below = bool(values[0] < 0.5)
    exceeds = bool(values.max() > 1.5)
    outside = np.abs(1.0 - values) > 0.5
    length = h * xs.size
    measure = float(outside.mean()) * length
    bound = length / 3.0 - 10.0 * h
    return ConvexBoundReport(
        interval=(float(xs[0] - h / 2), float(xs[-1] + h / 2)),
        n_samples=int(xs.size),
        spacing=h,
        nondecreasing_ok=nondecreasing,
        convex_ok=convex,
        starts_below_band=starts_below,
        exceeds_band=exceeds,
        measure_outside=measure,
        lower_bound=bound,
        holds=bool(measure >= bound),
    )


def seeded_convex_samples(
    seed: int, count: int, samples: int = 4096
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Random piecewise-linear convex increasing functions on [0, 1] with
    f(0) = 0 and f(1) rescaled past the band, sampled at midpoints."""
    rng = np.random.default_rng(seed)
    xs = GridSpec(samples).midpoints()
    out = []
    for _ in range(count):
        knots = np.sort(rng.uniform(0.0, 0.9, size=rng.integers(3, 12)))
        slopes = rng.uniform(0.2, 5.0, size=knots.size)
        vals = (slopes[None, :] * np.clip(xs[:, None] - knots[None, :], 0.0, None)).sum(
            axis=1
        )
        top = slopes @ (1.0 - knots)
        vals *= float(rng.uniform(2.0, 30.0)) / top
        out.append((xs.copy(), vals))
    return out


def normalized_cocycle_peak_interval(
    spec: OperatorSpec, n: int, grid: GridSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Samples of e^n |weight cocycle| restricted to the wrap-free
    subinterval carrying its maximum.

    Between consecutive points {-k alpha} the n-step product is a product
    of positive affine increasing factors: convex, increasing, vanishing
    at the interval's left end, which is exactly the shape the convex
    bound check wants.
    """
    coc = cocycle(spec, n, grid)
    xs = grid.midpoints()
    g = np.exp(coc.log_magnitude + n)
    peak = int(np.argmax(g))
    cuts = {0.0, 1.0}
    frac = spec.alpha.fraction
    for k in range(n):
        shifted = -k * frac
        cuts.add(float(shifted - Fraction(shifted.numerator // shifted.denominator)))
    edges = sorted(cuts)
    x_peak = xs[peak]
    left = max(e for e in edges if e <= x_peak)
    right = min(e for e in edges if e > x_peak)
    mask = (xs > left) & (xs < right)
    if mask.sum() < 8:
        raise ValueError(
            f"peak interval ({left:.6f}, {right:.6f}) holds fewer than 8 "
            f"samples; refine the grid"
        )
    return xs[mask], g[mask]


# ---------------------------------------------------------------------------
# scalar invariance of the orbit direction

@dataclass(frozen=True)
class InvarianceReport:
    """Fraction of grid points where the orbit direction of a f and of f
    disagree after n steps, a > 0.

    Directions are compared through the sign of (cocycle phase) x
    (shifted sample), never magnitudes, so the e^-n cocycle decay cannot
    underflow the comparison.
    """

    n: int
    scalar: float
    deviation: float
    tolerance: float
    ok: bool


def supercyclicity_invariance(
    spec: OperatorSpec, f: Expr, scalar: float, n: int, grid: GridSpec
) -> InvarianceReport:
    if scalar <= 0:
        raise ValueError(f"scalar must be positive, got {scalar}")
    scaled = BinOp("*", Const(complex(scalar)), f)
    it_f = iterate(spec, f, n, grid)
    it_s = iterate(spec, scaled, n, grid)
    for it in (it_f, it_s):
        if np.any(it.shifted_values.imag != 0.0) or np.any(
            it.cocycle.phase.imag != 0.0
        ):
            raise ValueError("direction comparison is defined for real data only")
    s_f = np.sign(it_f.cocycle.phase.real * it_f.shifted_values.real)
    s_s = np.sign(it_s.cocycle.phase.real * it_s.shifted_values.real)
    deviation = float(np.mean(s_f != s_s))
    tolerance = (len(breakpoints(f)) + 2) / grid.n
    return InvarianceReport(
        n=n,
        scalar=scalar,
        deviation=deviation,
        tolerance=tolerance,
        ok=bool(deviation <= tolerance),
    )


# ---------------------------------------------------------------------------
# zero-set obstruction

@dataclass(frozen=True)
class ObstructionReport:
    """No orbit element after step 0 can approach the indicator of the
    weight's zero set: every T^n f (n >= 1) vanishes there, so the p-th
    power distance is at least the set's measure."""

    n: int
    zero_set_measure: MeasureEstimate
    distance_power_p: float
    lower_bound: float
    holds: bool


def orbit_obstruction(
    spec: OperatorSpec, f: Expr, n: int, grid: GridSpec
) -> ObstructionReport:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    xs = grid.midpoints()
    wv = evaluate_many(spec.weight, xs)
    zero_mask = wv == 0.0
    m_hat = measure_estimate(zero_mask, len(breakpoints(spec.weight)))
    orbit_vals = iterate(spec, f, n, grid).values
    target = zero_mask.astype(np.float64)
    distance_p = float(np.mean(np.abs(orbit_vals - target) ** spec.p))
    bound = m_hat.value - m_hat.tolerance - 1e-12
    return ObstructionReport(
        n=n,
        zero_set_measure=m_hat,
        distance_power_p=distance_p,
        lower_bound=bound,
        holds=bool(distance_p >= bound),
    )


# ---------------------------------------------------------------------------
# determinant behaviour for the constant-one function

@dataclass(frozen=True)
class UnitDeltaRow:
    q: int
    r: int
    min_abs: float
    monotone_violations: int
    closed_form_rel_err: float


@dataclass(frozen=True)
class UnitDeltaReport:
    """Observed determinant behaviour with f = 1 and the plain
    fractional-part weight, over every angle r/q up to q_max.

    Records evidence: smallest sampled |D|, how far the real part is
    from monotone over the period, and the closed-form cross-check at
    t = 0.  Whether |D| can vanish for some angle stays an open
    question; this report never asserts it either way.
    """

    q_max: int
    samples: int
    rows: tuple[UnitDeltaRow, ...]
    all_positive: bool
    max_closed_form_err: float


def unit_delta_conjecture_probe(
    q_max: int = 12, samples: int = 512
) -> UnitDeltaReport:
    if q_max < 2:
        raise ValueError(f"q_max must be >= 2, got {q_max}")
    one = Const(1.0)
    w = Var()
    rows = []
    for q in range(2, q_max + 1):
        for r in range(1, q):
            if math.gcd(r, q) != 1:
                continue
            prof = delta_profile(one, w, r, q, samples=samples)
            signed = np.exp(prof.log_abs) * prof.phase.real
            d = np.diff(signed)
            violations = int(
                min((d < -1e-12).sum(), (d > 1e-12).sum())
            )
            closed = delta_at_zero_closed_form(one, w, r, q)
            log_lu, ph_lu = delta_sample(one, w, r, q, 0.0)
            lu_val = math.exp(log_lu) * ph_lu
            rel = abs(closed - lu_val) / max(abs(closed), 1e-300)
            rows.append(
                UnitDeltaRow(
                    q=q,
                    r=r,
                    min_abs=prof.min_abs,
                    monotone_violations=violations,
                    closed_form_rel_err=float(rel),
                )
            )
    return UnitDeltaReport(
        q_max=q_max,
        samples=samples,
        rows=tuple(rows),
        all_positive=all(row.min_abs > 0.0 for row in rows),
        max_closed_form_err=max(row.closed_form_rel_err for row in rows),
    )
