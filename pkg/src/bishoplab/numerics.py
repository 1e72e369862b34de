"""Exact rotation arithmetic, sampling grids, norms, measure estimates.

Angles are exact rationals end to end.  A rotation step {x + n*alpha} is
reduced in big-rational arithmetic and rounded to double once at the end;
repeated floating additions would drift by O(n ulp), which is enough to
corrupt thousand-step weight products.  Decimal input keeps an explicit
uncertainty half-width so downstream continued-fraction expansion knows
exactly how far it can be trusted.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "AlphaValue",
    "GridSpec",
    "MeasureEstimate",
    "parse_alpha",
    "parse_real",
    "frac_shift",
    "lp_norm",
    "measure_estimate",
    "measure_positive_real",
    "precision_bits",
    "check_collision_free",
]

DEFAULT_PRECISION_BITS = 256


def precision_bits() -> int:
    """Working precision for decimal input, from BISHOP_PRECISION_BITS."""
    raw = os.environ.get("BISHOP_PRECISION_BITS", str(DEFAULT_PRECISION_BITS))
    try:
        bits = int(raw)
    except ValueError:
        raise ValueError(f"BISHOP_PRECISION_BITS must be an integer, got {raw!r}")
    if bits < 16:
        raise ValueError(f"BISHOP_PRECISION_BITS must be >= 16, got {bits}")
    return bits


def _cf_value(quotients: tuple[int, ...]) -> Fraction:
    # [a0; a1, ..., aL] evaluated exactly, back to front
    value = Fraction(quotients[-1])
    for a in reversed(quotients[:-1]):
        value = a + 1 / value
    return value


@dataclass(frozen=True)
class AlphaValue:
    """A rotation angle in [0, 1].

    kind "rational": exact fraction.
    kind "cf":       truncated continued fraction [0; a1, ..., aL]; the
                     exact value of the truncation is used everywhere.
    kind "decimal":  exact value of the literal plus an uncertainty
                     half-width (half an ulp of the last decimal digit,
                     floored at 2^-(precision_bits+1)).
    """

    kind: str
    fraction: Fraction
    quotients: tuple[int, ...] | None = None
    uncertainty: Fraction = field(default_factory=lambda: Fraction(0))

    def __post_init__(self):
        if self.kind not in ("rational", "cf", "decimal"):
            raise ValueError(f"bad AlphaValue kind {self.kind!r}")
        if not (0 <= self.fraction <= 1):
            raise ValueError(f"alpha must lie in [0, 1], got {self.fraction}")
        if self.kind == "cf":
            if not self.quotients or self.quotients[0] != 0:
                raise ValueError("CF quotients must start with a0 = 0")
            if any(a < 1 for a in self.quotients[1:]):
                raise ValueError("partial quotients a1, a2, ... must be >= 1")

    @classmethod
    def from_fraction(cls, fr: Fraction) -> "AlphaValue":
        return cls("rational", Fraction(fr))

    @classmethod
    def from_quotients(cls, quotients) -> "AlphaValue":
        qs = tuple(int(a) for a in quotients)
        return cls("cf", _cf_value(qs), quotients=qs)

    @property
    def numerator(self) -> int:
        return self.fraction.numerator

    @property
    def denominator(self) -> int:
        return self.fraction.denominator

    def as_float(self) -> float:
        return float(self.fraction)

    def describe(self) -> str:
        if self.kind == "cf":
            return "[" + ";".join(
                [str(self.quotients[0]), ",".join(str(a) for a in self.quotients[1:])]
            ) + "]"
        return f"{self.fraction.numerator}/{self.fraction.denominator}"


def parse_real(text: str) -> Fraction:
    """Exact value of a decimal or fraction literal ('0.25', '3/7')."""
    text = text.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse real literal {text!r}: {exc}")


def parse_alpha(text: str) -> AlphaValue:
    """Parses an angle: fraction 'p/q', decimal '0.618...', continued
    fraction '[0;1,1,1]' or 'cf:1,1,1', or the shorthand 'golden:<depth>'
    for the all-ones truncation."""
    text = text.strip()
    if text.startswith("golden:"):
        depth = int(text.split(":", 1)[1])
        if depth < 1:
            raise ValueError("golden:<depth> needs depth >= 1")
        return AlphaValue.from_quotients((0,) + (1,) * depth)
    if text.startswith("cf:"):
        quotients = (0,) + tuple(int(a) for a in text[3:].split(","))
        return AlphaValue.from_quotients(quotients)
    if text.startswith("[") and text.endswith("]"):
        body = text[1:-1]
        head, _, tail = body.partition(";")
        if int(head) != 0:
            raise ValueError("continued fractions must start [0; ...]")
        quotients = (0,) + tuple(int(a) for a in tail.split(",") if a.strip())
        return AlphaValue.from_quotients(quotients)
    if "/" in text:
        fr = parse_real(text)
        if not (0 <= fr <= 1):
            raise ValueError(f"alpha must lie in [0, 1], got {fr}")
        return AlphaValue.from_fraction(fr)
    # decimal literal: exact value plus uncertainty from its digit count
    fr = parse_real(text)
    if not (0 <= fr <= 1):
        raise ValueError(f"alpha must lie in [0, 1], got {fr}")
    digits = len(text.partition(".")[2])
    half_ulp = Fraction(1, 2 * 10**digits) if digits else Fraction(0)
    floor = Fraction(1, 2 ** (precision_bits() + 1))
    return AlphaValue("decimal", fr, uncertainty=max(half_ulp, floor))


def frac_shift(x, n: int, alpha: AlphaValue) -> float:
    """{x + n*alpha} computed exactly, rounded to double once.

    `x` may be a float (converted exactly) or a Fraction.  `n` is any
    integer; n = -1 is the adjoint's backward step.
    """
    fx = Fraction(x)
    shifted = fx + n * alpha.fraction
    return float(shifted - (shifted.numerator // shifted.denominator))


def frac_shift_exact(x: Fraction, n: int, alpha: AlphaValue) -> Fraction:
    shifted = x + n * alpha.fraction
    return shifted - (shifted.numerator // shifted.denominator)


@dataclass(frozen=True)
class GridSpec:
    """Uniform midpoint grid x_j = (j + 1/2)/N on [0, 1].

    Midpoints keep samples away from the wrap breakpoints {c - k*alpha}
    for generic alpha; for rational alpha with a small denominator the
    absence of collisions is checked exactly (see check_collision_free).
    """

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.n}")

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n, dtype=np.float64) + 0.5) / self.n

    def midpoint_exact(self, j: int) -> Fraction:
        return Fraction(2 * j + 1, 2 * self.n)

    def refined(self) -> "GridSpec":
        return GridSpec(2 * self.n)


def check_collision_free(grid: GridSpec, q: int) -> None:
    """Raises if some midpoint equals a multiple of 1/q exactly.

    Breakpoints of rotation-by-r/q weight products all sit on the lattice
    m/q; the midpoint (2j+1)/(2N) lands there iff 2*N*m/q is an odd
    integer for some m, which happens iff d = gcd(2N, q) >= 2 and 2N/d is
    odd.  Exact in big integers, O(log) for any q.
    """
    d = math.gcd(2 * grid.n, q)
    if d >= 2 and ((2 * grid.n) // d) % 2 == 1:
        raise ValueError(
            f"grid N={grid.n} collides with the 1/{q} breakpoint lattice; "
            f"choose a different N"
        )


def lp_norm(samples: np.ndarray, p: float) -> float:
    """L^p norm of grid samples with uniform midpoint weights 1/N."""
    if not p > 1.0:
        raise ValueError(f"p must satisfy 1 < p < inf, got {p}")
    if not math.isfinite(p):
        raise ValueError("p must be finite")
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ValueError("cannot take the norm of an empty sample array")
    if not np.all(np.isfinite(samples.real)) or (
        np.iscomplexobj(samples) and not np.all(np.isfinite(samples.imag))
    ):
        raise ValueError("non-finite sample in lp_norm")
    if p == 2.0:
        a2 = samples.real * samples.real
        if np.iscomplexobj(samples):
            a2 = a2 + samples.imag * samples.imag
        return float(np.sqrt(a2.mean()))
    return float((np.abs(samples) ** p).mean() ** (1.0 / p))


@dataclass(frozen=True)
class MeasureEstimate:
    """Grid estimate of the measure of a set, with a half-width tolerance
    of (breakpoints + 2)/N: each jump of the sampled set boundary can
    claim at most one grid cell, plus two cells of endpoint slack."""

    value: float
    tolerance: float
    count: int
    n: int

    def agrees_with(self, other: float) -> bool:
        return abs(self.value - other) <= self.tolerance


def measure_estimate(mask: np.ndarray, n_breakpoints: int = 0) -> MeasureEstimate:
    mask = np.asarray(mask, dtype=bool)
    n = mask.size
    count = int(mask.sum())
    return MeasureEstimate(
        value=count / n,
        tolerance=(n_breakpoints + 2) / n,
        count=count,
        n=n,
    )


def measure_positive_real(samples: np.ndarray, n_breakpoints: int = 0) -> MeasureEstimate:
    """Estimated measure of {x : Re f(x) > 0} from grid samples."""
    samples = np.asarray(samples)
    return measure_estimate(samples.real > 0.0, n_breakpoints)
