"""Weighted translation operators on L^p(0, 1).

The operator sends f to weight(x) * f({x + alpha}); the default weight x
is the classical case.  The n-th power has the closed form

    (T^n f)(x) = weight(x) weight({x+alpha}) ... weight({x+(n-1)alpha})
                 * f({x + n alpha}),

so iterates are evaluated as a running product over exactly rotated
grids, never by resampling the previous iterate.  The weight product is
carried as (log magnitude, unit phase): for the default weight it decays
like e^{-n}, which underflows doubles near n = 745, while its logarithm
stays perfectly representable.

Rotation angles are exact rationals (possibly with astronomically large
denominators coming from continued-fraction truncations).  Each shifted
grid {x_j + k alpha} is built from the exactly reduced offset {k alpha}
with the wrap decision x_j + {k alpha} >= 1 made in integer arithmetic,
so no drift accumulates in n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import Expr, Var, evaluate_many, parse, to_text
from .numerics import AlphaValue, GridSpec, check_collision_free

__all__ = [
    "OperatorSpec",
    "CocycleResult",
    "IterateResult",
    "RotationGrid",
    "apply_operator",
    "iterate",
    "iterate_all",
    "apply_adjoint",
    "cocycle",
    "power_norm",
    "power_norm_log",
    "spectral_radius_estimate",
]


@dataclass(frozen=True)
class OperatorSpec:
    """Weight expression, rotation angle, and the L^p exponent."""

    alpha: AlphaValue
    weight: Expr = field(default_factory=Var)
    p: float = 2.0

    def __post_init__(self):
        if not 1.0 < self.p < float("inf"):
            raise ValueError(f"p must satisfy 1 < p < inf, got {self.p}")

    @property
    def is_bishop(self) -> bool:
        return isinstance(self.weight, Var)

    def describe(self) -> dict:
        return {
            "weight": to_text(self.weight),
            "alpha": self.alpha.describe(),
            "p": self.p,
        }


def make_spec(alpha: AlphaValue, weight: str | Expr | None = None, p: float = 2.0) -> OperatorSpec:
    if weight is None:
        weight = Var()
    elif isinstance(weight, str):
        weight = parse(weight)
    return OperatorSpec(alpha=alpha, weight=weight, p=p)


class RotationGrid:
    """Midpoint grid together with its exact rotates {x_j + k alpha}.

    The offset {k alpha} = a_k / q is reduced with big-integer modular
    arithmetic; the wrap threshold j* (the first j with x_j + a_k/q >= 1)
    is the exact integer ceil((2N(q - a_k) - q) / (2q)).  The returned
    doubles then carry at most two roundings and zero n-dependence.
    """

    def __init__(self, grid: GridSpec, alpha: AlphaValue):
        self.grid = grid
        self.alpha = alpha
        self.x = grid.midpoints()
        self.p_num = alpha.fraction.numerator
        self.q_den = alpha.fraction.denominator
        check_collision_free(grid, self.q_den)

    def offset_numerator(self, k: int) -> int:
        return (k * self.p_num) % self.q_den

    def shifted(self, k: int) -> np.ndarray:
        """Doubles of {x_j + k alpha} for the whole grid."""
        a = self.offset_numerator(k)
        if a == 0:
            return self.x.copy()
        n, q = self.grid.n, self.q_den
        c = a / q  # correctly rounded big-int division
        num = 2 * n * (q - a) - q
        j_star = -((-num) // (2 * q))
        j_star = min(max(j_star, 0), n)
        y = self.x + c
        if j_star < n:
            y[j_star:] -= 1.0
        # the two roundings can stray a ulp past an endpoint; pin them
        np.clip(y, 0.0, 1.0, out=y)
        return y


@dataclass(frozen=True)
class CocycleResult:
    """Running weight product in (log magnitude, unit phase) form.

    values() reconstructs the linear product; it silently flushes to zero
    once log magnitudes pass below about -708, which is the very reason
    the split representation exists.
    """

    log_magnitude: np.ndarray
    phase: np.ndarray
    n: int

    def values(self) -> np.ndarray:
        return np.exp(self.log_magnitude) * self.phase


@dataclass(frozen=True)
class IterateResult:
    """T^n f on a grid: plain values plus the per-point cocycle."""

    values: np.ndarray
    cocycle: CocycleResult
    shifted_values: np.ndarray  # f({x + n alpha})
    n: int


def _accumulate_cocycle(
    rot: RotationGrid, weight: Expr, n: int
) -> CocycleResult:
    n_pts = rot.grid.n
    log_mag = np.zeros(n_pts, dtype=np.float64)
    phase = np.ones(n_pts, dtype=np.complex128)
    for k in range(n):
        w = evaluate_many(weight, rot.shifted(k))
        mag = np.abs(w)
        nonzero = mag > 0.0
        with np.errstate(divide="ignore"):
            log_mag += np.log(mag)
        phase *= np.where(nonzero, w / np.where(nonzero, mag, 1.0), 1.0)
    return CocycleResult(log_mag, phase, n)


def cocycle(spec: OperatorSpec, n: int, grid: GridSpec) -> CocycleResult:
    if n < 0:
        raise ValueError(f"cocycle length must be >= 0, got {n}")
    return _accumulate_cocycle(RotationGrid(grid, spec.alpha), spec.weight, n)


def iterate(spec: OperatorSpec, f: Expr, n: int, grid: GridSpec) -> IterateResult:
    """T^n f sampled on the grid via the closed-form weight product."""
    if n < 0:
        raise ValueError(f"iterate count must be >= 0, got {n}")
    rot = RotationGrid(grid, spec.alpha)
    coc = _accumulate_cocycle(rot, spec.weight, n)
    shifted = evaluate_many(f, rot.shifted(n))
    return IterateResult(coc.values() * shifted, coc, shifted, n)


def apply_operator(spec: OperatorSpec, f: Expr, grid: GridSpec) -> IterateResult:
    """Tf, literally iterate(.., n=1, ..): one code path, one behavior."""
    return iterate(spec, f, 1, grid)


def iterate_all(spec: OperatorSpec, f: Expr, k_max: int, grid: GridSpec) -> np.ndarray:
    """Matrix of iterates: row k holds T^k f, k = 0..k_max.

    One incremental pass over the cocycle, so the total cost is the same
    as a single length-k_max iterate.
    """
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    rot = RotationGrid(grid, spec.alpha)
    n_pts = grid.n
    out = np.empty((k_max + 1, n_pts), dtype=np.complex128)
    log_mag = np.zeros(n_pts, dtype=np.float64)
    phase = np.ones(n_pts, dtype=np.complex128)
    for k in range(k_max + 1):
        y = rot.shifted(k)
        out[k] = np.exp(log_mag) * phase * evaluate_many(f, y)
        if k < k_max:
            w = evaluate_many(spec.weight, y)
            mag = np.abs(w)
            nonzero = mag > 0.0
            with np.errstate(divide="ignore"):
                log_mag += np.log(mag)
            phase *= np.where(nonzero, w / np.where(nonzero, mag, 1.0), 1.0)
    return out


def apply_adjoint(spec: OperatorSpec, f: Expr, grid: GridSpec) -> np.ndarray:
    """(T* f)(x) = weight({x - alpha}) f({x - alpha}) on the grid.

    The weight rides at the pulled-back point.  No conjugate is taken:
    the formula matches the real-valued weights this laboratory studies
    (for those it is the honest L^2 adjoint; complex weights pass through
    the same formula unconjugated).
    """
    rot = RotationGrid(grid, spec.alpha)
    y = rot.shifted(-1)
    return evaluate_many(spec.weight, y) * evaluate_many(f, y)


def _require_nonnegative_weight(spec: OperatorSpec, grid: GridSpec) -> None:
    if spec.is_bishop:
        return
    w = evaluate_many(spec.weight, grid.midpoints())
    if np.any(w.imag != 0.0) or np.any(w.real < 0.0):
        raise ValueError(
            "power norms need the default weight or a nonnegative real weight"
        )


def power_norm_log(spec: OperatorSpec, n: int, grid: GridSpec) -> float:
    """log of the essential-sup estimate of the n-step weight product."""
    if n < 1:
        raise ValueError(f"power must be >= 1, got {n}")
    _require_nonnegative_weight(spec, grid)
    coc = cocycle(spec, n, grid)
    return float(np.max(coc.log_magnitude))

def power_norm(spec: OperatorSpec, n: int, grid: GridSpec) -> float:
    """Grid estimate of ||T^n||, the essential sup of the weight product.

    Returned on the linear scale; for long products use power_norm_log,
    which this wraps (the linear value underflows near n = 745 for the
    default weight).
    """
    return float(np.exp(power_norm_log(spec, n, grid)))


def spectral_radius_estimate(spec: OperatorSpec, n: int, grid: GridSpec) -> float:
    """power_norm(spec, n)^(1/n), computed in log space."""
    return float(np.exp(power_norm_log(spec, n, grid) / n))
