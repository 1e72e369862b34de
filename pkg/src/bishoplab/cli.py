"""bishop: command-line front end.

Every run prints one JSON envelope to stdout:

    {"schema_version": 1, "manifest": {...}, "results": {...},
     "diagnostics": {...}}

The manifest records the exact argv, every parameter, grid size,
precision bits, seed, and artifact version: enough for `bishop replay
<file.json>` to regenerate every result file byte for byte.  Wall-clock
duration goes to stderr only; the file field stays null so replays
compare clean.

Sample arrays go to --csv as (x, value) or (x, re, im) with a header
row; figures go to --plot as PNG (matplotlib is imported only then).
Exit codes: 0 success, 1 bad input or failed precondition, 2 numerical
failure (precision exhausted, singular system, no certifiable radius).
Anywhere a real number is accepted, a fraction like 3/7 works too.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cyclicity import (
    approx_polynomial,
    cyclicity_test,
    decompose_target,
    delta_at_zero_closed_form,
    delta_profile,
    orbit_span_residual,
)
from .diophantine import (
    PrecisionExhausted,
    build_alpha_with_gaps,
    cf_expand,
    check_dirichlet,
    gap_indices,
)
from .expr import (
    Expr,
    ExprDomainError,
    ExprSyntaxError,
    Var,
    evaluate,
    evaluate_many,
    parse,
    to_text,
)
from .numerics import AlphaValue, GridSpec, lp_norm, parse_alpha, parse_real, precision_bits
from .operators import (
    OperatorSpec,
    apply_adjoint,
    iterate,
    power_norm,
    power_norm_log,
    spectral_radius_estimate,
)
from .probes import (
    convex_product_bound_check,
    eigen_levelset_probe,
    normalized_cocycle_peak_interval,
    orbit_obstruction,
    periodic_weight,
    rational_spectral_radius,
    seeded_convex_samples,
    supercyclicity_invariance,
    unit_delta_conjecture_probe,
)
from .psi import (
    DEFAULT_TARGETS,
    compute_psi_table,
    estimate_delta,
    build_polynomial_bank,
    psi_value,
    verify_irrational_cyclicity,
)

SCHEMA_VERSION = 1
MAX_RATIONAL_DENOMINATOR = 10**6


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; we reserve that
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# serialization helpers

def _jsonable(obj):
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"im": obj.imag, "re": obj.real}
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return str(obj)


def _complex_pair(z: complex) -> dict:
    z = complex(z)
    return {"im": z.imag, "re": z.real}


def _log10_int(n: int) -> float:
    if n <= 0:
        raise ValueError("log10 of a nonpositive integer")
    if n.bit_length() <= 900:
        return math.log10(n)
    shift = n.bit_length() - 53
    return math.log10(n >> shift) + shift * math.log10(2.0)


def _log10_fraction(fr: Fraction) -> float | None:
    if fr == 0:
        return None
    fr = abs(fr)
    return _log10_int(fr.numerator) - _log10_int(fr.denominator)


# ---------------------------------------------------------------------------
# argument coercion

def _expr_arg(text: str, what: str) -> Expr:
    try:
        return parse(text)
    except ExprSyntaxError as e:
        raise _UsageError(f"bad {what} expression {text!r}: {e}") from e


def _weight_arg(text: str | None) -> Expr:
    return Var() if text is None else _expr_arg(text, "weight")


def _alpha_arg(text: str) -> AlphaValue:
    try:
        return parse_alpha(text)
    except (ValueError, PrecisionExhausted) as e:
        raise _UsageError(f"bad angle {text!r}: {e}") from e


def _real_arg(text: str, what: str) -> float:
    try:
        return float(parse_real(text))
    except ValueError as e:
        raise _UsageError(f"bad {what} {text!r}: {e}") from e


def _rational_angle(alpha: AlphaValue) -> tuple[int, int]:
    fr = alpha.fraction
    if fr.denominator > MAX_RATIONAL_DENOMINATOR:
        raise _UsageError(
            f"this command needs a small-denominator rational angle; got "
            f"denominator {fr.denominator}"
        )
    if fr.denominator < 2 or fr.numerator < 1:
        raise _UsageError(
            f"this command needs an angle r/q with 0 < r < q, q >= 2; got {fr}"
        )
    return fr.numerator, fr.denominator


def _int_list(text: str, what: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as e:
        raise _UsageError(f"bad {what} {text!r}: comma-separated integers") from e


def _psi_arg(text: str):
    """Tiny growth-function language: '17', 'q', 'q^2', '2^q'."""
    text = text.strip()
    if text == "q":
        return lambda q: Fraction(q)
    if text.isdigit():
        c = int(text)
        return lambda q: Fraction(c)
    if "^" in text:
        left, _, right = text.partition("^")
        left, right = left.strip(), right.strip()
        if left == "q" and right.isdigit():
            e = int(right)
            return lambda q: Fraction(q**e)
        if left.isdigit() and right == "q":
            b = int(left)
            return lambda q: Fraction(b**q)
    raise _UsageError(
        f"bad growth function {text!r}: use an integer, 'q', 'q^<int>', "
        f"or '<int>^q'"
    )


# ---------------------------------------------------------------------------
# output plumbing

@dataclass
class CommandOutput:
    results: dict
    diagnostics: dict = field(default_factory=dict)
    grid_n: int | None = None
    csv_frames: list = field(default_factory=list)  # (suffix, header, rows)
    plot: object = None  # callable(path) -> None


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _complex_frame(xs: np.ndarray, values: np.ndarray):
    if np.any(values.imag != 0.0):
        header = ["x", "re", "im"]
        rows = [
            [float(x), float(v.real), float(v.imag)] for x, v in zip(xs, values)
        ]
    else:
        header = ["x", "value"]
        rows = [[float(x), float(v.real)] for x, v in zip(xs, values)]
    return header, rows


# ---------------------------------------------------------------------------
# handlers: operator actions

def _cmd_apply(args) -> CommandOutput:
    spec = OperatorSpec(
        alpha=_alpha_arg(args.alpha), weight=_weight_arg(args.weight), p=args.p
    )
    f = _expr_arg(args.f, "function")
    grid = GridSpec(args.grid)
    result = iterate(spec, f, 1, grid)
    values = result.values
    xs = grid.midpoints()
    header, rows = _complex_frame(xs, values)
    return CommandOutput(
        results={
            "lp_norm": lp_norm(values, args.p),
            "max_abs": float(np.abs(values).max()),
            "n": 1,
        },
        diagnostics={"angle": spec.alpha.describe()},
        grid_n=args.grid,
        csv_frames=[("", header, rows)],
        plot=lambda path: _plots().line_plot(
            path, xs, [("|Tf|", np.abs(values))], "one application", "x", "|Tf|"
        ),
    )


def _cmd_iterate(args) -> CommandOutput:
    spec = OperatorSpec(
        alpha=_alpha_arg(args.alpha), weight=_weight_arg(args.weight), p=args.p
    )
    f = _expr_arg(args.f, "function")
    grid = GridSpec(args.grid)
    result = iterate(spec, f, args.n, grid)
    values = result.values
    xs = grid.midpoints()
    header, rows = _complex_frame(xs, values)
    log_mag = result.cocycle.log_magnitude
    return CommandOutput(
        results={
            "lp_norm": lp_norm(values, args.p),
            "max_abs": float(np.abs(values).max()),
            "max_log_cocycle": float(log_mag.max()) if args.n else 0.0,
            "min_log_cocycle": float(log_mag.min()) if args.n else 0.0,
            "n": args.n,
            "underflow_fraction": float(np.mean(log_mag < -700.0)),
        },
        diagnostics={"angle": spec.alpha.describe()},
        grid_n=args.grid,
        csv_frames=[("", header, rows)],
        plot=lambda path: _plots().line_plot(
            path,
            xs,
            [(f"|T^{args.n} f|", np.abs(values))],
            f"iterate n={args.n}",
            "x",
            "magnitude",
        ),
    )


def _cmd_adjoint(args) -> CommandOutput:
    spec = OperatorSpec(
        alpha=_alpha_arg(args.alpha), weight=_weight_arg(args.weight), p=args.p
    )
    f = _expr_arg(args.f, "function")
    grid = GridSpec(args.grid)
    values = apply_adjoint(spec, f, grid)
    xs = grid.midpoints()
    header, rows = _complex_frame(xs, values)
    return CommandOutput(
        results={
            "lp_norm": lp_norm(values, args.p),
            "max_abs": float(np.abs(values).max()),
        },
        diagnostics={"angle": spec.alpha.describe()},
        grid_n=args.grid,
        csv_frames=[("", header, rows)],
        plot=lambda path: _plots().line_plot(
            path, xs, [("|T* f|", np.abs(values))], "adjoint", "x", "|T* f|"
        ),
    )


def _cmd_norm(args) -> CommandOutput:
    spec = OperatorSpec(
        alpha=_alpha_arg(args.alpha), weight=_weight_arg(args.weight), p=args.p
    )
    grid = GridSpec(args.grid)
    log_norm = power_norm_log(spec, args.n, grid)
    return CommandOutput(
        results={
            "log_power_norm": log_norm,
            "n": args.n,
            "power_norm": power_norm(spec, args.n, grid),
            "spectral_radius_estimate": math.exp(log_norm / args.n)
            if args.n
            else 1.0,
        },
        diagnostics={"angle": spec.alpha.describe()},
        grid_n=args.grid,
    )


def _cmd_spectrum(args) -> CommandOutput:
    alpha = _alpha_arg(args.alpha)
    spec = OperatorSpec(alpha=alpha, weight=_weight_arg(args.weight), p=args.p)
    grid = GridSpec(args.grid)
    fr = alpha.fraction
    results = {}
    if fr.denominator <= MAX_RATIONAL_DENOMINATOR and fr.denominator >= 1:
        q = fr.denominator
        if q >= 2:
            rep = periodic_weight(spec.weight, q, samples=min(args.grid, 65536))
            results["rational_q"] = q
            results["radius_from_weight_product"] = float(
                rep.sup_sampled ** (1.0 / q)
            )
            if spec.is_bishop:
                results["radius_exact_default_weight"] = rational_spectral_radius(q)
    n = args.n
    results["n"] = n
    results["radius_power_estimate"] = spectral_radius_estimate(spec, n, grid)
    if spec.is_bishop:
        results["limit_radius_default_weight"] = math.exp(-1.0)
    return CommandOutput(
        results=results,
        diagnostics={"angle": alpha.describe()},
        grid_n=args.grid,
    )


# ---------------------------------------------------------------------------
# handlers: determinant test and approximation

def _angle_or_rq(args) -> tuple[int, int]:
    if args.q is not None or args.r is not None:
        if args.alpha is not None:
            raise _UsageError("give either --alpha or --r/--q, not both")
        if args.q is None or args.r is None:
            raise _UsageError("--r and --q go together")
        if args.q < 2 or not 0 < args.r < args.q:
            raise _UsageError(f"need 0 < r < q, q >= 2; got r={args.r}, q={args.q}")
        return _rational_angle(AlphaValue.from_fraction(Fraction(args.r, args.q)))
    if args.alpha is None:
        raise _UsageError("an angle is required: --alpha r/q or --r/--q")
    return _rational_angle(_alpha_arg(args.alpha))


def _cmd_delta(args) -> CommandOutput:
    r, q = _angle_or_rq(args)
    f = _expr_arg(args.f, "function")
    w = _weight_arg(args.weight)
    prof = delta_profile(f, w, r, q, samples=args.samples, tol=args.tol)
    with np.errstate(over="ignore"):
        dvals = np.exp(prof.log_abs) * prof.phase
    header, rows = _complex_frame(prof.ts, dvals)
    closed = None
    if evaluate(w, 0.0) == 0:
        closed = _complex_pair(delta_at_zero_closed_form(f, w, r, q))
    return CommandOutput(
        results={
            "closed_form_at_zero": closed,
            "min_abs": prof.min_abs,
            "min_log_abs": prof.min_log_abs,
            "q": q,
            "r": r,
            "samples": args.samples,
            "tol": prof.tol,
            "zero_measure": prof.zero_measure,
        },
        csv_frames=[("", header, rows)],
        plot=lambda path: _plots().profile_plot(
            path, prof.ts, prof.log_abs, prof.tol, f"determinant profile r/q={r}/{q}"
        ),
    )


def _cmd_cyclic_test(args) -> CommandOutput:
    r, q = _angle_or_rq(args)
    f = _expr_arg(args.f, "function")
    w = _weight_arg(args.weight)
    report = cyclicity_test(f, w, r, q, samples=args.samples, tol=args.tol)
    prof = report.profile
    with np.errstate(over="ignore"):
        dvals = np.exp(prof.log_abs) * prof.phase
    header, rows = _complex_frame(prof.ts, dvals)
    return CommandOutput(
        results={
            "longest_low_run": report.longest_low_run,
            "min_abs": prof.min_abs,
            "q": q,
            "r": r,
            "run_threshold": report.run_threshold,
            "samples": args.samples,
            "tol": prof.tol,
            "verdict": report.verdict,
            "zero_measure": prof.zero_measure,
        },
        csv_frames=[("", header, rows)],
        plot=lambda path: _plots().profile_plot(
            path, prof.ts, prof.log_abs, prof.tol, f"verdict: {report.verdict}"
        ),
    )


def _cmd_approx(args) -> CommandOutput:
    if args.eps <= 0:
        raise _UsageError(f"--eps must be positive, got {args.eps}")
    alpha = _alpha_arg(args.alpha)
    r, q = _rational_angle(alpha)
    f = _expr_arg(args.f, "function")
    w = _weight_arg(args.weight)
    g = _expr_arg(args.target, "target")
    grid = GridSpec(args.grid)
    report = approx_polynomial(f, w, r, q, g, args.eps, p=args.p, grid=grid)
    spec = OperatorSpec(alpha=AlphaValue.from_fraction(Fraction(r, q)), weight=w, p=args.p)
    verify_grid = GridSpec(report.verify_grid_n)
    oracle = orbit_span_residual(
        spec, f, g, report.polynomial.degree + 1, verify_grid
    )
    from .cyclicity import apply_polynomial  # local to avoid top-level clutter

    construction_grid = GridSpec(report.grid_n)
    applied = apply_polynomial(spec, f, report.polynomial, construction_grid)
    xs = construction_grid.midpoints()
    header, rows = _complex_frame(xs, applied)
    gv = evaluate_many(g, xs)
    return CommandOutput(
        results={
            "achieved": report.achieved,
            "eps": report.eps,
            "fit_degrees": list(report.fit_degrees),
            "fit_residuals": list(report.fit_residuals),
            "flagged_samples": report.flagged_samples,
            "grid_n_used": report.grid_n,
            "omega_fraction": report.omega_fraction,
            "omega_level": report.omega_level,
            "orbit_span_residual": oracle,
            "p": report.p,
            "polynomial_coeffs": [_complex_pair(c) for c in report.polynomial.coeffs],
            "polynomial_degree": report.polynomial.degree,
            "q": q,
            "r": r,
            "reconstruction_residual": report.reconstruction_residual,
            "residual_construction": report.residual_construction,
            "residual_verified": report.residual_verified,
            "target": report.target,
            "truncation_gap": report.truncation_gap,
            "truncation_ok": report.truncation_ok,
            "verify_grid_n": report.verify_grid_n,
        },
        grid_n=args.grid,
        csv_frames=[("", header, rows)],
        plot=lambda path: _plots().line_plot(
            path,
            xs,
            [
                ("target", gv.real),
                ("Q(T) f", applied.real),
                ("|error|", np.abs(applied - gv)),
            ],
            f"polynomial approximation, residual {report.residual_verified:.2e}",
            "x",
            "value",
        ),
    )


def _cmd_decompose(args) -> CommandOutput:
    r, q = _rational_angle(_alpha_arg(args.alpha))
    f = _expr_arg(args.f, "function")
    w = _weight_arg(args.weight)
    h = _expr_arg(args.target, "target")
    comp = decompose_target(h, f, w, r, q, args.n_level, GridSpec(args.grid))
    cond = comp.condition_numbers
    cond_ok = cond[~np.isnan(cond)]
    frames = []
    for j in range(q):
        header, rows = _complex_frame(comp.ts, comp.coefficients[j])
        frames.append((f"_h{j}", header, rows))
    curves = [(f"|h_{j}|", np.abs(comp.coefficients[j])) for j in range(q)]
    return CommandOutput(
        results={
            "condition_max": float(cond_ok.max()) if cond_ok.size else None,
            "condition_median": float(np.median(cond_ok)) if cond_ok.size else None,
            "flagged_samples": comp.flagged_samples,
            "grid_n_used": comp.grid_n_used,
            "n_level": comp.n_level,
            "omega_fraction": float(comp.omega_mask.mean()),
            "q": q,
            "r": r,
            "reconstruction_residual": comp.reconstruction_residual,
        },
        grid_n=args.grid,
        csv_frames=frames,
        plot=lambda path: _plots().line_plot(
            path, comp.ts, curves, "periodic coefficients", "t", "|h_j|"
        ),
    )


# ---------------------------------------------------------------------------
# handlers: continued fractions

def _cmd_cf(args) -> CommandOutput:
    alpha = _alpha_arg(args.alpha)
    cf = cf_expand(alpha, args.depth)
    checks = check_dirichlet(cf, alpha=alpha.fraction)
    return CommandOutput(
        results={
            "convergents": [
                {"p": str(p), "q": str(qd)} for p, qd in zip(cf.ps, cf.qs)
            ],
            "depth": cf.depth,
            "dirichlet": checks,
            "quotients": [str(a) for a in cf.quotients],
            "value_float": float(Fraction(cf.ps[-1], cf.qs[-1])),
        },
        diagnostics={"angle": alpha.describe()},
    )


def _cmd_dirichlet(args) -> CommandOutput:
    alpha = _alpha_arg(args.alpha)
    cf = cf_expand(alpha, args.depth)
    checks = check_dirichlet(cf, alpha=alpha.fraction)
    levels = []
    value = alpha.fraction
    for n in range(cf.depth + 1):
        diff = abs(value - cf.convergent(n))
        levels.append(
            {
                "holds": checks[n],
                "level": n,
                "log10_distance": _log10_fraction(diff),
                "q": str(cf.qs[n]),
            }
        )
    return CommandOutput(
        results={"all_hold": all(checks), "checks": checks, "levels": levels},
        diagnostics={"angle": alpha.describe()},
    )


def _cmd_gaps(args) -> CommandOutput:
    alpha = _alpha_arg(args.alpha)
    cf = cf_expand(alpha, args.depth)
    psi = _psi_arg(args.psi)
    cond = gap_indices(cf, psi)
    return CommandOutput(
        results={
            "depth": cond.depth,
            "growth_function": args.psi,
            "holds_within_truncation": cond.holds_within_truncation,
            "indices": list(cond.indices),
        },
        diagnostics={"angle": alpha.describe()},
    )


def _cmd_build_alpha(args) -> CommandOutput:
    psi = _psi_arg(args.psi)
    base = _int_list(args.base, "base quotients")
    cf = build_alpha_with_gaps(psi, args.levels, base_quotients=base)
    cond = gap_indices(cf, psi)
    return CommandOutput(
        results={
            "denominators": [str(qd) for qd in cf.qs],
            "gap_indices": list(cond.indices),
            "growth_function": args.psi,
            "quotients": [str(a) for a in cf.quotients],
            "value_float": float(cf.value()),
        },
    )


# ---------------------------------------------------------------------------
# handlers: stability pipeline

def _bank_args(args):
    f = _expr_arg(args.f, "function")
    w = _weight_arg(args.weight)
    if args.eps_q <= 0:
        raise _UsageError(f"--eps-q must be positive, got {args.eps_q}")
    grid = GridSpec(args.grid)
    return f, w, grid


def _bank_summary(bank) -> list[dict]:
    return [
        {
            "degree": e.polynomial.degree,
            "polynomial_coeffs": [_complex_pair(c) for c in e.polynomial.coeffs],
            "q": e.q,
            "r": e.r,
            "residual_verified": e.report.residual_verified,
            "target": e.target_text,
            "target_index": e.target_index,
        }
        for e in bank.entries
    ]


def _cmd_bank(args) -> CommandOutput:
    f, w, grid = _bank_args(args)
    qs = _int_list(args.q_list, "q list")
    bank = build_polynomial_bank(
        f, w, qs, targets=DEFAULT_TARGETS, eps_q=args.eps_q, p=args.p, grid=grid
    )
    return CommandOutput(
        results={
            "entries": _bank_summary(bank),
            "eps_q": bank.eps_q,
            "n_entries": len(bank.entries),
            "p": bank.p,
            "qs": list(bank.qs),
        },
        grid_n=args.grid,
    )


def _cmd_delta_q(args) -> CommandOutput:
    f, w, grid = _bank_args(args)
    bank = build_polynomial_bank(
        f, w, [args.q], targets=DEFAULT_TARGETS, eps_q=args.eps_q, p=args.p, grid=grid
    )
    est = estimate_delta(f, w, bank, args.q, grid=grid)
    psi = psi_value(args.q, est.delta)
    return CommandOutput(
        results={
            "best_h": str(est.best_h),
            "delta": str(est.delta),
            "delta_float": float(est.delta),
            "eps_q": est.eps_q,
            "psi": str(psi),
            "psi_float": float(psi),
            "q": args.q,
            "trace": [
                {"h": str(h), "passed": ok, "worst_move": move}
                for h, move, ok in est.trace
            ],
        },
        grid_n=args.grid,
    )


def _cmd_psi(args) -> CommandOutput:
    f, w, grid = _bank_args(args)
    qs = _int_list(args.q_list, "q list")
    bank, table = compute_psi_table(
        f, w, qs, targets=DEFAULT_TARGETS, eps_q=args.eps_q, p=args.p, grid=grid
    )
    rows = [
        {
            "delta": str(d),
            "delta_float": float(d),
            "psi": str(ps),
            "psi_float": float(ps),
            "q": q,
        }
        for q, d, ps in zip(table.qs, table.deltas, table.psis)
    ]
    return CommandOutput(
        results={"eps_q": table.eps_q, "rows": rows},
        diagnostics={"bank_entries": len(bank.entries)},
        grid_n=args.grid,
    )


def _cmd_verify_psi(args) -> CommandOutput:
    f, w, grid = _bank_args(args)
    qs = _int_list(args.q_list, "q list")
    bank, table = compute_psi_table(
        f, w, qs, targets=DEFAULT_TARGETS, eps_q=args.eps_q, p=args.p, grid=grid
    )
    override = _alpha_arg(args.alpha) if args.alpha else None
    report = verify_irrational_cyclicity(
        bank,
        table,
        f,
        w,
        targets=DEFAULT_TARGETS,
        n_targets=args.n_targets,
        alpha_override=override,
    )
    return CommandOutput(
        results={
            "all_passed": report.all_passed,
            "dirichlet_ok": report.dirichlet_ok,
            "eps_q": report.eps_q,
            "gap_levels": list(report.gap_levels),
            "gap_ok": report.gap_ok,
            "level_index": report.level_index,
            "level_q": report.level_q,
            "level_r": report.level_r,
            "proximity_ok": report.proximity_ok,
            "quotients": [str(a) for a in report.quotients],
            "targets": [
                {
                    "passed": t.passed,
                    "perturbation_residual": t.perturbation_residual,
                    "residual_alpha": t.residual_alpha,
                    "residual_rational": t.residual_rational,
                    "target": t.target_text,
                    "target_index": t.target_index,
                    "triangle_ok": t.triangle_ok,
                }
                for t in report.targets
            ],
            "verification_grid_n": report.grid_n,
        },
        diagnostics={
            "bank_entries": len(bank.entries),
            "psi_rows": [
                {"psi": str(ps), "q": q} for q, ps in zip(table.qs, table.psis)
            ],
        },
        grid_n=args.grid,
    )


# ---------------------------------------------------------------------------
# handlers: probes

def _cmd_probe_weight(args) -> CommandOutput:
    w = _weight_arg(args.weight)
    rep = periodic_weight(w, args.q, samples=args.samples)
    results = {
        "min_forward_difference": rep.min_forward_difference,
        "q": rep.q,
        "samples": args.samples,
        "strictly_increasing_sampled": rep.min_forward_difference > 0.0,
        "sup_sampled": rep.sup_sampled,
        "value_at_zero": rep.value_at_zero,
    }
    if args.weight is None:
        results["sup_exact_default_weight"] = math.factorial(args.q) / args.q**args.q
    header = ["x", "value"]
    rows = [[float(t), float(v)] for t, v in zip(rep.ts, rep.values)]
    return CommandOutput(
        results=results,
        csv_frames=[("", header, rows)],
        plot=lambda path: _plots().line_plot(
            path,
            rep.ts,
            [("w", rep.values)],
            f"q-step weight product, q={args.q}",
            "t",
            "w(t)",
        ),
    )


def _cmd_probe_eigen(args) -> CommandOutput:
    w = _weight_arg(args.weight)
    rep = eigen_levelset_probe(w, args.q, seed=args.seed, samples=args.samples)
    return CommandOutput(
        results={
            "coefficients": list(rep.coefficients),
            "lam": rep.lam,
            "lam_power_q": rep.lam_power_q,
            "linear_scaling_ok": rep.linear_scaling_ok,
            "max_relative_spread": rep.max_relative_spread,
            "measures": list(rep.measures),
            "q": rep.q,
            "tols": list(rep.tols),
        },
        plot=lambda path: _plots().scaling_plot(
            path, rep.tols, rep.measures, f"level-set scaling, q={args.q}"
        ),
    )


def _convex_row(rep) -> dict:
    return {
        "convex_ok": rep.convex_ok,
        "exceeds_band": rep.exceeds_band,
        "holds": rep.holds,
        "interval": [rep.interval[0], rep.interval[1]],
        "lower_bound": rep.lower_bound,
        "measure_outside": rep.measure_outside,
        "n_samples": rep.n_samples,
        "nondecreasing_ok": rep.nondecreasing_ok,
        "starts_below_band": rep.starts_below_band,
    }


def _cmd_probe_convex(args) -> CommandOutput:
    if args.alpha is not None:
        spec = OperatorSpec(alpha=_alpha_arg(args.alpha), weight=_weight_arg(args.weight))
        xs, vals = normalized_cocycle_peak_interval(spec, args.n, GridSpec(args.grid))
        rep = convex_product_bound_check(xs, vals)
        header = ["x", "value"]
        rows = [[float(x), float(v)] for x, v in zip(xs, vals)]
        return CommandOutput(
            results={"mode": "cocycle", "n": args.n, "row": _convex_row(rep)},
            grid_n=args.grid,
            csv_frames=[("", header, rows)],
            plot=lambda path: _plots().line_plot(
                path,
                xs,
                [("normalized product", vals)],
                f"peak interval, n={args.n}",
                "x",
                "value",
            ),
        )
    rows = []
    all_hold = True
    for xs, vals in seeded_convex_samples(args.seed, args.count, samples=args.samples):
        rep = convex_product_bound_check(xs, vals)
        rows.append(_convex_row(rep))
        all_hold &= rep.holds
    return CommandOutput(
        results={
            "all_hold": all_hold,
            "count": args.count,
            "mode": "seeded",
            "rows": rows,
        },
    )


def _cmd_probe_invariance(args) -> CommandOutput:
    spec = OperatorSpec(
        alpha=_alpha_arg(args.alpha), weight=_weight_arg(args.weight), p=args.p
    )
    f = _expr_arg(args.f, "function")
    rep = supercyclicity_invariance(spec, f, args.scalar, args.n, GridSpec(args.grid))
    return CommandOutput(
        results={
            "deviation": rep.deviation,
            "n": rep.n,
            "ok": rep.ok,
            "scalar": rep.scalar,
            "tolerance": rep.tolerance,
        },
        grid_n=args.grid,
    )


def _cmd_probe_obstruction(args) -> CommandOutput:
    spec = OperatorSpec(
        alpha=_alpha_arg(args.alpha), weight=_weight_arg(args.weight), p=args.p
    )
    f = _expr_arg(args.f, "function")
    rep = orbit_obstruction(spec, f, args.n, GridSpec(args.grid))
    return CommandOutput(
        results={
            "distance_power_p": rep.distance_power_p,
            "holds": rep.holds,
            "lower_bound": rep.lower_bound,
            "n": rep.n,
            "zero_set_measure": rep.zero_set_measure.value,
            "zero_set_measure_tolerance": rep.zero_set_measure.tolerance,
        },
        grid_n=args.grid,
    )


def _cmd_probe_unit_delta(args) -> CommandOutput:
    rep = unit_delta_conjecture_probe(q_max=args.q_max, samples=args.samples)
    return CommandOutput(
        results={
            "all_sampled_positive": rep.all_positive,
            "max_closed_form_err": rep.max_closed_form_err,
            "q_max": rep.q_max,
            "rows": [
                {
                    "closed_form_rel_err": row.closed_form_rel_err,
                    "min_abs": row.min_abs,
                    "monotone_violations": row.monotone_violations,
                    "q": row.q,
                    "r": row.r,
                }
                for row in rep.rows
            ],
            "samples": rep.samples,
        },
        diagnostics={
            "note": (
                "observational report; whether the determinant can vanish for "
                "the constant function stays open and is not asserted here"
            )
        },
    )


# ---------------------------------------------------------------------------
# plumbing

def _plots():
    from . import plots

    return plots


_HANDLERS = {
    "adjoint": _cmd_adjoint,
    "apply": _cmd_apply,
    "approx": _cmd_approx,
    "bank": _cmd_bank,
    "build-alpha": _cmd_build_alpha,
    "cf": _cmd_cf,
    "cyclic-test": _cmd_cyclic_test,
    "decompose": _cmd_decompose,
    "delta": _cmd_delta,
    "delta-q": _cmd_delta_q,
    "dirichlet": _cmd_dirichlet,
    "gaps": _cmd_gaps,
    "iterate": _cmd_iterate,
    "norm": _cmd_norm,
    "probe-convex": _cmd_probe_convex,
    "probe-eigen": _cmd_probe_eigen,
    "probe-invariance": _cmd_probe_invariance,
    "probe-obstruction": _cmd_probe_obstruction,
    "probe-unit-delta": _cmd_probe_unit_delta,
    "probe-weight": _cmd_probe_weight,
    "psi": _cmd_psi,
    "spectrum": _cmd_spectrum,
    "verify-psi": _cmd_verify_psi,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="bishop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    io_basic = _Parser(add_help=False)
    io_basic.add_argument(
        "--out", "--json", dest="out", help="write the JSON envelope to this file"
    )
    io_basic.add_argument("--seed", type=int, default=0, help="RNG seed")

    io_full = _Parser(add_help=False)
    io_full.add_argument(
        "--out", "--json", dest="out", help="write the JSON envelope to this file"
    )
    io_full.add_argument("--seed", type=int, default=0, help="RNG seed")
    io_full.add_argument("--csv", help="write sample arrays to this CSV file")
    io_full.add_argument("--plot", help="render a PNG figure to this file")

    def real(text):
        return _real_arg(text, "real number")

    def op_args(p, grid_default):
        p.add_argument("--alpha", required=True, help="angle: p/q, decimal, cf:…, golden:<depth>")
        p.add_argument("--weight", help="weight expression (default: x)")
        p.add_argument("--p", type=real, default=2.0, help="exponent of the L^p norm")
        p.add_argument("--grid", type=int, default=grid_default, help="grid size")

    p = sub.add_parser("apply", parents=[io_full], help="apply the operator once")
    op_args(p, 4096)
    p.add_argument("--f", required=True, help="function expression")

    p = sub.add_parser("iterate", parents=[io_full], help="apply the operator n times")
    op_args(p, 4096)
    p.add_argument("--f", required=True, help="function expression")
    p.add_argument("--n", type=int, required=True, help="iterate count")

    p = sub.add_parser("adjoint", parents=[io_full], help="apply the adjoint once")
    op_args(p, 4096)
    p.add_argument("--f", required=True, help="function expression")

    p = sub.add_parser("norm", parents=[io_basic], help="norm of the n-th power")
    op_args(p, 100000)
    p.add_argument("--n", type=int, required=True, help="power")

    p = sub.add_parser("spectrum", parents=[io_basic], help="spectral radius summary")
    op_args(p, 100000)
    p.add_argument("--n", type=int, default=500, help="power used for the estimate")

    for name, extra_help in (
        ("delta", "determinant profile over one period"),
        ("cyclic-test", "dense-orbit verdict from the determinant profile"),
    ):
        p = sub.add_parser(name, parents=[io_full], help=extra_help)
        p.add_argument("--alpha", help="rational angle r/q")
        p.add_argument("--q", type=int, help="denominator (alternative to --alpha)")
        p.add_argument("--r", type=int, help="numerator (alternative to --alpha)")
        p.add_argument("--weight", help="weight expression (default: x)")
        p.add_argument("--f", required=True, help="function expression")
        p.add_argument("--samples", type=int, default=2048, help="t samples in [0, 1/q)")
        p.add_argument("--tol", type=real, default=1e-9, help="zero threshold")

    p = sub.add_parser("approx", parents=[io_full], help="construct Q with ||Q(T)f - g|| < eps")
    op_args(p, 8192)
    p.add_argument("--f", required=True, help="function expression")
    p.add_argument(
        "--target", "--g", dest="target", required=True, help="target expression g"
    )
    p.add_argument("--eps", type=real, required=True, help="residual budget")

    p = sub.add_parser("decompose", parents=[io_full], help="periodic coefficient decomposition")
    op_args(p, 8192)
    p.add_argument("--f", required=True, help="function expression")
    p.add_argument("--target", required=True, help="target expression h")
    p.add_argument("--n-level", type=int, default=64, help="bad-set cutoff index n")

    p = sub.add_parser("cf", parents=[io_basic], help="continued fraction expansion")
    p.add_argument("--alpha", required=True, help="angle")
    p.add_argument("--depth", type=int, default=20, help="quotients to expand")

    p = sub.add_parser("dirichlet", parents=[io_basic], help="convergent quality checks")
    p.add_argument("--alpha", required=True, help="angle")
    p.add_argument("--depth", type=int, default=20, help="quotients to expand")

    p = sub.add_parser("gaps", parents=[io_basic], help="levels where q_{n+1} beats a growth function")
    p.add_argument("--alpha", required=True, help="angle")
    p.add_argument("--depth", type=int, default=20, help="quotients to expand")
    p.add_argument("--psi", required=True, help="growth function: int, q, q^k, b^q")

    p = sub.add_parser("build-alpha", parents=[io_basic], help="build an angle with forced denominator gaps")
    p.add_argument("--psi", required=True, help="growth function: int, q, q^k, b^q")
    p.add_argument("--levels", type=int, required=True, help="gap quotients to append")
    p.add_argument("--base", default="0,1", help="starting quotients, comma-separated")

    def bank_args(p):
        p.add_argument("--f", default="1", help="function expression (default 1)")
        p.add_argument("--weight", help="weight expression (default: x)")
        p.add_argument("--eps-q", type=real, default=0.1, help="per-level residual budget")
        p.add_argument("--p", type=real, default=2.0, help="exponent of the L^p norm")
        p.add_argument("--grid", type=int, default=4096, help="construction grid size")

    p = sub.add_parser("bank", parents=[io_basic], help="certified polynomial bank")
    bank_args(p)
    p.add_argument("--q-list", required=True, help="denominators, comma-separated")

    p = sub.add_parser("delta-q", parents=[io_basic], help="stability radius at one q")
    bank_args(p)
    p.add_argument("--q", type=int, required=True, help="denominator")

    p = sub.add_parser("psi", parents=[io_basic], help="stability table over a q list")
    bank_args(p)
    p.add_argument("--q-list", required=True, help="denominators, comma-separated")

    p = sub.add_parser("verify-psi", parents=[io_basic], help="end-to-end irrational-angle verification")
    bank_args(p)
    p.add_argument("--q-list", required=True, help="denominators, comma-separated")
    p.add_argument("--alpha", help="override angle (default: built from the table)")
    p.add_argument("--n-targets", type=int, default=None, help="how many targets to verify")

    probe = sub.add_parser("probe", help="measurement probes")
    psub = probe.add_subparsers(dest="probe_kind", required=True)

    p = psub.add_parser("weight", parents=[io_full], help="q-step weight product")
    p.add_argument("--weight", help="weight expression (default: x)")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--samples", type=int, default=4096)

    p = psub.add_parser("eigen", parents=[io_full], help="eigenvalue level-set scaling")
    p.add_argument("--weight", help="weight expression (default: x)")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--samples", type=int, default=2**17)

    p = psub.add_parser("convex", parents=[io_full], help="convex product lower bound")
    p.add_argument("--alpha", help="cocycle mode: angle")
    p.add_argument("--weight", help="weight expression (default: x)")
    p.add_argument("--n", type=int, default=8, help="cocycle mode: step count")
    p.add_argument("--grid", type=int, default=100000, help="cocycle mode: grid size")
    p.add_argument("--count", type=int, default=20, help="seeded mode: sample count")
    p.add_argument("--samples", type=int, default=4096, help="seeded mode: grid size")

    p = psub.add_parser("invariance", parents=[io_basic], help="scalar invariance of the orbit direction")
    op_args(p, 100000)
    p.add_argument("--f", required=True, help="function expression")
    p.add_argument("--scalar", type=real, default=2.0, help="positive scalar a")
    p.add_argument("--n", type=int, default=100, help="iterate count")

    p = psub.add_parser("obstruction", parents=[io_basic], help="zero-set obstruction")
    op_args(p, 16384)
    p.add_argument("--f", required=True, help="function expression")
    p.add_argument("--n", type=int, default=1, help="iterate count")

    p = psub.add_parser("unit-delta", parents=[io_basic], help="determinant scan for the constant function")
    p.add_argument("--q-max", type=int, default=12)
    p.add_argument("--samples", type=int, default=512)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest", help="JSON envelope or manifest file")

    return parser


def _canonical_command(args) -> str:
    if args.command == "probe":
        return f"probe-{args.probe_kind}"
    return args.command


def _run(argv: list[str]) -> int:
    try:
        # gap-forced denominators easily exceed the default 4300-digit
        # str() guard; these integers are the requested output
        sys.set_int_max_str_digits(2_000_000)
    except (AttributeError, ValueError):
        pass
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"bishop: {e}", file=sys.stderr)
        return 1

    if args.command == "replay":
        return _replay(args.manifest)

    command = _canonical_command(args)
    started = time.perf_counter()
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            output = _HANDLERS[command](args)
    except _UsageError as e:
        print(f"bishop: {e}", file=sys.stderr)
        return 1
    except (PrecisionExhausted, np.linalg.LinAlgError, ArithmeticError) as e:
        print(f"bishop: numerical failure: {e}", file=sys.stderr)
        return 2
    except (ExprSyntaxError, ExprDomainError, ValueError) as e:
        print(f"bishop: {e}", file=sys.stderr)
        return 1
    duration = time.perf_counter() - started

    parameters = {
        k: _jsonable(v)
        for k, v in sorted(vars(args).items())
        if k not in ("command", "probe_kind")
    }
    manifest = {
        "argv": list(argv),
        "artifact_version": __version__,
        "command": command,
        "duration_seconds": None,
        "grid_n": output.grid_n,
        "parameters": parameters,
        "precision_bits": precision_bits(),
        "seed": getattr(args, "seed", 0),
    }
    diagnostics = dict(output.diagnostics)
    if caught:
        diagnostics["warnings"] = [str(w.message) for w in caught]
    envelope = {
        "diagnostics": _jsonable(diagnostics),
        "manifest": manifest,
        "results": _jsonable(output.results),
        "schema_version": SCHEMA_VERSION,
    }
    text = json.dumps(envelope, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    if getattr(args, "csv", None):
        base = Path(args.csv)
        for suffix, header, rows in output.csv_frames:
            path = base if not suffix else base.with_stem(base.stem + suffix)
            _write_csv(str(path), header, rows)
        if not output.csv_frames:
            print("bishop: this command has no CSV output", file=sys.stderr)
    if getattr(args, "plot", None):
        if output.plot is None:
            print("bishop: this command has no figure output", file=sys.stderr)
        else:
            output.plot(args.plot)
    print(f"bishop {command}: completed in {duration:.2f}s", file=sys.stderr)
    return 0


def _replay(path: str) -> int:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        print(f"bishop: cannot read manifest {path!r}: {e}", file=sys.stderr)
        return 1
    manifest = payload.get("manifest", payload)
    argv = manifest.get("argv")
    if not isinstance(argv, list) or not all(isinstance(a, str) for a in argv):
        print(f"bishop: manifest {path!r} has no usable argv", file=sys.stderr)
        return 1
    return _run(argv)


def main(argv=None) -> int:
    return _run(list(sys.argv[1:]) if argv is None else list(argv))


if __name__ == "__main__":
    sys.exit(main())
