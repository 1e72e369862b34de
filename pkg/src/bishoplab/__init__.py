"""Numerical laboratory for weighted translation operators on L^p[0, 1).

The operator family under study sends f to weight(x) * f({x + alpha}).
The package provides exact-arithmetic angle handling, cocycle-based
iteration that survives e^-n decay, a determinant test for dense orbit
spans at rational angles, a constructive polynomial approximation
pipeline with an independent least-squares oracle, continued-fraction
tooling, the stability-radius bridge from rational to irrational angles,
and a set of measurement probes.  The `bishop` command line exposes all
of it with reproducible, manifest-stamped output.
"""

from .cyclicity import (
    ApproxReport,
    CyclicityReport,
    DeltaProfile,
    PeriodicComponents,
    PolynomialCoeffs,
    apply_polynomial,
    approx_polynomial,
    assemble_polynomial,
    check_cyclicity_weight,
    cyclicity_test,
    decompose_target,
    delta_at_zero_closed_form,
    delta_profile,
    delta_sample,
    fit_periodic_polynomials,
    orbit_span_residual,
    periodic_weight_samples,
)
from .diophantine import (
    ContinuedFraction,
    GapCondition,
    PrecisionExhausted,
    build_alpha_with_gaps,
    cf_expand,
    check_dirichlet,
    gap_indices,
    is_liouville_witness,
)
from .expr import (
    Expr,
    ExprDomainError,
    ExprSyntaxError,
    breakpoints,
    evaluate,
    evaluate_many,
    parse,
    to_text,
)
from .numerics import (
    AlphaValue,
    GridSpec,
    MeasureEstimate,
    check_collision_free,
    frac_shift,
    lp_norm,
    measure_estimate,
    parse_alpha,
    parse_real,
    precision_bits,
)
from .operators import (
    CocycleResult,
    IterateResult,
    OperatorSpec,
    apply_adjoint,
    apply_operator,
    cocycle,
    iterate,
    iterate_all,
    make_spec,
    power_norm,
    power_norm_log,
    spectral_radius_estimate,
)
from .probes import (
    ConvexBoundReport,
    InvarianceReport,
    LevelsetReport,
    ObstructionReport,
    PeriodicWeightReport,
    UnitDeltaReport,
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
from .psi import (
    DEFAULT_TARGETS,
    BankEntry,
    DeltaEstimate,
    PolynomialBank,
    PsiTable,
    TargetFamily,
    VerificationReport,
    build_polynomial_bank,
    compute_psi_table,
    estimate_delta,
    psi_value,
    verify_irrational_cyclicity,
)

__version__ = "0.1.0"
