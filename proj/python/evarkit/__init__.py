"""e-power laboratory for exponential-family e-variables.

Thin wrapper around the C++ core: exact Gaussian e-power calculus,
exponential families in mean-value parameterization, two-sample test
constructions, the numerical reverse information projection, and the
seeded Monte-Carlo harness.
"""

from ._evarkit import (
    CurvePoint,
    DomainError,
    Family,
    GaussianLocationProblem,
    TestingProblem,
    TwoSampleProblem,
    TwoSampleSpec,
    classify_two_sample,
    d_gauss,
    d_triple,
    eprocess_gaussian,
    evar_kinds,
    family_names,
    gaussian_kl,
    make_family,
    mle,
    mle_marginal,
    monte_carlo,
    predicted_epower,
    prequential,
    solve_mixture_kl,
    trace_ratio,
)

__all__ = [
    "CurvePoint",
    "DomainError",
    "Family",
    "GaussianLocationProblem",
    "TestingProblem",
    "TwoSampleProblem",
    "TwoSampleSpec",
    "classify_two_sample",
    "d_gauss",
    "d_triple",
    "eprocess_gaussian",
    "evar_kinds",
    "family_names",
    "gaussian_kl",
    "make_family",
    "mle",
    "mle_marginal",
    "monte_carlo",
    "predicted_epower",
    "prequential",
    "solve_mixture_kl",
    "trace_ratio",
]
