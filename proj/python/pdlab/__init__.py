"""Poisson-Dirichlet large-deviation laboratory (Python bindings)."""

from ._pdlab import (
    DensityGrid,
    DomainError,
    NumericError,
    UnsupportedError,
    __version__,
    cgf_Lambda,
    choose_truncation,
    homozygosity_moment,
    legendre_transform,
    moment_pk,
    phase_classify,
    rate_homozygosity,
    rate_I,
    rate_Ik,
    rate_S,
    rate_Sn,
    run_cli,
    sample_ranked,
    selection_sup,
    solve_c0,
    verify_ldp_p1,
)

__all__ = [
    "DensityGrid",
    "DomainError",
    "NumericError",
    "UnsupportedError",
    "__version__",
    "cgf_Lambda",
    "choose_truncation",
    "homozygosity_moment",
    "legendre_transform",
    "moment_pk",
    "phase_classify",
    "rate_homozygosity",
    "rate_I",
    "rate_Ik",
    "rate_S",
    "rate_Sn",
    "run_cli",
    "sample_ranked",
    "selection_sup",
    "solve_c0",
    "verify_ldp_p1",
]
