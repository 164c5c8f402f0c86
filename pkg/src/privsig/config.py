"""Numeric defaults shared by every solver."""

from pydantic import BaseModel, ConfigDict, Field


class NumericSettings(BaseModel):
    """Tolerances, iteration caps and Monte Carlo sizes."""

    model_config = ConfigDict(frozen=True)

    jacobi_max_sweeps: int = Field(100, description="Sweep cap for the cyclic Jacobi eigensolver")
    jacobi_tol: float = Field(1e-12, description="Off-diagonal Frobenius norm target, relative to the input norm")
    zero_tol_rel: float = Field(1e-10, description="Eigenvalues with |lambda| <= zero_tol_rel * max|lambda| count as zero")
    pd_rel_tol: float = Field(1e-12, description="Positive definiteness floor relative to the largest eigenvalue")
    pinv_rel_cutoff: float = Field(1e-12, description="Spectral pseudo-inverse cutoff relative to the largest eigenvalue")
    lloyd_tol: float = Field(1e-12, description="Quantizer level movement at convergence")
    lloyd_max_iter: int = Field(100_000, description="Iteration cap for Lloyd-Max")
    verify_tol: float = Field(1e-8, description="Tolerance for analytic certificates")
    k_sigma: float = Field(4.0, description="Monte Carlo agreement band in standard errors")
    mc_fit_samples: int = Field(100_000, description="Samples for fitting nonlinear decoders")
    mc_bins: int = Field(200, description="Equal-probability bins of the binned conditional mean")
    default_seed: int = Field(42, description="Seed used when none is given")
    json_significant_digits: int = Field(12, description="Significant digits of JSON numbers")


DEFAULTS = NumericSettings()
