"""Overlapping-spline smoothing with integrated Wiener process priors."""

from ._core import (
    Fit,
    design,
    equal_knots,
    exact_cov,
    fit,
    ospline_cov,
    psd_conditional_sd,
    psd_to_sigma,
    sigma_to_psd,
    sup_cov_error,
    weight_precision,
)

__all__ = [
    "Fit",
    "design",
    "equal_knots",
    "exact_cov",
    "fit",
    "ospline_cov",
    "psd_conditional_sd",
    "psd_to_sigma",
    "sigma_to_psd",
    "sup_cov_error",
    "weight_precision",
]
