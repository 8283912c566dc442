"""Closed-form inequality indices, fitting and SDE simulation for the GB2 family."""

from .dist import (FAMILIES, NonExistent, DistributionSpec, bp, ga, gb2, gga, giga, iga, ln,
                   cdf, pdf, quantile, sample, sf, mean, rms, std, mode, tail_exponents)
from .ineq import IndexReport, closed_form_indices, dmms, empirical_indices
from .fit import FitResult, fit_report, ks_statistic, mle_fit, tail_cut, tail_slope
from .sample import Sample
from .sde import SdeConfig, simulate, steady_state_spec

__version__ = "0.1.0"

__all__ = [
    "FAMILIES", "NonExistent", "DistributionSpec", "bp", "ga", "gb2", "gga", "giga", "iga", "ln",
    "cdf", "pdf", "quantile", "sample", "sf", "mean", "rms", "std", "mode", "tail_exponents",
    "IndexReport", "closed_form_indices", "dmms", "empirical_indices",
    "FitResult", "fit_report", "ks_statistic", "mle_fit", "tail_cut", "tail_slope",
    "Sample", "SdeConfig", "simulate", "steady_state_spec",
]
