"""Random-matrix sampling and Monte Carlo estimators."""

from .config import (EnsembleConfig, Estimator, Gaussian, MCMCSettings, MomentEstimate,
                     NormalityReport, Quartic, SpectrumSample, stream)
from .estimators import (empirical_density, estimate_log_moments, estimate_normalized_moment,
                         estimate_resolvent_mean, estimate_resolvent_pair, estimate_saddle_point,
                         estimate_two_point, log_char_poly, log_char_poly_sample,
                         log_char_poly_values, normality_diagnostics)
from .sampling import (SpectrumBatch, draw_spectra, eigs_sym_tridiag, gue_matrix,
                       hermitian_eigenvalues, sample_gue, sample_quartic)
from .transfer import exact_gaussian_moment

__all__ = [
    "EnsembleConfig", "Estimator", "Gaussian", "MCMCSettings", "MomentEstimate", "NormalityReport",
    "Quartic", "SpectrumBatch", "SpectrumSample", "draw_spectra", "eigs_sym_tridiag",
    "empirical_density", "estimate_log_moments", "estimate_normalized_moment",
    "estimate_resolvent_mean", "estimate_resolvent_pair", "estimate_saddle_point",
    "estimate_two_point", "exact_gaussian_moment", "gue_matrix", "hermitian_eigenvalues",
    "log_char_poly", "log_char_poly_sample", "log_char_poly_values", "normality_diagnostics",
    "sample_gue", "sample_quartic", "stream",
]
