"""Sparse nonlinear system identification with the trimmed Lasso."""

from .library import Library, AugmentedLibrary, PolynomialLibrary, poly_library, custom_library
from .numerics import OperatorMatrix, RankDeficiencyError, diff_matrix, integ_matrix, least_squares
from .preprocess import (ScalingRecord, TikhonovSmoother, add_awgn, add_correlated_noise,
                         regularized_derivative, scale_library, tikhonov_denoise)
from .selection import (NoCornerError, SelectionPath, info_criterion, lcurve_corner, sweep,
                        trim_select)
from .solvers import (ConvergenceError, EnsembleSTLSRegressor, IRL1Regressor, SparseSolution,
                      STLSRegressor, TrimConfig, TrimmedLassoRegressor, ensemble_stls, irl1,
                      lasso, stls, trim_ivp, trim_solve, trimmed_lasso_penalty)
from .uq import BootstrapEnsemble, bootstrap, confidence_intervals

__version__ = "0.1.0"

__all__ = [
    "AugmentedLibrary", "BootstrapEnsemble", "ConvergenceError", "EnsembleSTLSRegressor",
    "IRL1Regressor", "Library", "NoCornerError", "OperatorMatrix", "PolynomialLibrary",
    "RankDeficiencyError", "STLSRegressor", "ScalingRecord", "SelectionPath", "SparseSolution",
    "TikhonovSmoother", "TrimConfig", "TrimmedLassoRegressor", "add_awgn",
    "add_correlated_noise", "bootstrap", "confidence_intervals", "custom_library", "diff_matrix",
    "ensemble_stls", "info_criterion", "integ_matrix", "irl1", "lasso", "lcurve_corner",
    "least_squares", "poly_library", "regularized_derivative", "scale_library", "stls", "sweep",
    "tikhonov_denoise", "trim_ivp", "trim_select", "trim_solve", "trimmed_lasso_penalty",
    "__version__",
]
