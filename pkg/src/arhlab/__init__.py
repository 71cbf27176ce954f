"""Linear processes on function spaces: simulation, operator estimation and forecasting."""

from .arh import (ArhEstimate, CvReport, IdentifiabilityError, ResidualSeries, changepoint_statistic,
                  changepoint_test, cross_validate, estimate_arh_p, estimate_rho, predict,
                  predictor_clt_experiment, residuals)
from .hilbert import (Curve, EigenSystem, Grid, GridMismatchError, OperatorMatrix, Sample,
                      eigendecompose, inner_product, norm, tensor_product)
from .moments import MomentSet, compute_moments, empirical_cov, functional_pca, local_cov
from .regularize import RegScheme, cutoff_schedule, reg_inverse
from .simulate import (ArhSpec, LinearProcessSpec, NoiseSpec, NonStationaryError,
                       simulate_arh1, simulate_arh1_change, simulate_linear_process,
                       simulate_ou_segments, simulate_wong_segments, stationarity_check)

__version__ = "0.1.0"

__all__ = [
    "ArhEstimate", "ArhSpec", "CvReport", "Curve", "EigenSystem", "Grid", "GridMismatchError",
    "IdentifiabilityError", "LinearProcessSpec", "MomentSet", "NoiseSpec", "NonStationaryError",
    "OperatorMatrix", "RegScheme", "ResidualSeries", "Sample", "changepoint_statistic",
    "changepoint_test", "compute_moments", "cross_validate", "cutoff_schedule", "eigendecompose",
    "empirical_cov", "estimate_arh_p", "estimate_rho", "functional_pca", "inner_product",
    "local_cov", "norm", "predict", "predictor_clt_experiment", "reg_inverse", "residuals",
    "simulate_arh1", "simulate_arh1_change", "simulate_linear_process", "simulate_ou_segments",
    "simulate_wong_segments", "stationarity_check", "tensor_product",
]
