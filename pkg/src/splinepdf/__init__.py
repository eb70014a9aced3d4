"""Spline-based density estimation for uncertainty quantification.

A smooth quantity of interest is sampled on a small design grid, replaced by a
cubic (or tensor-product cubic) spline, and the input law is pushed forward
through the cheap surrogate to estimate the density and moments of the output.
Polynomial-chaos collocation, kernel density estimates and plain Monte-Carlo
are provided as baselines.
"""
from .density import (
    GridDensity,
    HistogramDensity,
    InputDensity,
    KernelDensity,
    exact_cdf_1d,
    exact_histogram_1d,
    exact_pdf_1d,
    histogram,
    kde,
    optimal_bins,
    pushforward_mc,
)
from .errors import ConfigError, NumericalFailure, UndefinedStatistic
from .gpc import GpcSurrogate, TensorGpc, gpc_fit, ortho_poly, tensor_gpc_fit
from .grids import QuadratureRule, UniformGrid, gauss_rule, uniform_grid
from .metrics import (
    MomentSummary,
    PowerLawFit,
    circular_moments,
    fit_power_law,
    hellinger,
    kl_divergence,
    lp_distance,
    moments_mc,
    moments_spline,
)
from .problems import PROBLEMS, Problem, get_problem, oracle_histogram
from .spline import Clamped, CubicSpline1D, GridSamples, TensorSpline, fit_cubic, fit_tensor
from .study import ConvergenceReport, StudyConfig, emit_csv, parse_csv, run_study

__version__ = "0.1.0"
