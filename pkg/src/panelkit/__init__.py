"""Panel-data econometrics: two-way fixed effects, random effects, Hausman
and cluster-robust inference, stepwise selection, regional comparisons."""

from .errors import CollinearityError, DataError, EstimationError, PanelKitError
from .estimators import FitResult, ModelSpec, fit, fit_fixed_effects, fit_pooled, fit_random_effects
from .inference import (
    TestResult,
    classical_covariance,
    cluster_robust_covariance,
    hausman_test,
    joint_wald_test,
    panel_diagnostics,
    t_test,
)
from .numerics import chi2_cdf, f_cdf, solve_least_squares, t_cdf
from .panel import DesignBundle, PanelDataset, build_lsdv_design, load_csv, within_transform
from .regional import RegionalComparison, compare_periods
from .report import FitTests, compute_fit_tests, render_fit_table
from .selection import StepwiseTrace, stepwise_select
from .simulation import SyntheticPanelConfig, generate_panel, run_monte_carlo

__version__ = "0.1.0"
