"""Local projection impulse responses with pointwise, simultaneous and significance bands."""

from .bands import (
    BandSet,
    JointTestResult,
    bonferroni_level,
    chi2_quantile,
    joint_zero_test,
    lm_statistic,
    normal_quantile,
    pointwise_bands,
    scheffe_bands,
    significance_bands_asymptotic,
    significance_bands_bootstrap,
    supt_bands,
)
from .core import (
    DesignError,
    DgpConfig,
    EstimationError,
    LPSpec,
    RegressionDesign,
    TimeSeriesDataset,
    WeakInstrumentError,
    build_design,
    fwl_partial,
    nonlinear_response,
    true_irf,
)
from .estimators import (
    IrfEstimate,
    estimate,
    lp_fgls,
    lp_gmm,
    lp_iv,
    lp_lag_augmented,
    lp_ols,
    split_panel_jackknife,
)
from .simulation import McResult, run_mc, simulate
from .smoothing import BasisMatrix, SmoothFit, bspline_basis, fit_smooth_irf
from .variance import LrvEstimate, hc_variance, newey_west_lrv, wild_block_bootstrap_se

__version__ = "0.1.0"
