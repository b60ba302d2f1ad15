"""maxinfer: bootstrap inference for maxima of high-dimensional sums.

Core pieces: multiplier and empirical bootstrap quantile engines for max
statistics, Gaussian-analog simulation, the Dantzig selector with
canonical / simulated / bootstrap penalty levels, stepdown multiple
testing with family-wise error control, an adaptive specification test,
and a deterministic Monte Carlo harness behind the ``maxinfer`` CLI.
"""

from .rng import SeededRng, derive_seed, sample_normal, sample_student_t, sample_uniform
from .stat_core import (
    NotPsdError,
    PsdFactor,
    empirical_quantile,
    normal_cdf,
    normal_quantile,
    psd_factor,
)
from .max_stats import (
    ABSOLUTE_MAX,
    SIGNED_MAX,
    BootstrapConfig,
    CovarianceGap,
    MaxStatKind,
    MaxStatVariant,
    QuantileEstimate,
    compute_max_stat,
    compute_w0,
    covariance_gap,
    empirical_bootstrap_quantile,
    empirical_bootstrap_stat,
    ks_distance,
    levy_concentration,
    multiplier_bootstrap_quantile,
    simulate_gaussian_max,
    smooth_max,
)
from .lp import LpProblem, LpSolution, LpStatus, solve_lp
from .dantzig import (
    DantzigResult,
    KappaEstimate,
    KappaNorm,
    PenaltyKind,
    PenaltySpec,
    RegressionData,
    ResidualMode,
    canonical_penalty,
    confidence_rectangle,
    estimate_kappa,
    fit_dantzig,
    gar_penalty,
    mb_penalty,
    portmanteau_test,
    prediction_seminorm,
)
from .stepdown import MhtProblem, StepdownResult, means_problem, run_stepdown, stepdown_critical_value
from .spectest import SpecTestInput, SpecTestResult, build_test_functions, run_spec_test

__version__ = "0.1.0"
