"""Closed-form early stopping and latent-dimension selection for Gaussian
diffusion models, with Monte-Carlo and numerical-integration cross-checks."""

from .config import ConfigError, ExperimentConfig, config_lines, parse_config_text
from .erm import (
    ConstrainedScore,
    DMinResult,
    d1_d2,
    d_min_search,
    m_hat,
    make_constrained_score,
    t_prime,
    terminal_variance_closed,
    variance_ode_numeric,
    variance_ode_path,
)
from .estimation import (
    SampleSet,
    chi2_deviation_bound,
    empirical_covariance,
    empirical_variances,
    epsilon_u,
    s_of_sigma,
    sample_gaussian,
)
from .frechet import (
    GaussianModel,
    Spectrum,
    diffused_cov_diag,
    eigh_desc,
    frechet_sq_diag,
    frechet_sq_general,
)
from .partition import (
    RobustPartitions,
    StoppingResult,
    TimePartition,
    distance_sq_at,
    distance_sq_grid,
    exact_partition,
    monotonicity_condition,
    optimal_dim_at,
    optimal_stopping_delta,
    plugin_partition,
    robust_partition,
    stopping_time,
)
from .schedule import (
    NoiseSchedule,
    inv_a2,
    log_snr,
    logsnr_time_grid,
    make_ou_schedule,
    make_schedule,
)
from .simulate import (
    SimConfig,
    SimResult,
    empirical_frechet,
    simulate_backward,
    simulate_forward,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "config_lines",
    "parse_config_text",
    "ConstrainedScore",
    "DMinResult",
    "d1_d2",
    "d_min_search",
    "m_hat",
    "make_constrained_score",
    "t_prime",
    "terminal_variance_closed",
    "variance_ode_numeric",
    "variance_ode_path",
    "SampleSet",
    "chi2_deviation_bound",
    "empirical_covariance",
    "empirical_variances",
    "epsilon_u",
    "s_of_sigma",
    "sample_gaussian",
    "GaussianModel",
    "Spectrum",
    "diffused_cov_diag",
    "eigh_desc",
    "frechet_sq_diag",
    "frechet_sq_general",
    "RobustPartitions",
    "StoppingResult",
    "TimePartition",
    "distance_sq_at",
    "distance_sq_grid",
    "exact_partition",
    "monotonicity_condition",
    "optimal_dim_at",
    "optimal_stopping_delta",
    "plugin_partition",
    "robust_partition",
    "stopping_time",
    "NoiseSchedule",
    "inv_a2",
    "log_snr",
    "logsnr_time_grid",
    "make_ou_schedule",
    "make_schedule",
    "SimConfig",
    "SimResult",
    "empirical_frechet",
    "simulate_backward",
    "simulate_forward",
    "__version__",
]
