"""Simulation and Nadaraya-Watson estimation for integrated diffusion processes."""

from ._backend import NAME as BACKEND
from .analysis import (
    MaaeReport,
    MomentCheckReport,
    RateParams,
    check_beta_conditions,
    eval_grid,
    integrated_variance_factor,
    maae,
    moment_check_diffusion,
    moment_check_drift,
    rate_diffusion,
    rate_drift,
    rate_fit,
    rate_remark2,
)
from .errors import (
    BandwidthError,
    ConditionNotApplicableError,
    ConfigError,
    DivergenceError,
    GridMismatchError,
    InsufficientDataError,
    IntDiffError,
    InvalidEstimateError,
    ParameterError,
)
from .estimators import (
    BreveSeries,
    EstimateCurve,
    compute_breve,
    nw_drift_direct,
    nw_drift_integrated,
    nw_sigma2_direct,
    nw_sigma2_integrated,
)
from .kernels import KernelSpec, kernel_eval, kernel_scaled, make_kernel, validate_kernel
from .sde import (
    FinePath,
    ObservationSet,
    SdeModel,
    euler_simulate,
    make_cir_model,
    make_ou_model,
    simulate_observations,
    subsample,
)

__version__ = "0.1.0"
