"""Subdistribution beta-Stacy processes for Bayesian competing-risks analysis."""

from __future__ import annotations

__version__ = "0.1.0"

from .centering import (
    RegressionTheta,
    centered_prior,
    centering_subdistribution,
    discrete_weibull_cdf,
    multinomial_logistic,
    weight_schedule,
)
from .data import CensoredSample
from .diagnostics import effective_sample_size, geweke_diagnostic, monte_carlo_se
from .estimators import SbsEstimator, SbsRegressor
from .posterior import (
    CensoredObservation,
    CountStatistics,
    censored_log_likelihood,
    count_statistics,
    kalbfleisch_prentice,
    kaplan_meier,
    nelson_aalen,
    posterior_centering,
    posterior_update,
    predictive_distribution,
)
from .process import (
    CenteredSbs,
    CumulativeHazards,
    SbsParameters,
    SubdistributionFunction,
    TimeGrid,
    centered_to_raw,
    hazards_from_subdistribution,
    prior_mean,
    prior_second_moment,
    prior_variance,
    sample_increments,
    sample_increments_decomposition,
    sample_sbs,
    sample_via_decomposition,
    subdistribution_from_hazards,
    validate_recurrency,
)
from .regression import (
    McmcChain,
    RegressionConfig,
    log_prior,
    marginal_log_likelihood,
    parametric_log_likelihood,
    posterior_mode,
    predictive_for_profile,
    prior_concentration_curve,
    prior_theta_sampler,
    rwmh_sample,
)
from .simulation import (
    SimulationConfig,
    fit_mle,
    generate_dataset,
    ks_distance,
    run_simulation_study,
)
from .urn import (
    HorizonExceededError,
    PatientBlock,
    UrnSystem,
    path_probability,
    scaled_reinforcement_equivalence,
    sequence_probability,
)

__all__ = [name for name in dir() if not name.startswith("_") and name != "annotations"]
