"""Bayesian cointegration: marginal-likelihood tests with the AR coefficient
integrated out, EM for the regression line, and an exact switching model for
intermittent cointegration."""

from . import _backend
from .cointtest import DfResult, TestResult, bayes_test, classical_test, df_critical_value, dickey_fuller, rw_loglik, rw_sigma2
from .em import EmConfig, EmResult, EmTrace, em_fit, m_step
from .errors import (
    BayesCointError,
    DegenerateRegressorError,
    DegenerateResidualsError,
    InputError,
    InvalidPhiError,
    NumericalError,
    QuadratureError,
    ZeroVarianceError,
)
from .experiments import SegmentedSpec, SimSpec, run_rates, run_roc, run_segment_recovery, simulate, simulate_segmented
from .phi import (
    PhiMoments,
    PhiPosterior,
    Prefactor,
    batch_posterior,
    coint_inference,
    coint_marginal_loglik,
    posterior_moments,
    sequential_filter,
)
from .series import EpsInit, OlsFit, RegressionParams, SeriesPair, ar1_loglik, compute_residuals, ols_fit
from .switching import SwitchConfig, map_phi, map_regimes, switch_em, switch_filter, switch_smooth

backend = _backend.name

__all__ = [
    "BayesCointError",
    "DegenerateRegressorError",
    "DegenerateResidualsError",
    "DfResult",
    "EmConfig",
    "EmResult",
    "EmTrace",
    "EpsInit",
    "InputError",
    "InvalidPhiError",
    "NumericalError",
    "OlsFit",
    "PhiMoments",
    "PhiPosterior",
    "Prefactor",
    "QuadratureError",
    "RegressionParams",
    "SegmentedSpec",
    "SeriesPair",
    "SimSpec",
    "SwitchConfig",
    "TestResult",
    "ZeroVarianceError",
    "ar1_loglik",
    "batch_posterior",
    "bayes_test",
    "classical_test",
    "coint_inference",
    "coint_marginal_loglik",
    "compute_residuals",
    "df_critical_value",
    "dickey_fuller",
    "em_fit",
    "m_step",
    "map_phi",
    "map_regimes",
    "ols_fit",
    "posterior_moments",
    "run_rates",
    "run_roc",
    "run_segment_recovery",
    "rw_loglik",
    "rw_sigma2",
    "sequential_filter",
    "simulate",
    "simulate_segmented",
    "switch_em",
    "switch_filter",
    "switch_smooth",
]
