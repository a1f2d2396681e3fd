"""Bayes-factor cointegration test and the OLS + Dickey-Fuller baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .em import EmConfig, em_fit
from .errors import DegenerateResidualsError, InputError, ZeroVarianceError
from .phi import PhiMoments, coint_inference
from .series import LOG_2PI, RegressionParams, SeriesPair, compute_residuals, default_width, ols_fit

DEFAULT_LOG_THRESHOLD = 2.0
DF_LEVEL = 0.05
DF_NULL_SIMS = 100_000
DF_NULL_SEED = 20120626
DF_MIN_LENGTH = 10
# eps_1 density width for the random-walk model, in data units; 1.0 leaves
# l_RW as the bare product of increment densities (threshold absorbs the rest)
DEFAULT_RW_WIDTH = 1.0


@dataclass(frozen=True)
class TestResult:
    log_l_rw: float
    log_l_c: float
    log_bayes_factor: float
    threshold_log_c: float
    cointegrated: bool
    fitted: RegressionParams
    phi_moments: PhiMoments
    rw_sigma2: float
    width: float
    em_iterations: int
    em_converged: bool

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return {
            "log_l_rw": self.log_l_rw,
            "log_l_c": self.log_l_c,
            "log_bayes_factor": self.log_bayes_factor,
            "threshold_log_c": self.threshold_log_c,
            "cointegrated": self.cointegrated,
            "fitted": self.fitted.to_dict(),
            "phi_moments": {"m1": self.phi_moments.m1, "m2": self.phi_moments.m2},
            "rw_sigma2": self.rw_sigma2,
            "width": self.width,
            "em_iterations": self.em_iterations,
            "em_converged": self.em_converged,
        }


@dataclass(frozen=True)
class DfResult:
    tau: float
    critical_value: float
    reject_unit_root: bool
    rho: float

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "critical_value": self.critical_value,
            "reject_unit_root": self.reject_unit_root,
            "rho": self.rho,
        }


def rw_sigma2(eps) -> float:
    """ML innovation variance of a random walk: mean squared first difference."""
    eps = np.asarray(eps, dtype=float)
    if eps.size < 2:
        raise InputError("T >= 2 required")
    d = np.diff(eps)
    s2 = float(d @ d) / d.size
    if s2 <= 0.0:
        raise ZeroVarianceError("residual increments are all zero")
    return s2


def rw_loglik(eps, sigma2: float, width: float) -> float:
    """log of (1/width) * prod_t N(eps_t | eps_{t-1}, sigma2)."""
    eps = np.asarray(eps, dtype=float)
    if eps.size < 2:
        raise InputError("T >= 2 required")
    d = np.diff(eps)
    return -math.log(width) - 0.5 * float(d @ d) / sigma2 - 0.5 * d.size * (LOG_2PI + math.log(sigma2))


def bayes_test(
    pair: SeriesPair,
    cfg: EmConfig = EmConfig(),
    log_threshold: float = DEFAULT_LOG_THRESHOLD,
    width: float | str = DEFAULT_RW_WIDTH,
    policy: str = "ml",
) -> TestResult:
    """Compare the cointegration and random-walk likelihoods of the residuals.

    ``policy="ml"`` fits (alpha, beta, sigma2) by EM in the cointegration model
    and reuses (alpha, beta) for the random walk. ``policy="ols"`` keeps the
    least-squares line for both models (ablation only).

    ``width`` is the uniform eps_1 density width of the random-walk model, or
    ``"range"`` to use the range of the fitted residuals. A fixed width makes
    the log Bayes factor shift by log(a) when y is rescaled by a; ``"range"``
    makes it scale invariant.
    """
    if policy == "ml":
        em = em_fit(pair, cfg=cfg)
        params, log_l_c, mom = em.params, em.loglik, em.moments
        iterations, conv = em.trace.iterations, em.trace.converged
    elif policy == "ols":
        params = ols_fit(pair).to_params()
        inf = coint_inference(compute_residuals(pair, params), params.sigma2)
        log_l_c, mom = inf.loglik, inf.moments
        iterations, conv = 0, True
    else:
        raise InputError(f"unknown policy {policy!r}")
    eps = compute_residuals(pair, params)
    s2 = rw_sigma2(eps)
    w = default_width(eps) if width == "range" else float(width)
    if not w > 0.0:
        raise InputError("width must be positive")
    log_l_rw = rw_loglik(eps, s2, w)
    lbf = log_l_rw - log_l_c
    return TestResult(
        log_l_rw=log_l_rw,
        log_l_c=log_l_c,
        log_bayes_factor=lbf,
        threshold_log_c=float(log_threshold),
        cointegrated=bool(lbf < log_threshold),
        fitted=params,
        phi_moments=mom,
        rw_sigma2=s2,
        width=w,
        em_iterations=iterations,
        em_converged=conv,
    )


# ---------------------------------------------------------------------------
# Dickey-Fuller


def _df_tau(eps: np.ndarray) -> tuple[float, float]:
    lag = eps[:-1]
    d = np.diff(eps)
    sxx = float(lag @ lag)
    if sxx <= 0.0:
        raise DegenerateResidualsError("lagged residuals are all zero")
    rho = float(d @ lag) / sxx
    r = d - rho * lag
    s2 = float(r @ r) / (d.size - 1)
    if s2 <= 0.0:
        raise DegenerateResidualsError("Dickey-Fuller regression has a perfect fit")
    return rho / math.sqrt(s2 / sxx), rho


def df_tau_batch(eps: np.ndarray) -> np.ndarray:
    """Row-wise DF t-statistics for a (n, T) array of residual paths."""
    lag = eps[:, :-1]
    d = np.diff(eps, axis=1)
    sxx = np.einsum("ij,ij->i", lag, lag)
    rho = np.einsum("ij,ij->i", d, lag) / sxx
    r = d - rho[:, None] * lag
    s2 = np.einsum("ij,ij->i", r, r) / (d.shape[1] - 1)
    return rho / np.sqrt(s2 / sxx)


@lru_cache(maxsize=32)
def df_null_taus(t_len: int, n_sims: int = DF_NULL_SIMS, seed: int = DF_NULL_SEED) -> np.ndarray:
    """Sorted null distribution of tau for random walks of length ``t_len``.

    Paths start at 0 with standard normal increments, the same law used for
    random-walk residuals in the simulator.
    """
    if t_len < DF_MIN_LENGTH:
        raise InputError(f"Dickey-Fuller calibration needs T >= {DF_MIN_LENGTH}")
    rng = np.random.default_rng([seed, t_len])
    out = np.empty(n_sims)
    chunk = 10_000
    for lo in range(0, n_sims, chunk):
        m = min(chunk, n_sims - lo)
        eps = np.zeros((m, t_len))
        np.cumsum(rng.standard_normal((m, t_len - 1)), axis=1, out=eps[:, 1:])
        out[lo : lo + m] = df_tau_batch(eps)
    out.sort()
    out.flags.writeable = False
    return out


def df_critical_value(t_len: int, level: float = DF_LEVEL, n_sims: int = DF_NULL_SIMS) -> float:
    """Lower ``level`` quantile of the simulated null tau distribution."""
    if level <= 0.0:
        return -math.inf
    if level >= 1.0:
        return math.inf
    return float(np.quantile(df_null_taus(t_len, n_sims), level))


def dickey_fuller(eps, critical_value: float | None = None, level: float = DF_LEVEL) -> DfResult:
    """DF regression of diff(eps) on lagged eps, no intercept and no augmentation."""
    eps = np.asarray(eps, dtype=float)
    if eps.size < DF_MIN_LENGTH:
        raise InputError(f"Dickey-Fuller test needs T >= {DF_MIN_LENGTH}")
    tau, rho = _df_tau(eps)
    cv = df_critical_value(eps.size, level) if critical_value is None else float(critical_value)
    return DfResult(tau=tau, critical_value=cv, reject_unit_root=bool(tau < cv), rho=rho)


def classical_test(pair: SeriesPair, critical_value: float | None = None, level: float = DF_LEVEL) -> DfResult:
    """Two-step test: OLS line, then DF on its residuals. Reject => cointegrated."""
    fit = ols_fit(pair)
    if fit.zero_residuals:
        raise DegenerateResidualsError("OLS residuals are identically zero")
    eps = pair.y - fit.alpha - fit.beta * pair.x
    return dickey_fuller(eps, critical_value, level)
