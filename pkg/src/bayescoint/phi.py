"""Posterior inference over the mean-reversion coefficient phi.

Under a uniform prior on (-1, 1) the posterior of phi given a residual path is
a Gaussian truncated to (-1, 1). With the stationary prior on eps_1 it picks
up an extra sqrt(1 - phi^2) factor, which has no closed-form normaliser and is
handled by :func:`bayescoint.quadrature.phi_integral`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DegenerateResidualsError, InputError
from .quadrature import log_mass, phi_integral, truncnorm_moments
from .series import LOG_2PI, EpsInit, default_width

FLAT_VARIANCE = 1e12


class Prefactor(enum.Enum):
    NONE = "none"
    SEMICIRCLE = "semicircle"


@dataclass(frozen=True)
class PhiStats:
    """e12 = sum_{t>=2} eps_t eps_{t-1};  e1 = sum_{t>=3} eps_{t-1}^2."""

    e12: float
    e1: float


@dataclass(frozen=True)
class PhiMoments:
    m1: float
    m2: float

    @property
    def variance(self) -> float:
        return self.m2 - self.m1 * self.m1


@dataclass(frozen=True)
class PhiPosterior:
    """Density proportional to [sqrt(1-phi^2)] * N(phi | f, F) on (-1, 1)."""

    f: float
    F: float
    prefactor: Prefactor = Prefactor.NONE

    def __post_init__(self):
        if not self.F > 0.0:
            raise InputError(f"posterior variance F must be positive, got {self.F}")

    @property
    def semicircle(self) -> bool:
        return self.prefactor is Prefactor.SEMICIRCLE

    def log_normalizer(self) -> float:
        """log of the integral of the (Gaussian-normalised) density over (-1, 1)."""
        if not self.semicircle:
            return float(log_mass(self.f, self.F))
        res = phi_integral(self.f, self.F, True)
        return res.log_mass - 0.5 * (LOG_2PI + math.log(self.F))

    def log_density(self, phi) -> np.ndarray:
        """Normalised log density; -inf outside (-1, 1)."""
        phi = np.asarray(phi, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -0.5 * (LOG_2PI + math.log(self.F)) - 0.5 * (phi - self.f) ** 2 / self.F
            if self.semicircle:
                out = out + 0.5 * np.log1p(-phi * phi)
        out = out - self.log_normalizer()
        return np.where(np.abs(phi) < 1.0, out, -np.inf)

    def moments(self) -> PhiMoments:
        return posterior_moments(self)


def phi_stats(eps) -> PhiStats:
    eps = np.asarray(eps, dtype=float)
    if eps.size < 3:
        raise InputError("phi statistics need T >= 3")
    e12 = float(eps[1:] @ eps[:-1])
    interior = eps[1:-1]
    return PhiStats(e12=e12, e1=float(interior @ interior))


def batch_posterior(eps, sigma2: float) -> PhiPosterior:
    """Posterior of phi with the stationary eps_1 prior (semicircle prefactor)."""
    st = phi_stats(eps)
    if st.e1 <= 0.0:
        raise DegenerateResidualsError("interior residuals are all zero; the phi posterior is undefined")
    return PhiPosterior(st.e12 / st.e1, sigma2 / st.e1, Prefactor.SEMICIRCLE)


def uniform_batch_posterior(eps, sigma2: float) -> PhiPosterior:
    """Closed-form posterior under an improper-uniform eps_1 prior (no prefactor)."""
    eps = np.asarray(eps, dtype=float)
    lags = eps[:-1]
    s = float(lags @ lags)
    if s <= 0.0:
        raise DegenerateResidualsError("all lagged residuals are zero")
    return PhiPosterior(float(eps[1:] @ lags) / s, sigma2 / s, Prefactor.NONE)


def sequential_filter(eps, sigma2: float) -> PhiPosterior:
    """Posterior of phi (uniform eps_1 prior) by the one-step Kalman recursion.

    Zero lags leave (f, F) unchanged; the recursion starts at the first
    non-zero lag.
    """
    eps = np.ascontiguousarray(eps, dtype=float)
    if eps.size < 2:
        raise InputError("the phi filter needs at least two residuals")
    if sigma2 <= 0.0:
        raise InputError("sigma2 must be positive")
    f, F, k0 = _backend.kernels.phi_filter(eps, float(sigma2))
    if k0 < 0:
        raise DegenerateResidualsError("all lagged residuals are zero")
    return PhiPosterior(f, F, Prefactor.NONE)


def posterior_moments(post: PhiPosterior) -> PhiMoments:
    """<phi> and <phi^2> of the normalised posterior.

    Semicircle posteriors use adaptive quadrature; plain truncated Gaussians use
    the closed form.
    """
    if post.semicircle:
        res = phi_integral(post.f, post.F, True)
        return PhiMoments(res.m1, res.m2)
    m1, m2 = truncnorm_moments(post.f, post.F)
    return PhiMoments(float(m1), float(m2))


@dataclass(frozen=True)
class CointInference:
    """Marginal log likelihood of the cointegration model and the phi posterior."""

    loglik: float
    posterior: PhiPosterior | None
    moments: PhiMoments


def coint_inference(eps, sigma2: float, init: EpsInit = EpsInit.STATIONARY, width: float | None = None) -> CointInference:
    """log l_C together with the posterior and its moments, in one pass.

    With the stationary prior the integral runs over
    ``1/2 * sqrt(1-phi^2) * exp(-(e1 (phi-f)^2) / (2 sigma2))``; the residual
    sum of squares at phi = f is computed directly so that no large terms
    cancel. With the uniform prior the eps_1 term is ``-log(width)``.
    """
    eps = np.asarray(eps, dtype=float)
    t_len = eps.size
    if t_len < 3:
        raise InputError("T >= 3 required")
    if not sigma2 > 0.0:
        raise InputError("sigma2 must be positive")
    log_s2 = math.log(sigma2)

    if init is EpsInit.STATIONARY:
        st = phi_stats(eps)
        base = -0.5 * t_len * (LOG_2PI + log_s2) - math.log(2.0)
        if st.e1 > 0.0:
            f = st.e12 / st.e1
            F = sigma2 / st.e1
            d = eps[1:] - f * eps[:-1]
            rss = eps[0] ** 2 * (1.0 - f * f) + float(d @ d)
            res = phi_integral(f, F, True)
            post = PhiPosterior(f, F, Prefactor.SEMICIRCLE)
        else:
            # e1 = 0 forces e12 = 0: the data carry no information on phi
            rss = float(eps @ eps)
            res = phi_integral(0.0, math.inf, True)
            post = None
        ll = base - 0.5 * rss / sigma2 + res.log_mass
        return CointInference(ll, post, PhiMoments(res.m1, res.m2))

    w = default_width(eps) if width is None else float(width)
    if w <= 0.0:
        raise InputError("width must be positive")
    base = -math.log(w) - 0.5 * (t_len - 1) * (LOG_2PI + log_s2)
    lags = eps[:-1]
    s = float(lags @ lags)
    if s <= 0.0:
        rss = float(eps[1:] @ eps[1:])
        return CointInference(base - 0.5 * rss / sigma2, None, PhiMoments(0.0, 1.0 / 3.0))
    f = float(eps[1:] @ lags) / s
    F = sigma2 / s
    d = eps[1:] - f * lags
    rss = float(d @ d)
    lm = float(log_mass(f, F))
    ll = base - 0.5 * rss / sigma2 - math.log(2.0) + 0.5 * (LOG_2PI + math.log(F)) + lm
    m1, m2 = truncnorm_moments(f, F)
    return CointInference(ll, PhiPosterior(f, F, Prefactor.NONE), PhiMoments(float(m1), float(m2)))


def coint_marginal_loglik(eps, sigma2: float, init: EpsInit = EpsInit.STATIONARY, width: float | None = None) -> float:
    """log of the cointegration-model marginal likelihood, phi ~ U(-1, 1) integrated out."""
    return coint_inference(eps, sigma2, init, width).loglik
