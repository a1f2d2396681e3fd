"""EM estimation of (alpha, beta, sigma2) with phi treated as latent."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRegressorError, DegenerateResidualsError, InputError
from .phi import PhiMoments, PhiPosterior, coint_inference
from .series import LOG_2PI, EpsInit, RegressionParams, SeriesPair, compute_residuals, default_width, ols_fit


@dataclass(frozen=True)
class EmConfig:
    """Stop when the log-likelihood changes by at most ``rel_tol`` (relative).

    ``param_tol`` additionally requires the parameters to settle: the
    likelihood is flat to first order at its maximum, so a likelihood test
    alone leaves the parameters accurate only to about sqrt(rel_tol).
    """

    max_iters: int = 500
    rel_tol: float = 1e-9
    param_tol: float | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise InputError("max_iters must be >= 1")
        if not self.rel_tol > 0.0:
            raise InputError("rel_tol must be positive")
        if self.param_tol is not None and not self.param_tol > 0.0:
            raise InputError("param_tol must be positive")


@dataclass
class EmTrace:
    loglik_history: list[float] = field(default_factory=list)
    params_history: list[RegressionParams] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.loglik_history)

    def is_monotone(self, slack: float = 1e-9) -> bool:
        h = np.asarray(self.loglik_history)
        return bool(np.all(np.diff(h) >= -slack))


@dataclass(frozen=True)
class QuadForm:
    """Expected squared-residual energy as a symmetric tridiagonal form in eps.

    value(eps) = sum_t diag[t] eps_t^2 - 2 sum_{t>=1} off[t-1] eps_t eps_{t-1};
    ``count`` is the (expected) number of Gaussian emission terms.
    """

    diag: np.ndarray
    off: np.ndarray
    count: float

    def value(self, eps) -> float:
        eps = np.asarray(eps, dtype=float)
        return float(self.diag @ (eps * eps) - 2.0 * (self.off @ (eps[1:] * eps[:-1])))

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = self.diag * u
        out[1:] -= self.off * u[:-1]
        out[:-1] -= self.off * u[1:]
        return out

    def energy(self, eps, sigma2: float) -> float:
        return -0.5 * self.value(eps) / sigma2 - 0.5 * self.count * (LOG_2PI + math.log(sigma2))

    def solve(self, pair: SeriesPair, alpha_hold: float | None = None) -> tuple[float, float]:
        """(alpha, beta) minimising value(y - alpha - beta x).

        When the form is blind to a constant shift (only differences enter),
        alpha is not identified; it is then held at ``alpha_hold`` if given.
        """
        xm = float(pair.x.mean())
        xc = pair.x - xm
        one = np.ones_like(xc)
        a1 = self.apply(one)
        ax = self.apply(xc)
        m11 = float(one @ a1)
        if alpha_hold is not None and m11 <= 1e-12 * float(np.sum(np.abs(self.diag))):
            axr = self.apply(pair.x)
            den = float(pair.x @ axr)
            if not den > 0.0:
                raise DegenerateRegressorError("singular normal equations (is x constant?)")
            return float(alpha_hold), float(axr @ (pair.y - alpha_hold)) / den
        m12 = float(one @ ax)
        m22 = float(xc @ ax)
        r1 = float(a1 @ pair.y)
        r2 = float(ax @ pair.y)
        det = m11 * m22 - m12 * m12
        if not det > 1e-14 * abs(m11 * m22) or m22 <= 0.0:
            raise DegenerateRegressorError("singular normal equations (is x constant?)")
        beta = (m11 * r2 - m12 * r1) / det
        a_c = (r1 - m12 * beta) / m11
        return a_c - beta * xm, beta


def static_quadform(t_len: int, mom: PhiMoments, init: EpsInit = EpsInit.STATIONARY) -> QuadForm:
    """Energy weights of the single-regime model for given phi moments."""
    diag = np.full(t_len, 1.0 + mom.m2)
    diag[-1] = 1.0
    if init is EpsInit.STATIONARY:
        diag[0] = 1.0  # eps_1^2 <1 - phi^2> + eps_1^2 <phi^2>
        count = float(t_len)
    else:
        diag[0] = mom.m2
        count = float(t_len - 1)
    return QuadForm(diag, np.full(t_len - 1, mom.m1), count)


def expected_energy(pair: SeriesPair, params: RegressionParams, mom: PhiMoments, init: EpsInit = EpsInit.STATIONARY) -> float:
    """<log p(eps, phi)> up to terms free of (alpha, beta, sigma2)."""
    eps = compute_residuals(pair, params)
    return static_quadform(len(pair), mom, init).energy(eps, params.sigma2)


def m_step(pair: SeriesPair, mom: PhiMoments, sigma2: float | None = None, init: EpsInit = EpsInit.STATIONARY) -> RegressionParams:
    """Maximise the expected energy: solve the 2x2 system, then set sigma2.

    The (alpha, beta) solution does not depend on the incoming ``sigma2``;
    the argument is accepted for symmetry with the E-step.
    """
    qf = static_quadform(len(pair), mom, init)
    alpha, beta = qf.solve(pair)
    eps = pair.y - alpha - beta * pair.x
    s2 = qf.value(eps) / qf.count
    if not s2 > 0.0:
        raise DegenerateResidualsError("variance update collapsed to zero")
    return RegressionParams(alpha, beta, s2)


@dataclass(frozen=True)
class EmResult:
    params: RegressionParams
    posterior: PhiPosterior | None
    moments: PhiMoments
    loglik: float
    trace: EmTrace

    def __iter__(self):
        # (params, posterior, trace) unpacking
        return iter((self.params, self.posterior, self.trace))


def converged(prev: float, cur: float, rel_tol: float) -> bool:
    return abs(cur - prev) <= rel_tol * max(abs(cur), 1.0)


def params_settled(prev: RegressionParams, cur: RegressionParams, tol: float | None) -> bool:
    if tol is None:
        return True
    pairs = ((prev.alpha, cur.alpha), (prev.beta, cur.beta), (prev.sigma2, cur.sigma2))
    return all(abs(b - a) <= tol * max(abs(b), 1.0) for a, b in pairs)


def trace_converged(trace: EmTrace, cfg: EmConfig) -> bool:
    """Convergence test on the last two E-steps recorded in ``trace``."""
    if len(trace.loglik_history) < 2:
        return False
    h, p = trace.loglik_history, trace.params_history
    return converged(h[-2], h[-1], cfg.rel_tol) and params_settled(p[-2], p[-1], cfg.param_tol)


def em_fit(
    pair: SeriesPair,
    init: RegressionParams | None = None,
    cfg: EmConfig = EmConfig(),
    eps_init: EpsInit = EpsInit.STATIONARY,
    width: float | None = None,
) -> EmResult:
    """Alternate phi inference and the closed-form M-step until log l_C settles.

    Starts from OLS when ``init`` is None. For the uniform eps_1 variant the
    width is frozen at its initial-residual value so the objective is fixed.
    """
    if init is None:
        init = ols_fit(pair).to_params()
    params = init
    if eps_init is EpsInit.UNIFORM and width is None:
        width = default_width(compute_residuals(pair, params))
    trace = EmTrace()
    inference = None
    for _ in range(cfg.max_iters):
        eps = compute_residuals(pair, params)
        inference = coint_inference(eps, params.sigma2, eps_init, width)
        trace.loglik_history.append(inference.loglik)
        trace.params_history.append(params)
        if trace_converged(trace, cfg):
            trace.converged = True
            break
        if len(trace.loglik_history) == cfg.max_iters:
            break
        params = m_step(pair, inference.moments, params.sigma2, eps_init)
    return EmResult(params, inference.posterior, inference.moments, inference.loglik, trace)
