"""Observation pairs, regression parameters, residuals and the AR(1) likelihood."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRegressorError, DegenerateResidualsError, InputError, InvalidPhiError

LOG_2PI = math.log(2.0 * math.pi)
MIN_LENGTH = 3


class EpsInit(enum.Enum):
    """Prior on the first residual eps_1."""

    STATIONARY = "stationary"
    UNIFORM = "uniform"


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SeriesPair:
    """Aligned observations x_{1:T}, y_{1:T} with T >= 3."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _as_vector(self.x, "x")
        y = _as_vector(self.y, "y")
        if x.shape != y.shape:
            raise InputError(f"x and y differ in length ({x.size} vs {y.size})")
        if x.size < MIN_LENGTH:
            raise InputError(f"series length T={x.size}; at least T>={MIN_LENGTH} observations are required")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.x.size

    @property
    def t_len(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class RegressionParams:
    """Intercept alpha, slope beta and innovation variance sigma2."""

    alpha: float
    beta: float
    sigma2: float

    def __post_init__(self):
        for name in ("alpha", "beta", "sigma2"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InputError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.sigma2 <= 0.0:
            raise InputError(f"sigma2 must be positive, got {self.sigma2}")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "sigma2": self.sigma2}


@dataclass(frozen=True)
class OlsFit:
    """Least-squares line; ``sigma2`` is the mean squared residual and may be 0."""

    alpha: float
    beta: float
    sigma2: float

    @property
    def zero_residuals(self) -> bool:
        return self.sigma2 == 0.0

    def to_params(self) -> RegressionParams:
        if self.zero_residuals:
            raise DegenerateResidualsError("OLS residuals are identically zero; sigma2 would be 0")
        return RegressionParams(self.alpha, self.beta, self.sigma2)


def compute_residuals(pair: SeriesPair, params) -> np.ndarray:
    """eps_t = y_t - alpha - beta * x_t."""
    return pair.y - params.alpha - params.beta * pair.x


def ols_fit(pair: SeriesPair) -> OlsFit:
    """Ordinary least squares of y on (1, x).

    Raises DegenerateRegressorError when x is constant. A perfect fit is not an
    error here; it is reported through ``OlsFit.zero_residuals``.
    """
    x, y = pair.x, pair.y
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx <= 0.0 or sxx <= 1e-300 * x.size:
        raise DegenerateRegressorError("x has zero variance")
    beta = float(dx @ (y - ym)) / sxx
    alpha = float(ym - beta * xm)
    eps = y - alpha - beta * x
    sigma2 = float(eps @ eps) / x.size
    # exact fits leave rounding-level residuals; treat them as zero
    if math.sqrt(sigma2) <= 1e-12 * max(float(np.sqrt(np.mean((y - ym) ** 2))), 1e-300):
        sigma2 = 0.0
    return OlsFit(alpha, beta, sigma2)


def default_width(eps: np.ndarray) -> float:
    """Width of the improper-uniform eps_1 density: the observed range of eps.

    Falls back to 1.0 for a constant sequence so log-densities stay finite.
    """
    eps = np.asarray(eps, dtype=float)
    w = float(eps.max() - eps.min())
    return w if w > 0.0 else 1.0


def ar1_loglik(eps, phi: float, sigma2: float, init: EpsInit = EpsInit.STATIONARY, width: float | None = None) -> float:
    """log p(eps_{1:T} | phi, sigma2) for the AR(1) residual chain.

    ``init`` selects the eps_1 term: the stationary N(0, sigma2/(1-phi^2)) density,
    or a uniform density of width ``width`` (defaults to the range of eps).
    """
    eps = np.asarray(eps, dtype=float)
    if not -1.0 <= phi <= 1.0:
        raise InvalidPhiError(f"|phi| must be <= 1, got {phi}")
    if sigma2 <= 0.0:
        raise InputError("sigma2 must be positive")
    d = eps[1:] - phi * eps[:-1]
    ll = -0.5 * float(d @ d) / sigma2 - 0.5 * (eps.size - 1) * (LOG_2PI + math.log(sigma2))
    if init is EpsInit.STATIONARY:
        if abs(phi) >= 1.0:
            raise InvalidPhiError("the stationary eps_1 prior needs |phi| < 1")
        v1 = sigma2 / (1.0 - phi * phi)
        ll += -0.5 * (LOG_2PI + math.log(v1)) - 0.5 * eps[0] ** 2 / v1
    else:
        w = default_width(eps) if width is None else float(width)
        if w <= 0.0:
            raise InputError("width must be positive")
        ll -= math.log(w)
    return ll
